//! From motion-capture markers to distance sets, and least-squares fits of
//! the canonical surfaces to measured end-effector clouds.
//!
//! All fits minimise orthogonal distance: tracking error is isotropic, so a
//! z-only residual would bias tilted or curved surfaces. Sums run in input
//! order, so results are reproducible for a given cloud.

use std::f64::consts::TAU;
use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector2};

use crate::distance::{canonical_frame, DistanceSet, Point3, RigidFrame};
use crate::error::{Error, Result};
use crate::kinematics::azimuth_deg;

pub const LABELS: [&str; 5] = ["P1", "P2", "P3", "P4", "P5"];

/// One snapshot of the five tracked markers (mm).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MarkerFrame {
    pub markers: [Option<Point3>; 5],
    pub timestamp: Option<f64>,
}

impl MarkerFrame {
    pub fn from_points(points: [Point3; 5]) -> Self {
        MarkerFrame {
            markers: points.map(Some),
            timestamp: None,
        }
    }

    pub fn get(&self, index: usize) -> Result<Point3> {
        self.markers[index].ok_or(Error::MissingMarker(LABELS[index]))
    }

    /// All five markers, or the first missing label.
    pub fn points(&self) -> Result<[Point3; 5]> {
        Ok([
            self.get(0)?,
            self.get(1)?,
            self.get(2)?,
            self.get(3)?,
            self.get(4)?,
        ])
    }

    /// Re-expresses every marker in the frame with P1 at the origin, P2 on
    /// +z and P3 in the `x >= 0` half of the xz-plane. The transform is
    /// returned so clouds recorded in the same camera frame can follow.
    pub fn normalized(&self) -> Result<(MarkerFrame, RigidFrame)> {
        let (p1, p2, p3) = (self.get(0)?, self.get(1)?, self.get(2)?);
        let iso = canonical_frame(&p1, &p2, &p3).ok_or_else(|| {
            Error::InvalidDistances("P1 and P2 coincide; axis 1 is undefined".into())
        })?;
        let markers = self.markers.map(|m| m.map(|p| iso.apply(&p)));
        Ok((
            MarkerFrame {
                markers,
                timestamp: self.timestamp,
            },
            iso,
        ))
    }
}

/// Distances read off a marker frame. `s15` and `s25` depend on the pose and
/// are reported only for cross-checking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkerDistances {
    pub distances: DistanceSet,
    pub s15: f64,
    pub s25: f64,
}

impl MarkerDistances {
    pub fn d15(&self) -> f64 {
        self.s15.sqrt()
    }

    pub fn d25(&self) -> f64 {
        self.s25.sqrt()
    }
}

/// Exact pairwise squared distances of the markers.
///
/// No validation is applied: a frame with P3 on top of P4 yields `s34 = 0`
/// here and fails later, where the second axis is needed.
pub fn distances_from_markers(frame: &MarkerFrame) -> Result<MarkerDistances> {
    let p = frame.points()?;
    if p.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
        return Err(Error::InvalidDistances("marker coordinates must be finite".into()));
    }
    Ok(MarkerDistances {
        distances: DistanceSet::from_points(&p),
        s15: (p[4] - p[0]).norm_squared(),
        s25: (p[4] - p[1]).norm_squared(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TorusHint {
    /// Meridian circle clear of the axis: `rho0 > r`.
    Ring,
    /// Meridian circle touching the axis.
    Horn,
    /// Meridian circle crossing the axis: the "overlapping sphere".
    Spindle,
}

impl fmt::Display for TorusHint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TorusHint::Ring => "ring",
            TorusHint::Horn => "horn",
            TorusHint::Spindle => "spindle",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitParams {
    Sphere {
        centre: Point3,
        radius: f64,
    },
    Plane {
        /// Unit normal with non-negative z component.
        normal: Point3,
        centroid: Point3,
        /// Angle between the normal and +z, radians.
        tilt: f64,
        /// Height where the plane crosses the z-axis, when it is
        /// near-horizontal.
        height: Option<f64>,
    },
    Torus {
        rho0: f64,
        z0: f64,
        radius: f64,
        hint: TorusHint,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    Sphere,
    Plane,
    Torus,
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SurfaceKind::Sphere => "sphere",
            SurfaceKind::Plane => "plane",
            SurfaceKind::Torus => "torus",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub params: FitParams,
    pub rms: f64,
    pub max: f64,
    /// Share of points within `3 * rms` of the surface.
    pub inlier_fraction: f64,
    pub iterations: usize,
}

impl FitReport {
    pub fn kind(&self) -> SurfaceKind {
        match self.params {
            FitParams::Sphere { .. } => SurfaceKind::Sphere,
            FitParams::Plane { .. } => SurfaceKind::Plane,
            FitParams::Torus { .. } => SurfaceKind::Torus,
        }
    }

    fn new(params: FitParams, residuals: &[f64], scale: f64, iterations: usize) -> Self {
        let n = residuals.len() as f64;
        let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
        let max = residuals.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
        let bound = (3.0 * rms).max(1e-12 * scale);
        let inliers = residuals.iter().filter(|r| r.abs() <= bound).count();
        FitReport {
            params,
            rms,
            max,
            inlier_fraction: inliers as f64 / n,
            iterations,
        }
    }
}

const MAX_ITERATIONS: usize = 50;
/// Singular-value ratio below which a cloud counts as flat (or a line).
const FLATNESS: f64 = 1e-9;
/// Tilt below which a plane reports its height.
pub const NEAR_HORIZONTAL: f64 = 0.1;

fn check_finite(points: &[Point3]) -> Result<()> {
    if points.iter().all(|p| p.iter().all(|c| c.is_finite())) {
        Ok(())
    } else {
        Err(Error::DegenerateCloud("non-finite coordinates".into()))
    }
}

fn centroid(points: &[Point3]) -> Point3 {
    points.iter().fold(Point3::zeros(), |a, p| a + p) / points.len() as f64
}

fn extent(points: &[Point3], c: &Point3) -> f64 {
    points.iter().fold(0.0_f64, |m, p| m.max((p - c).norm()))
}

/// Eigen-decomposition of the centred scatter matrix, ascending.
fn principal_axes(points: &[Point3], c: &Point3) -> ([f64; 3], [Point3; 3]) {
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p - c;
        scatter += d * d.transpose();
    }
    let eig = SymmetricEigen::new(scatter);
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    (
        order.map(|i| eig.eigenvalues[i].max(0.0)),
        order.map(|i| eig.eigenvectors.column(i).into_owned()),
    )
}

/// Gauss-Newton on residuals `r(x)` with Jacobian `J(x)`, solved by SVD so a
/// rank-deficient step degrades gracefully. Stops when the step is below
/// `1e-14` of `scale` or the cost stops improving.
fn gauss_newton<F>(mut x: DVector<f64>, scale: f64, eval: F) -> (DVector<f64>, usize)
where
    F: Fn(&DVector<f64>) -> (DVector<f64>, DMatrix<f64>),
{
    let (mut r, mut j) = eval(&x);
    let mut cost = r.norm_squared();
    for it in 1..=MAX_ITERATIONS {
        let step = match j.clone().svd(true, true).solve(&(-&r), 1e-15) {
            Ok(s) => s,
            Err(_) => return (x, it),
        };
        let candidate = &x + &step;
        let (r2, j2) = eval(&candidate);
        let cost2 = r2.norm_squared();
        if !(cost2 <= cost) {
            return (x, it);
        }
        x = candidate;
        r = r2;
        j = j2;
        let done = step.norm() <= 1e-14 * scale || cost - cost2 <= 1e-30 * cost.max(f64::MIN_POSITIVE);
        cost = cost2;
        if done {
            return (x, it);
        }
    }
    (x, MAX_ITERATIONS)
}

/// Sphere through the cloud: an algebraic fit on
/// `|p|^2 = 2 c . p + k` seeds a geometric Gauss-Newton refinement.
pub fn fit_sphere(points: &[Point3]) -> Result<FitReport> {
    if points.len() < 4 {
        return Err(Error::DegenerateCloud(format!(
            "sphere fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    check_finite(points)?;
    let c0 = centroid(points);
    let span = extent(points, &c0);
    let (values, _) = principal_axes(points, &c0);
    if !(span > 0.0) || values[0].sqrt() <= FLATNESS * values[2].sqrt() {
        return Err(Error::DegenerateCloud("points are coplanar or collinear".into()));
    }

    // Centred and scaled for conditioning.
    let local: Vec<Point3> = points.iter().map(|p| (p - c0) / span).collect();
    let a = DMatrix::from_fn(local.len(), 4, |i, k| {
        if k < 3 {
            2.0 * local[i][k]
        } else {
            1.0
        }
    });
    let b = DVector::from_iterator(local.len(), local.iter().map(|p| p.norm_squared()));
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-15)
        .map_err(|e| Error::DegenerateCloud(e.to_string()))?;
    let centre = Point3::new(sol[0], sol[1], sol[2]);
    let radius = (sol[3] + centre.norm_squared()).max(0.0).sqrt();

    let x0 = DVector::from_vec(vec![centre.x, centre.y, centre.z, radius]);
    let (x, iterations) = gauss_newton(x0, 1.0, |x| {
        let c = Point3::new(x[0], x[1], x[2]);
        let mut r = DVector::zeros(local.len());
        let mut j = DMatrix::zeros(local.len(), 4);
        for (i, p) in local.iter().enumerate() {
            let d = p - c;
            let n = d.norm();
            r[i] = n - x[3];
            if n > 0.0 {
                for k in 0..3 {
                    j[(i, k)] = -d[k] / n;
                }
            }
            j[(i, 3)] = -1.0;
        }
        (r, j)
    });

    let centre = c0 + Point3::new(x[0], x[1], x[2]) * span;
    let radius = x[3].abs() * span;
    let residuals: Vec<f64> = points.iter().map(|p| (p - centre).norm() - radius).collect();
    Ok(FitReport::new(
        FitParams::Sphere { centre, radius },
        &residuals,
        span,
        iterations,
    ))
}

/// Total-least-squares plane: the normal is the direction of least spread of
/// the centred cloud.
pub fn fit_plane(points: &[Point3]) -> Result<FitReport> {
    if points.len() < 3 {
        return Err(Error::DegenerateCloud(format!(
            "plane fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    check_finite(points)?;
    let c = centroid(points);
    let span = extent(points, &c);
    let (values, vectors) = principal_axes(points, &c);
    if !(span > 0.0) || values[1].sqrt() <= FLATNESS * values[2].sqrt() {
        return Err(Error::DegenerateCloud("points are collinear".into()));
    }
    let mut normal = vectors[0].normalize();
    if normal.z < 0.0 {
        normal = -normal;
    }
    let tilt = normal.z.clamp(-1.0, 1.0).acos();
    let height = (tilt <= NEAR_HORIZONTAL).then(|| normal.dot(&c) / normal.z);
    let residuals: Vec<f64> = points.iter().map(|p| normal.dot(&(p - c))).collect();
    Ok(FitReport::new(
        FitParams::Plane {
            normal,
            centroid: c,
            tilt,
            height,
        },
        &residuals,
        span,
        0,
    ))
}

/// Bands of meridian angle used to look for azimuthal structure.
const MERIDIAN_BINS: usize = 12;

/// Surface of revolution about the z-axis with a circular meridian.
///
/// Each point is reduced to `(rho, z)`; a circle is fitted to those by the
/// same algebraic-then-geometric scheme as [`fit_sphere`]. The cloud is
/// rejected as [`Error::NotAxisymmetric`] when its residuals vary with
/// azimuth by more than three times their local spread.
pub fn fit_torus_of_revolution(points: &[Point3]) -> Result<FitReport> {
    if points.len() < 10 {
        return Err(Error::DegenerateCloud(format!(
            "torus fit needs at least 10 points, got {}",
            points.len()
        )));
    }
    check_finite(points)?;
    let meridian: Vec<Vector2<f64>> = points
        .iter()
        .map(|p| Vector2::new(p.xy().norm(), p.z))
        .collect();
    let m0 = meridian.iter().fold(Vector2::zeros(), |a, p| a + p) / meridian.len() as f64;
    let span = meridian.iter().fold(0.0_f64, |m, p| m.max((p - m0).norm()));
    if !(span > 0.0) {
        return Err(Error::DegenerateCloud("meridian points coincide".into()));
    }
    let local: Vec<Vector2<f64>> = meridian.iter().map(|p| (p - m0) / span).collect();

    let a = DMatrix::from_fn(local.len(), 3, |i, k| {
        if k < 2 {
            2.0 * local[i][k]
        } else {
            1.0
        }
    });
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    if sv.min() <= FLATNESS * sv.max() {
        return Err(Error::DegenerateCloud("meridian points are collinear".into()));
    }
    let b = DVector::from_iterator(local.len(), local.iter().map(|p| p.norm_squared()));
    let sol = svd
        .solve(&b, 1e-15)
        .map_err(|e| Error::DegenerateCloud(e.to_string()))?;
    let centre = Vector2::new(sol[0], sol[1]);
    let radius = (sol[2] + centre.norm_squared()).max(0.0).sqrt();

    let x0 = DVector::from_vec(vec![centre.x, centre.y, radius]);
    let (x, iterations) = gauss_newton(x0, 1.0, |x| {
        let c = Vector2::new(x[0], x[1]);
        let mut r = DVector::zeros(local.len());
        let mut j = DMatrix::zeros(local.len(), 3);
        for (i, p) in local.iter().enumerate() {
            let d = p - c;
            let n = d.norm();
            r[i] = n - x[2];
            if n > 0.0 {
                j[(i, 0)] = -d.x / n;
                j[(i, 1)] = -d.y / n;
            }
            j[(i, 2)] = -1.0;
        }
        (r, j)
    });
    let rho0 = m0.x + x[0] * span;
    let z0 = m0.y + x[1] * span;
    let radius = x[2].abs() * span;
    let c = Vector2::new(rho0, z0);
    let residuals: Vec<f64> = meridian.iter().map(|p| (p - c).norm() - radius).collect();

    check_axisymmetric(points, &residuals, &c, span)?;

    let hint = if (rho0 - radius).abs() <= 1e-6 * rho0.abs().max(radius) {
        TorusHint::Horn
    } else if rho0 > radius {
        TorusHint::Ring
    } else {
        TorusHint::Spindle
    };
    Ok(FitReport::new(
        FitParams::Torus {
            rho0,
            z0,
            radius,
            hint,
        },
        &residuals,
        span,
        iterations,
    ))
}

/// Within each band of meridian angle, the residuals are regressed on the
/// first two azimuthal harmonics. For an axisymmetric cloud the harmonic part
/// is noise; it is compared with what the regression leaves unexplained.
fn check_axisymmetric(
    points: &[Point3],
    residuals: &[f64],
    centre: &Vector2<f64>,
    span: f64,
) -> Result<()> {
    let mut bands: Vec<Vec<usize>> = vec![Vec::new(); MERIDIAN_BINS];
    for (i, p) in points.iter().enumerate() {
        let m = (p.z - centre.y).atan2(p.xy().norm() - centre.x) / TAU + 0.5;
        bands[((m * MERIDIAN_BINS as f64) as usize).min(MERIDIAN_BINS - 1)].push(i);
    }

    let mut structure = 0.0;
    let mut within = 0.0;
    for band in bands.iter().filter(|b| !b.is_empty()) {
        let r = DVector::from_iterator(band.len(), band.iter().map(|&i| residuals[i]));
        let mean = r.mean();
        let harmonics = |i: usize, k: usize| {
            let psi = azimuth_deg(&points[i]).to_radians();
            match k {
                0 => 1.0,
                1 => psi.cos(),
                2 => psi.sin(),
                3 => (2.0 * psi).cos(),
                _ => (2.0 * psi).sin(),
            }
        };
        let a = DMatrix::from_fn(band.len(), 5, |row, k| harmonics(band[row], k));
        let fitted = match a.clone().svd(true, true).solve(&r, 1e-9) {
            Ok(coef) if band.len() > 5 => a * coef,
            _ => DVector::from_element(band.len(), mean),
        };
        structure += fitted.iter().map(|f| (f - mean).powi(2)).sum::<f64>();
        within += (&r - &fitted).norm_squared();
    }
    let n = points.len() as f64;
    let structure = (structure / n).sqrt();
    let within = (within / n).sqrt();
    if structure > 3.0 * within + 1e-9 * span {
        return Err(Error::NotAxisymmetric {
            structure,
            rms: within,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{PI};

    fn sphere_points(centre: Point3, radius: f64, n: usize, polar_max: f64) -> Vec<Point3> {
        // Fibonacci lattice restricted to polar angles below `polar_max`.
        let golden = PI * (3.0 - 5.0_f64.sqrt());
        let cos_min = polar_max.cos();
        (0..n)
            .map(|i| {
                let z = 1.0 - (1.0 - cos_min) * (i as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                centre + Point3::new(r * phi.cos(), r * phi.sin(), z) * radius
            })
            .collect()
    }

    #[test]
    fn marker_distances_round_trip() {
        let pts = [
            Point3::new(10.0, -4.0, 2.0),
            Point3::new(11.0, -3.0, 59.0),
            Point3::new(400.0, 300.0, 100.0),
            Point3::new(420.0, 310.0, 140.0),
            Point3::new(0.0, 500.0, 300.0),
        ];
        let md = distances_from_markers(&MarkerFrame::from_points(pts)).unwrap();
        assert_eq!(md.distances, DistanceSet::from_points(&pts));
        assert_relative_eq!(md.d15(), (pts[4] - pts[0]).norm());
        assert_relative_eq!(md.d25(), (pts[4] - pts[1]).norm());
    }

    #[test]
    fn missing_marker_is_named() {
        let mut frame = MarkerFrame::from_points([Point3::zeros(); 5]);
        frame.markers[3] = None;
        assert!(matches!(
            distances_from_markers(&frame),
            Err(Error::MissingMarker("P4"))
        ));
    }

    #[test]
    fn normalization_puts_markers_in_canonical_frame() {
        let frame = MarkerFrame::from_points([
            Point3::new(1.0, 2.0, 3.0),
            Point3::new(1.0, 2.0 + 58.0, 3.0),
            Point3::new(300.0, 50.0, 7.0),
            Point3::new(320.0, 60.0, 9.0),
            Point3::new(100.0, 100.0, 100.0),
        ]);
        let (n, _) = frame.normalized().unwrap();
        let p = n.points().unwrap();
        assert!(p[0].norm() < 1e-12);
        assert!(p[1].xy().norm() < 1e-12);
        assert_relative_eq!(p[1].z, 58.0, epsilon = 1e-12);
        assert!(p[2].y.abs() < 1e-12 && p[2].x >= 0.0);
        let before = distances_from_markers(&frame).unwrap();
        let after = distances_from_markers(&n).unwrap();
        for (a, b) in before.distances.lengths().iter().zip(after.distances.lengths()) {
            assert_relative_eq!(*a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn exact_sphere() {
        let centre = Point3::new(3.0, -7.0, 31.0);
        let fit = fit_sphere(&sphere_points(centre, 460.0, 300, PI)).unwrap();
        let FitParams::Sphere { centre: c, radius } = fit.params else {
            panic!()
        };
        assert!((radius - 460.0).abs() < 1e-9);
        assert!((c - centre).norm() < 1e-9);
        assert!(fit.rms < 1e-9);
        assert_eq!(fit.inlier_fraction, 1.0);
    }

    #[test]
    fn hemisphere_recovers_centre() {
        let centre = Point3::new(0.0, 0.0, 58.0);
        let fit = fit_sphere(&sphere_points(centre, 455.0, 200, PI / 2.0)).unwrap();
        let FitParams::Sphere { centre: c, .. } = fit.params else {
            panic!()
        };
        assert!((c - centre).norm() < 1e-6);
    }

    #[test]
    fn planar_cloud_is_not_a_sphere() {
        let pts: Vec<Point3> = (0..20)
            .map(|i| Point3::new(i as f64, (i * i) as f64, 5.0))
            .collect();
        assert!(matches!(fit_sphere(&pts), Err(Error::DegenerateCloud(_))));
        assert!(matches!(fit_sphere(&pts[..3]), Err(Error::DegenerateCloud(_))));
    }

    #[test]
    fn horizontal_plane() {
        let pts: Vec<Point3> = (0..50)
            .map(|i| {
                let a = i as f64 * 0.7;
                Point3::new(200.0 * a.cos(), 150.0 * (1.3 * a).sin(), 100.0)
            })
            .collect();
        let fit = fit_plane(&pts).unwrap();
        let FitParams::Plane {
            normal,
            tilt,
            height,
            ..
        } = fit.params
        else {
            panic!()
        };
        assert!((normal - Point3::z()).norm() < 1e-12);
        assert!(tilt < 1e-9);
        assert!((height.unwrap() - 100.0).abs() < 1e-9);
        assert!(fit.rms < 1e-9);
    }

    #[test]
    fn tilted_plane() {
        let tilt_true = 0.3_f64;
        let n = Point3::new(tilt_true.sin(), 0.0, tilt_true.cos());
        let e1 = Point3::new(tilt_true.cos(), 0.0, -tilt_true.sin());
        let e2 = Point3::y();
        let pts: Vec<Point3> = (0..40)
            .map(|i| {
                let t = i as f64;
                n * 12.0 + e1 * (t * 3.1).sin() * 90.0 + e2 * (t * 1.7).cos() * 80.0
            })
            .collect();
        let fit = fit_plane(&pts).unwrap();
        let FitParams::Plane { normal, tilt, height, .. } = fit.params else {
            panic!()
        };
        assert!((tilt - tilt_true).abs() < 1e-9);
        assert!((normal.norm() - 1.0).abs() < 1e-12);
        assert!(height.is_none());
    }

    #[test]
    fn collinear_plane_fit_is_rejected() {
        let pts: Vec<Point3> = (0..10).map(|i| Point3::new(i as f64, 2.0 * i as f64, 0.0)).collect();
        assert!(matches!(fit_plane(&pts), Err(Error::DegenerateCloud(_))));
    }

    fn ring_torus(rho0: f64, z0: f64, r: f64) -> Vec<Point3> {
        let mut pts = Vec::new();
        for i in 0..24 {
            let psi = TAU * i as f64 / 24.0 + 0.01;
            for j in 0..18 {
                let phi = TAU * j as f64 / 18.0;
                let rho = rho0 + r * phi.cos();
                pts.push(Point3::new(rho * psi.cos(), rho * psi.sin(), z0 + r * phi.sin()));
            }
        }
        pts
    }

    #[test]
    fn torus_parameters() {
        let fit = fit_torus_of_revolution(&ring_torus(300.0, 40.0, 120.0)).unwrap();
        let FitParams::Torus { rho0, z0, radius, hint } = fit.params else {
            panic!()
        };
        assert_relative_eq!(rho0, 300.0, epsilon = 1e-9);
        assert_relative_eq!(z0, 40.0, epsilon = 1e-9);
        assert_relative_eq!(radius, 120.0, epsilon = 1e-9);
        assert_eq!(hint, TorusHint::Ring);
        assert!(fit.rms < 1e-9);
    }

    #[test]
    fn sphere_as_spindle_torus() {
        let fit =
            fit_torus_of_revolution(&sphere_points(Point3::new(0.0, 0.0, 20.0), 455.0, 400, PI))
                .unwrap();
        let FitParams::Torus { rho0, hint, .. } = fit.params else {
            panic!()
        };
        assert!(rho0.abs() < 1e-6);
        assert_eq!(hint, TorusHint::Spindle);
    }

    #[test]
    fn lopsided_cloud_is_not_axisymmetric() {
        // A sphere whose centre is off the axis, as in a frame that was never
        // normalised, and a mildly elliptic cloud.
        let shifted = sphere_points(Point3::new(80.0, 30.0, 0.0), 455.0, 600, PI);
        let elliptic: Vec<Point3> = sphere_points(Point3::zeros(), 1.0, 600, PI)
            .into_iter()
            .map(|p| Point3::new(480.0 * p.x, 430.0 * p.y, 455.0 * p.z))
            .collect();
        for pts in [shifted, elliptic] {
            assert!(matches!(
                fit_torus_of_revolution(&pts),
                Err(Error::NotAxisymmetric { .. })
            ));
        }
    }

}
