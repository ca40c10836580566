//! The workspace surface `Γ(x, y, z) = 0` traced by the end effector.
//!
//! With P1 at the origin and P2 on the positive z-axis the two pose-dependent
//! squared distances become `s15 = x² + y² + z²` and
//! `s25 = x² + y² + z² - 2 d12 z + s12`; substituting them into the five-point
//! Cayley-Menger determinant gives a quartic in the six-term basis
//!
//! ```text
//! (x²+y²+z²)², d12 z (x²+y²+z²), x²+y², z², d12 z, 1
//! ```
//!
//! Values are reported divided by `L^8` so that tolerances are dimensionless.

use std::f64::consts::TAU;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::distance::{
    cm_det_5, cm_det_block, is_embeddable, DistanceSet, Embedding, Point3, DENOMINATOR_FLOOR,
};
use crate::error::{Error, Result};

/// Length degree of each basis term (counting the explicit `d12` factors).
pub const BASIS_DEGREES: [i32; 6] = [4, 4, 2, 2, 2, 0];

/// Condition number above which coefficient recovery gives up.
pub const MAX_CONDITION: f64 = 1e12;

/// Default classification tolerance, relative to `L`.
pub const DEFAULT_TAU: f64 = 0.05;

pub fn basis(p: &Point3, d12: f64) -> [f64; 6] {
    let r2 = p.norm_squared();
    [
        r2 * r2,
        d12 * p.z * r2,
        p.x * p.x + p.y * p.y,
        p.z * p.z,
        d12 * p.z,
        1.0,
    ]
}

/// Evaluator of `Γ` for one (embeddable) distance set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Workspace {
    distances: DistanceSet,
    scale: f64,
    d12: f64,
}

impl Workspace {
    pub fn new(distances: DistanceSet) -> Result<Self> {
        distances.validate()?;
        if let Some(v) = is_embeddable(&distances).violation() {
            return Err(Error::NotEmbeddable {
                simplex: v.simplex,
                value: v.value,
                tolerance: v.tolerance,
            });
        }
        Ok(Workspace {
            scale: distances.scale(),
            d12: distances.d12(),
            distances,
        })
    }

    pub fn distances(&self) -> &DistanceSet {
        &self.distances
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Unscaled determinant at end-effector position `p`.
    pub fn determinant(&self, p: &Point3) -> f64 {
        let s15 = p.norm_squared();
        let s25 = s15 - 2.0 * self.d12 * p.z + self.distances.s12;
        let table = self.distances.table(s15, s25);
        let floor = DENOMINATOR_FLOOR * self.scale * self.scale;
        if s15 > floor && s25 > floor {
            if let Ok(v) = cm_det_block(&table) {
                return v;
            }
        }
        cm_det_5(&table)
    }

    /// `Γ(p) / L^8`.
    pub fn gamma(&self, p: &Point3) -> f64 {
        self.determinant(p) / self.scale.powi(8)
    }
}

/// Scaled workspace residual of `p` for the distance set `ds`.
pub fn gamma_eval(ds: &DistanceSet, p: &Point3) -> Result<f64> {
    Ok(Workspace::new(*ds)?.gamma(p))
}

/// Coefficients of `Γ` in the six-term basis.
///
/// `q` is normalised so that `max |q_i| L^deg_i = 1`; multiplying the basis
/// evaluation by `normalization` reproduces [`Workspace::gamma`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticCoefficients {
    pub q: [f64; 6],
    pub d12: f64,
    pub scale: f64,
    pub normalization: f64,
    /// Worst held-out misfit, in units of `normalization`.
    pub holdout_residual: f64,
    pub condition: f64,
}

impl QuarticCoefficients {
    /// Normalised polynomial value.
    pub fn eval(&self, p: &Point3) -> f64 {
        basis(p, self.d12)
            .iter()
            .zip(self.q.iter())
            .map(|(b, q)| b * q)
            .sum()
    }

    /// Same units as [`Workspace::gamma`].
    pub fn eval_scaled(&self, p: &Point3) -> f64 {
        self.normalization * self.eval(p)
    }

    /// Coefficients multiplied by `L^deg`, the form used for comparisons.
    pub fn dimensionless(&self) -> [f64; 6] {
        let mut out = self.q;
        for (c, deg) in out.iter_mut().zip(BASIS_DEGREES) {
            *c *= self.scale.powi(deg);
        }
        out
    }
}

fn radical_inverse(mut i: u32, base: u32) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

/// Halton points in the shell `0.5 <= |p| <= 1.5` (unit-scale coordinates).
fn sample_points(start: u32, count: u32) -> Vec<Point3> {
    (start..start + count)
        .map(|i| {
            let r = 0.5 + radical_inverse(i, 2);
            let cos_t = 2.0 * radical_inverse(i, 3) - 1.0;
            let sin_t = (1.0 - cos_t * cos_t).sqrt();
            let phi = TAU * radical_inverse(i, 5);
            Point3::new(r * sin_t * phi.cos(), r * sin_t * phi.sin(), r * cos_t)
        })
        .collect()
}

const FIT_POINTS: u32 = 24;
const HOLDOUT_POINTS: u32 = 8;

/// Recovers the six basis coefficients by interpolating [`Workspace::gamma`]
/// at fixed quasi-random points and checks them on held-out points.
pub fn extract_coefficients(ds: &DistanceSet) -> Result<QuarticCoefficients> {
    let ws = Workspace::new(*ds)?;
    let l = ws.scale();
    let d12_unit = ds.d12() / l;

    let fit = sample_points(1, FIT_POINTS);
    let rows: Vec<[f64; 6]> = fit.iter().map(|p| basis(p, d12_unit)).collect();
    let a = DMatrix::from_fn(rows.len(), 6, |i, j| rows[i][j]);
    let b = DVector::from_iterator(fit.len(), fit.iter().map(|p| ws.gamma(&(p * l))));

    let svd = a.svd(true, true);
    let max_sv = svd.singular_values.max();
    let min_sv = svd.singular_values.min();
    let condition = if min_sv > 0.0 { max_sv / min_sv } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let solution = svd
        .solve(&b, 0.0)
        .map_err(|_| Error::IllConditioned { condition })?;
    let unit: [f64; 6] = std::array::from_fn(|i| solution[i]);

    let normalization = unit.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if !(normalization > 0.0) {
        // Γ vanished at every sample: nothing to normalise against.
        return Err(Error::IllConditioned {
            condition: f64::INFINITY,
        });
    }

    let holdout_residual = sample_points(1 + FIT_POINTS, HOLDOUT_POINTS)
        .iter()
        .map(|p| {
            let model: f64 = basis(p, d12_unit)
                .iter()
                .zip(unit.iter())
                .map(|(b, c)| b * c)
                .sum();
            (ws.gamma(&(p * l)) - model).abs() / normalization
        })
        .fold(0.0, f64::max);

    let mut q = [0.0; 6];
    for i in 0..6 {
        q[i] = unit[i] / normalization / l.powi(BASIS_DEGREES[i]);
    }
    Ok(QuarticCoefficients {
        q,
        d12: ds.d12(),
        scale: l,
        normalization,
        holdout_residual,
        condition,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    Spherical,
    PumaLike,
    Scara,
    GeneralArticulated,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Spherical => "Spherical",
            Category::PumaLike => "PumaLike",
            Category::Scara => "Scara",
            Category::GeneralArticulated => "GeneralArticulated",
        })
    }
}

/// Relative position of the two joint axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisGeometry {
    /// Angle between the axes, in `[0, π/2]`.
    pub alpha: f64,
    /// Length of the common normal (distance between the lines).
    pub common_normal: f64,
    /// Height on axis 1 of the common normal's foot; `None` for parallel axes.
    pub foot_height: Option<f64>,
    /// Foot of the common normal on axis 2; `None` for parallel axes.
    pub foot_on_axis2: Option<Point3>,
    pub axis2_point: Point3,
    pub axis2_dir: Point3,
}

impl AxisGeometry {
    pub fn of(emb: &Embedding) -> Self {
        let axis = emb.p4 - emb.p3;
        let u = axis.normalize();
        let ez = Point3::z();
        let cross = ez.cross(&u);
        let sin_a = cross.norm();
        let cos_a = u.z.abs();
        let alpha = sin_a.atan2(cos_a);
        let p3 = emb.p3;
        if sin_a < 1e-12 {
            return AxisGeometry {
                alpha,
                common_normal: (p3.x * p3.x + p3.y * p3.y).sqrt(),
                foot_height: None,
                foot_on_axis2: None,
                axis2_point: p3,
                axis2_dir: u,
            };
        }
        let b = u.z;
        let d = p3.z;
        let e = u.dot(&p3);
        let den = 1.0 - b * b;
        let s = (d - b * e) / den;
        let t = (b * d - e) / den;
        AxisGeometry {
            alpha,
            common_normal: (p3.dot(&cross) / sin_a).abs(),
            foot_height: Some(s),
            foot_on_axis2: Some(p3 + u * t),
            axis2_point: p3,
            axis2_dir: u,
        }
    }

    pub fn sin_alpha(&self) -> f64 {
        self.alpha.sin()
    }
}

/// Parameters of the general (skew-axis) workspace, a surface of revolution
/// whose meridian is generated by P5's circle about axis 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusParams {
    pub common_normal: f64,
    pub alpha: f64,
    pub foot_height_axis1: Option<f64>,
    pub foot_height_axis2: Option<f64>,
    pub circle_centre: Point3,
    pub axis2_dir: Point3,
    /// Distance of P5 from axis 2.
    pub tube_radius: f64,
    pub degenerate_tube: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Topology {
    /// Sphere about the base point P1.
    Spherical { radius: f64 },
    /// Sphere about the axis intersection `(0, 0, centre_height)`.
    PumaLike { centre_height: f64, radius: f64 },
    /// Plane `z = plane_height`.
    Scara { plane_height: f64 },
    GeneralArticulated(TorusParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyClass {
    pub topology: Topology,
    pub axes: AxisGeometry,
    pub tau: f64,
    pub scale: f64,
    pub distances: DistanceSet,
}

impl TopologyClass {
    pub fn category(&self) -> Category {
        match self.topology {
            Topology::Spherical { .. } => Category::Spherical,
            Topology::PumaLike { .. } => Category::PumaLike,
            Topology::Scara { .. } => Category::Scara,
            Topology::GeneralArticulated(_) => Category::GeneralArticulated,
        }
    }
}

/// Classifies the workspace from the line geometry of the two axes.
///
/// Checks run from the most specific constraint down: parallel axes
/// (`sin α <= tau`) give `Scara`; otherwise intersecting axes
/// (`g <= tau L`) give `Spherical` when they meet within `tau L` of the base
/// and `PumaLike` elsewhere on axis 1; anything else is `GeneralArticulated`.
///
/// # Panics
///
/// If `tau` is not in `(0, 1)`.
pub fn classify(emb: &Embedding, tau: f64) -> TopologyClass {
    assert!(tau > 0.0 && tau < 1.0, "tau must lie in (0, 1), got {tau}");
    let distances = emb.distances();
    let l = distances.scale();
    let axes = AxisGeometry::of(emb);
    let u = axes.axis2_dir;
    let centre = emb.p3 + u * (emb.p5 - emb.p3).dot(&u);
    let tube_radius = (emb.p5 - centre).norm();

    let topology = match axes.foot_height {
        _ if axes.sin_alpha() <= tau => Topology::Scara {
            plane_height: centre.z,
        },
        Some(z) if axes.common_normal <= tau * l && z.abs() <= tau * l => Topology::Spherical {
            radius: emb.p5.norm(),
        },
        Some(z) if axes.common_normal <= tau * l => Topology::PumaLike {
            centre_height: z,
            radius: (emb.p5 - Point3::new(0.0, 0.0, z)).norm(),
        },
        _ => Topology::GeneralArticulated(TorusParams {
            common_normal: axes.common_normal,
            alpha: axes.alpha,
            foot_height_axis1: axes.foot_height,
            foot_height_axis2: axes.foot_on_axis2.map(|p| p.z),
            circle_centre: centre,
            axis2_dir: u,
            tube_radius,
            degenerate_tube: tube_radius <= tau * l,
        }),
    };
    TopologyClass {
        topology,
        axes,
        tau,
        scale: l,
        distances,
    }
}

/// P5's circle about axis 2, swept about axis 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Generator {
    pub centre: Point3,
    pub normal: Point3,
    pub radius: f64,
}

impl Generator {
    /// Point at meridian phase `phi` after a sweep angle `theta` about z.
    pub fn point(&self, phi: f64, theta: f64) -> Point3 {
        let helper = if self.normal.x.abs() < 0.9 {
            Point3::x()
        } else {
            Point3::y()
        };
        let e1 = (helper - self.normal * self.normal.dot(&helper)).normalize();
        let e2 = self.normal.cross(&e1);
        let q = self.centre + (e1 * phi.cos() + e2 * phi.sin()) * self.radius;
        let (s, c) = theta.sin_cos();
        Point3::new(c * q.x - s * q.y, s * q.x + c * q.y, q.z)
    }
}

/// Implicit surface for a classified workspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CanonicalSurface {
    Sphere { centre: Point3, radius: f64 },
    Plane { height: f64, extent: f64 },
    General {
        workspace: Workspace,
        generator: Generator,
    },
}

impl CanonicalSurface {
    /// Implicit value; zero on the surface. Sphere and plane use their own
    /// quadric/linear forms, the general case the scaled `Γ`.
    pub fn eval(&self, p: &Point3) -> f64 {
        match self {
            CanonicalSurface::Sphere { centre, radius } => {
                (p - centre).norm_squared() - radius * radius
            }
            CanonicalSurface::Plane { height, .. } => p.z - height,
            CanonicalSurface::General { workspace, .. } => workspace.gamma(p),
        }
    }

    /// Point on the surface for parameters `u, v` in `[0, 1)`.
    pub fn sample(&self, u: f64, v: f64) -> Point3 {
        match self {
            CanonicalSurface::Sphere { centre, radius } => {
                let cos_t = 2.0 * u - 1.0;
                let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
                let phi = TAU * v;
                centre + Point3::new(sin_t * phi.cos(), sin_t * phi.sin(), cos_t) * *radius
            }
            CanonicalSurface::Plane { height, extent } => {
                let rho = extent * u;
                let phi = TAU * v;
                Point3::new(rho * phi.cos(), rho * phi.sin(), *height)
            }
            CanonicalSurface::General { generator, .. } => generator.point(TAU * u, TAU * v),
        }
    }
}

/// Reduces a classification to its canonical implicit surface.
pub fn canonical_reduce(tc: &TopologyClass) -> CanonicalSurface {
    match tc.topology {
        Topology::Spherical { radius } => CanonicalSurface::Sphere {
            centre: Point3::zeros(),
            radius,
        },
        Topology::PumaLike {
            centre_height,
            radius,
        } => CanonicalSurface::Sphere {
            centre: Point3::new(0.0, 0.0, centre_height),
            radius,
        },
        Topology::Scara { plane_height } => CanonicalSurface::Plane {
            height: plane_height,
            extent: tc.scale,
        },
        Topology::GeneralArticulated(params) => CanonicalSurface::General {
            // Distances of a valid embedding are always embeddable.
            workspace: Workspace {
                scale: tc.distances.scale(),
                d12: tc.distances.d12(),
                distances: tc.distances,
            },
            generator: Generator {
                centre: params.circle_centre,
                normal: params.axis2_dir,
                radius: params.tube_radius,
            },
        },
    }
}
