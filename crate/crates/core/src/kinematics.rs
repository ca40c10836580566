//! Forward-kinematics sweep: the independent oracle for the workspace surface.
//!
//! Joint 1 rotates P3, P4 and P5 about the z-axis; joint 2 rotates P5 about
//! the (already rotated) line through P3 and P4. Both motions are rigid, so
//! every pairwise distance of the model is preserved and each emitted point
//! must satisfy `Γ = 0`.
//!
//! Angles are measured from the reference pose produced by
//! [`crate::distance::embed`]; the hardware's own zero marks cannot be
//! recovered from distances, so only the traced surface is comparable with
//! physical data, not the angle labelling.

use rayon::prelude::*;

use crate::distance::{DistanceSet, Embedding, Point3};
use crate::error::{Error, Result};
use crate::surface::Workspace;

/// Joint ranges and sampling step, all in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimits {
    pub theta1_min: f64,
    pub theta1_max: f64,
    pub theta2_min: f64,
    pub theta2_max: f64,
    pub step: f64,
}

/// Desk-scale decimation of the full-resolution grid.
pub const DEFAULT_DECIMATION: usize = 32;

impl JointLimits {
    /// Limits and encoder step of the physical prototype.
    pub const PROTOTYPE: JointLimits = JointLimits {
        theta1_min: 10.0,
        theta1_max: 350.0,
        theta2_min: 53.0,
        theta2_max: 307.0,
        step: 0.088,
    };

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.theta1_min,
            self.theta1_max,
            self.theta2_min,
            self.theta2_max,
            self.step,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidLimits("values must be finite".into()));
        }
        if !(self.theta1_min < self.theta1_max) || !(self.theta2_min < self.theta2_max) {
            return Err(Error::InvalidLimits("min must be below max".into()));
        }
        let span = (self.theta1_max - self.theta1_min).min(self.theta2_max - self.theta2_min);
        if !(self.step > 0.0 && self.step <= span) {
            return Err(Error::InvalidLimits(format!(
                "step {} must lie in (0, {span}]",
                self.step
            )));
        }
        Ok(())
    }

    fn count(min: f64, max: f64, step: f64) -> usize {
        ((max - min) / step + 1e-9).floor() as usize + 1
    }

    /// `(rows, cols)` = number of theta1 and theta2 samples.
    pub fn grid_shape(&self, decimation: usize) -> (usize, usize) {
        let step = self.step * decimation as f64;
        (
            Self::count(self.theta1_min, self.theta1_max, step),
            Self::count(self.theta2_min, self.theta2_max, step),
        )
    }
}

impl Default for JointLimits {
    fn default() -> Self {
        Self::PROTOTYPE
    }
}

/// Rodrigues rotation of `p` by `angle` radians about the line through
/// `axis_point` with unit direction `axis_dir`.
pub fn rotate_about_axis(
    p: &Point3,
    axis_point: &Point3,
    axis_dir: &Point3,
    angle: f64,
) -> Result<Point3> {
    let norm = axis_dir.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitAxis { norm });
    }
    Ok(rodrigues(p, axis_point, axis_dir, angle))
}

#[inline]
fn rodrigues(p: &Point3, axis_point: &Point3, k: &Point3, angle: f64) -> Point3 {
    let v = p - axis_point;
    let (s, c) = angle.sin_cos();
    axis_point + v * c + k.cross(&v) * s + k * (k.dot(&v) * (1.0 - c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub row: u32,
    pub col: u32,
    /// Degrees.
    pub theta1: f64,
    /// Degrees.
    pub theta2: f64,
    pub position: Point3,
    /// `|Γ| / L^8` at `position`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualStats {
    pub count: usize,
    pub max: f64,
    pub mean: f64,
}

impl ResidualStats {
    fn accumulate(&mut self, points: &[SweepPoint]) {
        let total = self.mean * self.count as f64;
        let sum: f64 = points.iter().map(|p| p.residual).sum();
        self.count += points.len();
        self.max = points.iter().map(|p| p.residual).fold(self.max, f64::max);
        self.mean = if self.count == 0 {
            0.0
        } else {
            (total + sum) / self.count as f64
        };
    }
}

/// End-effector samples of a sweep, row-major in `(theta1, theta2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCloud {
    pub points: Vec<SweepPoint>,
    pub distances: DistanceSet,
    pub rows: usize,
    pub cols: usize,
    pub stats: ResidualStats,
}

impl SweepCloud {
    pub fn positions(&self) -> Vec<Point3> {
        self.points.iter().map(|p| p.position).collect()
    }
}

/// A configured sweep over the joint grid.
#[derive(Debug, Clone)]
pub struct Sweeper {
    p3: Point3,
    axis2: Point3,
    p5: Point3,
    limits: JointLimits,
    step: f64,
    rows: usize,
    cols: usize,
    workspace: Workspace,
}

impl Sweeper {
    pub fn new(emb: &Embedding, limits: JointLimits, decimation: usize) -> Result<Self> {
        limits.validate()?;
        if decimation == 0 {
            return Err(Error::InvalidLimits("decimation must be at least 1".into()));
        }
        let distances = emb.distances();
        let l = distances.scale();
        let axis = emb.p4 - emb.p3;
        let d34 = axis.norm();
        if !(d34 > 1e-12 * l) {
            return Err(Error::DegenerateAxis2 { d34 });
        }
        let (rows, cols) = limits.grid_shape(decimation);
        Ok(Sweeper {
            p3: emb.p3,
            axis2: axis / d34,
            p5: emb.p5,
            limits,
            step: limits.step * decimation as f64,
            rows,
            cols,
            workspace: Workspace::new(distances)?,
        })
    }

    pub fn grid_shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn distances(&self) -> &DistanceSet {
        self.workspace.distances()
    }

    /// End-effector position at joint angles given in degrees: joint 1 is
    /// applied to the whole second stage first, then joint 2 about the moved
    /// axis.
    pub fn position(&self, theta1: f64, theta2: f64) -> Point3 {
        let origin = Point3::zeros();
        let ez = Point3::z();
        let t1 = theta1.to_radians();
        let p3 = rodrigues(&self.p3, &origin, &ez, t1);
        let axis = rodrigues(&self.axis2, &origin, &ez, t1);
        let p5 = rodrigues(&self.p5, &origin, &ez, t1);
        rodrigues(&p5, &p3, &axis, theta2.to_radians())
    }

    pub fn row(&self, i: usize) -> Vec<SweepPoint> {
        let theta1 = self.limits.theta1_min + i as f64 * self.step;
        let origin = Point3::zeros();
        let ez = Point3::z();
        let t1 = theta1.to_radians();
        let p3 = rodrigues(&self.p3, &origin, &ez, t1);
        let axis = rodrigues(&self.axis2, &origin, &ez, t1);
        let p5 = rodrigues(&self.p5, &origin, &ez, t1);
        (0..self.cols)
            .map(|j| {
                let theta2 = self.limits.theta2_min + j as f64 * self.step;
                let position = rodrigues(&p5, &p3, &axis, theta2.to_radians());
                SweepPoint {
                    row: i as u32,
                    col: j as u32,
                    theta1,
                    theta2,
                    position,
                    residual: self.workspace.gamma(&position).abs(),
                }
            })
            .collect()
    }

    /// Whole grid in memory. Rows are computed in parallel and assembled in
    /// order.
    pub fn run(&self) -> SweepCloud {
        let points: Vec<SweepPoint> = (0..self.rows)
            .into_par_iter()
            .map(|i| self.row(i))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect();
        let mut stats = ResidualStats::default();
        stats.accumulate(&points);
        SweepCloud {
            points,
            distances: *self.workspace.distances(),
            rows: self.rows,
            cols: self.cols,
            stats,
        }
    }

    /// Streams the grid in row order, `rows_per_chunk` rows at a time, for
    /// grids too large to hold in memory.
    pub fn for_each_chunk<E, F>(&self, rows_per_chunk: usize, mut f: F) -> Result<ResidualStats, E>
    where
        F: FnMut(&[SweepPoint]) -> Result<(), E>,
    {
        let mut stats = ResidualStats::default();
        let chunk = rows_per_chunk.max(1);
        let mut start = 0;
        while start < self.rows {
            let end = (start + chunk).min(self.rows);
            let rows: Vec<Vec<SweepPoint>> =
                (start..end).into_par_iter().map(|i| self.row(i)).collect();
            for row in &rows {
                stats.accumulate(row);
                f(row)?;
            }
            start = end;
        }
        Ok(stats)
    }
}

/// Sweeps the end effector over the joint grid.
pub fn sweep(emb: &Embedding, limits: JointLimits, decimation: usize) -> Result<SweepCloud> {
    Ok(Sweeper::new(emb, limits, decimation)?.run())
}

/// Half-open azimuth interval `[start, end)` in degrees; wraps through 0 when
/// `start > end`, empty when they are equal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AzimuthRange {
    pub start: f64,
    pub end: f64,
}

impl AzimuthRange {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        let ok = |v: f64| (0.0..=360.0).contains(&v);
        if !ok(start) || !ok(end) {
            return Err(Error::InvalidLimits(format!(
                "azimuth range {start}:{end} must lie within [0, 360]"
            )));
        }
        Ok(AzimuthRange { start, end })
    }

    pub fn contains(&self, azimuth: f64) -> bool {
        if self.start <= self.end {
            azimuth >= self.start && azimuth < self.end
        } else {
            azimuth >= self.start || azimuth < self.end
        }
    }
}

/// Azimuth of `p` about the z-axis in `[0, 360)` degrees.
pub fn azimuth_deg(p: &Point3) -> f64 {
    let a = p.y.atan2(p.x).to_degrees();
    if a < 0.0 {
        (a + 360.0) % 360.0
    } else {
        a
    }
}

/// Drops the points whose azimuth falls inside `range`, mimicking the slice
/// the tracking cameras could not see.
pub fn wedge_mask(cloud: &SweepCloud, range: AzimuthRange) -> SweepCloud {
    let points: Vec<SweepPoint> = cloud
        .points
        .iter()
        .filter(|p| !range.contains(azimuth_deg(&p.position)))
        .copied()
        .collect();
    let mut stats = ResidualStats::default();
    stats.accumulate(&points);
    SweepCloud {
        points,
        distances: cloud.distances,
        rows: cloud.rows,
        cols: cloud.cols,
        stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{embed, Branch};
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn spherical_embedding() -> Embedding {
        let ds = DistanceSet::from_points(&[
            Point3::zeros(),
            Point3::new(0.0, 0.0, 1.0),
            Point3::zeros(),
            Point3::new(0.6, 0.0, 0.8),
            Point3::new(0.9, -0.2, 0.7),
        ]);
        embed(&ds, Branch::Positive).unwrap()
    }

    #[test]
    fn quarter_turn_about_z() {
        let r = rotate_about_axis(
            &Point3::x(),
            &Point3::zeros(),
            &Point3::z(),
            FRAC_PI_2,
        )
        .unwrap();
        assert!((r - Point3::y()).norm() < 1e-12);
        let p = Point3::new(0.3, -2.0, 5.0);
        let same = rotate_about_axis(&p, &Point3::x(), &Point3::y(), 0.0).unwrap();
        assert!((same - p).norm() < 1e-15);
    }

    #[test]
    fn non_unit_axis_is_rejected() {
        let err = rotate_about_axis(&Point3::x(), &Point3::zeros(), &Point3::new(0.0, 0.0, 2.0), 1.0)
            .unwrap_err();
        assert!(matches!(err, Error::NonUnitAxis { .. }));
    }

    #[test]
    fn grid_shapes_follow_the_prototype_limits() {
        let l = JointLimits::PROTOTYPE;
        assert_eq!(l.grid_shape(32), (121, 91));
        assert_eq!(l.grid_shape(1), (3864, 2887));
    }

    #[test]
    fn invalid_limits() {
        let mut l = JointLimits::PROTOTYPE;
        l.theta1_max = l.theta1_min;
        assert!(l.validate().is_err());
        let mut l = JointLimits::PROTOTYPE;
        l.step = 0.0;
        assert!(l.validate().is_err());
        let mut l = JointLimits::PROTOTYPE;
        l.step = 1000.0;
        assert!(l.validate().is_err());
    }

    #[test]
    fn spherical_sweep_stays_on_sphere() {
        let emb = spherical_embedding();
        let radius = emb.distances().d35();
        let cloud = sweep(&emb, JointLimits::PROTOTYPE, 64).unwrap();
        assert_eq!(cloud.points.len(), cloud.rows * cloud.cols);
        for p in &cloud.points {
            assert_relative_eq!(p.position.norm(), radius, max_relative = 1e-9);
        }
        assert!(cloud.stats.max <= 1e-9);
    }

    #[test]
    fn rows_are_circles_about_z() {
        let emb = spherical_embedding();
        let s = Sweeper::new(&emb, JointLimits::PROTOTYPE, 64).unwrap();
        let cloud = s.run();
        for j in 0..cloud.cols {
            let first = cloud.points[j].position;
            for i in 1..cloud.rows {
                let p = cloud.points[i * cloud.cols + j].position;
                assert_relative_eq!(p.z, first.z, max_relative = 1e-9, epsilon = 1e-12);
                assert_relative_eq!(p.xy().norm(), first.xy().norm(), max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn composition_orders_agree() {
        let emb = spherical_embedding();
        let s = Sweeper::new(&emb, JointLimits::PROTOTYPE, 64).unwrap();
        let (t1, t2) = (123.4_f64, 77.7_f64);
        let u = (emb.p4 - emb.p3).normalize();
        let first_joint2 = rotate_about_axis(&emb.p5, &emb.p3, &u, t2.to_radians()).unwrap();
        let then_joint1 =
            rotate_about_axis(&first_joint2, &Point3::zeros(), &Point3::z(), t1.to_radians())
                .unwrap();
        assert!((s.position(t1, t2) - then_joint1).norm() < 1e-12);
    }

    #[test]
    fn degenerate_second_axis() {
        let emb = Embedding {
            p1: Point3::zeros(),
            p2: Point3::new(0.0, 0.0, 1.0),
            p3: Point3::new(1.0, 0.0, 0.0),
            p4: Point3::new(1.0, 0.0, 0.0),
            p5: Point3::new(2.0, 0.0, 0.0),
        };
        assert!(matches!(
            Sweeper::new(&emb, JointLimits::PROTOTYPE, 32),
            Err(Error::DegenerateAxis2 { .. }) | Err(Error::InvalidDistances(_))
        ));
    }

    #[test]
    fn wedges() {
        let emb = spherical_embedding();
        let cloud = sweep(&emb, JointLimits::PROTOTYPE, 64).unwrap();
        let same = wedge_mask(&cloud, AzimuthRange::new(100.0, 100.0).unwrap());
        assert_eq!(same.points, cloud.points);
        let none = wedge_mask(&cloud, AzimuthRange::new(0.0, 360.0).unwrap());
        assert!(none.points.is_empty());
        let cut = wedge_mask(&cloud, AzimuthRange::new(300.0, 330.0).unwrap());
        assert!(cut
            .points
            .iter()
            .all(|p| !(300.0..330.0).contains(&azimuth_deg(&p.position))));
        let wrap = AzimuthRange::new(350.0, 10.0).unwrap();
        assert!(wrap.contains(355.0) && wrap.contains(5.0) && !wrap.contains(180.0));
    }

    #[test]
    fn streaming_matches_in_memory() {
        let emb = spherical_embedding();
        let s = Sweeper::new(&emb, JointLimits::PROTOTYPE, 64).unwrap();
        let cloud = s.run();
        let mut streamed = Vec::new();
        let stats = s
            .for_each_chunk(7, |rows| {
                streamed.extend_from_slice(rows);
                Ok::<_, ()>(())
            })
            .unwrap();
        assert_eq!(streamed, cloud.points);
        assert_eq!(stats.count, cloud.points.len());
        assert_eq!(stats.max, cloud.stats.max);
    }
}
