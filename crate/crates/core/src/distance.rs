//! Distance data model and Cayley-Menger machinery.
//!
//! Points are labelled 1..5 as in the bar-and-joint model of the robot:
//! P1 and P2 sit on the base joint axis, P3 and P4 on the second joint axis,
//! and P5 is the end effector. Everything here works on squared distances
//! `s_ij = d_ij^2`.
//!
//! Tolerances are relative to the characteristic length `L`, the largest of
//! the eight pose-independent distances. Cayley-Menger determinants of `n`
//! points carry units of `L^(2(n-1))`, which is what the `scaled` helpers
//! divide by.

use std::fmt;

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::error::{Error, Result};
use crate::linalg::{det3, lu_determinant};

pub type Point3 = Vector3<f64>;

/// Relative tolerance used by [`is_embeddable`].
pub const EMBED_TOLERANCE: f64 = 1e-9;

/// Relative floor for the denominators of the block form.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// The eight pose-independent squared distances of the robot model.
///
/// `s15` and `s25` are not stored: they change with the joint angles and are
/// substituted by the end-effector coordinates when the workspace surface is
/// evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceSet {
    pub s12: f64,
    pub s13: f64,
    pub s14: f64,
    pub s23: f64,
    pub s24: f64,
    pub s34: f64,
    pub s35: f64,
    pub s45: f64,
}

impl DistanceSet {
    /// Key order used by files and by the array constructors.
    pub const KEYS: [&'static str; 8] = ["d12", "d13", "d14", "d23", "d24", "d34", "d35", "d45"];

    pub fn from_squared(s: [f64; 8]) -> Result<Self> {
        let ds = DistanceSet {
            s12: s[0],
            s13: s[1],
            s14: s[2],
            s23: s[3],
            s24: s[4],
            s34: s[5],
            s35: s[6],
            s45: s[7],
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Builds a set from plain lengths in [`Self::KEYS`] order.
    pub fn from_lengths(d: [f64; 8]) -> Result<Self> {
        if let Some(i) = d.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDistances(format!(
                "{} = {} must be finite and non-negative",
                Self::KEYS[i],
                d[i]
            )));
        }
        Self::from_squared(d.map(|v| v * v))
    }

    /// Reads the eight distances off five points (`s15`, `s25` are dropped).
    pub fn from_points(p: &[Point3; 5]) -> Self {
        let s = |i: usize, j: usize| (p[i] - p[j]).norm_squared();
        DistanceSet {
            s12: s(0, 1),
            s13: s(0, 2),
            s14: s(0, 3),
            s23: s(1, 2),
            s24: s(1, 3),
            s34: s(2, 3),
            s35: s(2, 4),
            s45: s(3, 4),
        }
    }

    pub fn squared(&self) -> [f64; 8] {
        [
            self.s12, self.s13, self.s14, self.s23, self.s24, self.s34, self.s35, self.s45,
        ]
    }

    pub fn lengths(&self) -> [f64; 8] {
        self.squared().map(f64::sqrt)
    }

    pub fn d12(&self) -> f64 {
        self.s12.sqrt()
    }
    pub fn d13(&self) -> f64 {
        self.s13.sqrt()
    }
    pub fn d14(&self) -> f64 {
        self.s14.sqrt()
    }
    pub fn d23(&self) -> f64 {
        self.s23.sqrt()
    }
    pub fn d24(&self) -> f64 {
        self.s24.sqrt()
    }
    pub fn d34(&self) -> f64 {
        self.s34.sqrt()
    }
    pub fn d35(&self) -> f64 {
        self.s35.sqrt()
    }
    pub fn d45(&self) -> f64 {
        self.s45.sqrt()
    }

    /// Characteristic length `L`: the largest of the eight distances.
    pub fn scale(&self) -> f64 {
        self.lengths().into_iter().fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        for (key, s) in Self::KEYS.iter().zip(self.squared()) {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::InvalidDistances(format!(
                    "{key}^2 = {s} must be finite and non-negative"
                )));
            }
        }
        if self.s12 <= 0.0 {
            return Err(Error::InvalidDistances("d12 must be positive".into()));
        }
        if self.s34 <= 0.0 {
            return Err(Error::InvalidDistances("d34 must be positive".into()));
        }
        Ok(())
    }

    /// Full five-point table with the pose-dependent entries filled in.
    pub fn table(&self, s15: f64, s25: f64) -> DistanceTable {
        let mut t = [[0.0; 5]; 5];
        let mut set = |i: usize, j: usize, v: f64| {
            t[i][j] = v;
            t[j][i] = v;
        };
        set(0, 1, self.s12);
        set(0, 2, self.s13);
        set(0, 3, self.s14);
        set(0, 4, s15);
        set(1, 2, self.s23);
        set(1, 3, self.s24);
        set(1, 4, s25);
        set(2, 3, self.s34);
        set(2, 4, self.s35);
        set(3, 4, self.s45);
        DistanceTable(t)
    }

    /// Uniformly rescales all lengths by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let f2 = factor * factor;
        let s = self.squared().map(|v| v * f2);
        DistanceSet {
            s12: s[0],
            s13: s[1],
            s14: s[2],
            s23: s[3],
            s24: s[4],
            s34: s[5],
            s35: s[6],
            s45: s[7],
        }
    }
}

/// Symmetric table of squared distances between five labelled points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceTable(pub [[f64; 5]; 5]);

impl DistanceTable {
    /// Table of points in any dimension (used to build non-embeddable data).
    pub fn from_coords<const D: usize>(pts: &[[f64; D]; 5]) -> Self {
        let mut t = [[0.0; 5]; 5];
        for i in 0..5 {
            for j in 0..5 {
                t[i][j] = pts[i]
                    .iter()
                    .zip(pts[j].iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
            }
        }
        DistanceTable(t)
    }

    pub fn from_points(p: &[Point3; 5]) -> Self {
        Self::from_coords(&p.map(|v| [v.x, v.y, v.z]))
    }

    /// Squared distance between labels `i` and `j` (1-based, like the model).
    pub fn s(&self, i: usize, j: usize) -> f64 {
        self.0[i - 1][j - 1]
    }

    /// Relabels the points: entry `(i, j)` of the result is entry
    /// `(perm[i], perm[j])` of `self`.
    pub fn permuted(&self, perm: [usize; 5]) -> Self {
        let mut t = [[0.0; 5]; 5];
        for i in 0..5 {
            for j in 0..5 {
                t[i][j] = self.0[perm[i]][perm[j]];
            }
        }
        DistanceTable(t)
    }

    /// Largest distance in the table.
    pub fn scale(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, v| acc.max(*v))
            .sqrt()
    }
}

/// Bordered Cayley-Menger matrix for `N` points (size `N + 1`).
fn bordered<const N: usize, const M: usize>(s: &[[f64; N]; N]) -> [[f64; M]; M] {
    debug_assert_eq!(M, N + 1);
    let mut m = [[1.0; M]; M];
    m[0][0] = 0.0;
    for i in 0..N {
        for j in 0..N {
            m[i + 1][j + 1] = s[i][j];
        }
    }
    m
}

/// `D(1,2,3,4,5)`: `-1/16` times the bordered 6x6 determinant.
///
/// Equals `(4!)^2` times the squared 4-volume of the simplex, so it vanishes
/// for any five points in 3-space and is positive for points in general
/// position in 4-space.
pub fn cm_det_5(table: &DistanceTable) -> f64 {
    let m: [[f64; 6]; 6] = bordered(&table.0);
    -lu_determinant(m) / 16.0
}

/// `D(1,2,3,4,5)` through the 3x3 Schur-complement form.
///
/// The 6x6 matrix is split into the block of {border, P4, P3} and the block of
/// {P2, P1, P5}; `C` is the inverse of the latter, so
/// `det = 2 s12 s15 s25 det(A - B C B^T)`.
pub fn cm_det_block(table: &DistanceTable) -> Result<f64> {
    let s = |i, j| table.s(i, j);
    let (s12, s15, s25) = (s(1, 2), s(1, 5), s(2, 5));
    let l = table.scale();
    let floor = DENOMINATOR_FLOOR * l * l;
    for (name, value) in [("s12", s12), ("s15", s15), ("s25", s25)] {
        if !(value > floor) {
            return Err(Error::DegenerateFrame {
                name,
                value,
                threshold: floor,
            });
        }
    }

    let s34 = s(3, 4);
    let a = Matrix3::new(0.0, 1.0, 1.0, 1.0, 0.0, s34, 1.0, s34, 0.0);
    let b = Matrix3::new(
        1.0,
        1.0,
        1.0,
        s(2, 4),
        s(1, 4),
        s(4, 5),
        s(2, 3),
        s(1, 3),
        s(3, 5),
    );
    let c = Matrix3::new(
        -s15 / (s12 * s25),
        1.0 / s12,
        1.0 / s25,
        1.0 / s12,
        -s25 / (s12 * s15),
        1.0 / s15,
        1.0 / s25,
        1.0 / s15,
        -s12 / (s15 * s25),
    ) * 0.5;
    let schur = a - b * c * b.transpose();
    let rows = [
        [schur[(0, 0)], schur[(0, 1)], schur[(0, 2)]],
        [schur[(1, 0)], schur[(1, 1)], schur[(1, 2)]],
        [schur[(2, 0)], schur[(2, 1)], schur[(2, 2)]],
    ];
    Ok(-2.0 * s12 * s15 * s25 * det3(&rows) / 16.0)
}

/// Three-point determinant with the sign flipped so that real triangles are
/// non-negative: returns `16 * area^2`.
pub fn cm_det_3(s: &[[f64; 3]; 3]) -> f64 {
    let m: [[f64; 4]; 4] = bordered(s);
    -lu_determinant(m)
}

/// Four-point determinant: returns `288 * volume^2`.
pub fn cm_det_4(s: &[[f64; 4]; 4]) -> f64 {
    let m: [[f64; 5]; 5] = bordered(s);
    lu_determinant(m)
}

pub fn triangle_area(s: &[[f64; 3]; 3]) -> f64 {
    (cm_det_3(s).max(0.0) / 16.0).sqrt()
}

pub fn tetrahedron_volume(s: &[[f64; 4]; 4]) -> f64 {
    (cm_det_4(s).max(0.0) / 288.0).sqrt()
}

/// A five-point determinant paired with its characteristic length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmResult {
    pub value: f64,
    pub scale: f64,
}

impl CmResult {
    pub fn of(table: &DistanceTable) -> Self {
        CmResult {
            value: cm_det_5(table),
            scale: table.scale(),
        }
    }

    /// `value / L^8`, dimensionless.
    pub fn scaled(&self) -> f64 {
        self.value / self.scale.powi(8)
    }
}

/// A simplex among the labelled points, 1-based labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Simplex {
    Triangle([u8; 3]),
    Tetrahedron([u8; 4]),
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Simplex::Triangle([a, b, c]) => write!(f, "triangle({a},{b},{c})"),
            Simplex::Tetrahedron([a, b, c, d]) => write!(f, "tetrahedron({a},{b},{c},{d})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexCheck {
    pub simplex: Simplex,
    /// Sign-normalised Cayley-Menger value (non-negative when realisable).
    pub value: f64,
    pub tolerance: f64,
}

impl SimplexCheck {
    pub fn passed(&self) -> bool {
        self.value >= -self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddabilityReport {
    pub embeddable: bool,
    pub checks: Vec<SimplexCheck>,
}

impl EmbeddabilityReport {
    /// First failed check in evaluation order.
    pub fn violation(&self) -> Option<&SimplexCheck> {
        self.checks.iter().find(|c| !c.passed())
    }
}

fn sub3(t: &DistanceTable, idx: [usize; 3]) -> [[f64; 3]; 3] {
    let mut s = [[0.0; 3]; 3];
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            s[a][b] = t.s(i, j);
        }
    }
    s
}

fn sub4(t: &DistanceTable, idx: [usize; 4]) -> [[f64; 4]; 4] {
    let mut s = [[0.0; 4]; 4];
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            s[a][b] = t.s(i, j);
        }
    }
    s
}

/// Checks that P1..P4 can be realised in 3-space and that P5's circle about
/// the second axis is non-empty.
///
/// Triangles are tested at `1e-9 L^4`, the tetrahedron at `1e-9 L^6`.
pub fn is_embeddable(ds: &DistanceSet) -> EmbeddabilityReport {
    let l = ds.scale();
    let tri_tol = EMBED_TOLERANCE * l.powi(4);
    let tet_tol = EMBED_TOLERANCE * l.powi(6);
    // s15/s25 are irrelevant for the simplices checked here.
    let t = ds.table(0.0, 0.0);

    let mut checks = Vec::with_capacity(6);
    for idx in [[1, 2, 3], [1, 2, 4], [1, 3, 4], [2, 3, 4]] {
        checks.push(SimplexCheck {
            simplex: Simplex::Triangle(idx.map(|v| v as u8)),
            value: cm_det_3(&sub3(&t, idx)),
            tolerance: tri_tol,
        });
    }
    checks.push(SimplexCheck {
        simplex: Simplex::Tetrahedron([1, 2, 3, 4]),
        value: cm_det_4(&sub4(&t, [1, 2, 3, 4])),
        tolerance: tet_tol,
    });
    checks.push(SimplexCheck {
        simplex: Simplex::Triangle([3, 4, 5]),
        value: cm_det_3(&sub3(&t, [3, 4, 5])),
        tolerance: tri_tol,
    });
    EmbeddabilityReport {
        embeddable: checks.iter().all(SimplexCheck::passed),
        checks,
    }
}

/// Which of the two mirror placements of P4 to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    #[default]
    Positive,
    Negative,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }
}

/// Cartesian realisation of a distance set in the canonical frame:
/// `p1` at the origin, `p2 = (0, 0, d12)`, `p3` in the `x >= 0` half of the
/// xz-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Embedding {
    pub p1: Point3,
    pub p2: Point3,
    pub p3: Point3,
    pub p4: Point3,
    pub p5: Point3,
}

impl Embedding {
    pub fn points(&self) -> [Point3; 5] {
        [self.p1, self.p2, self.p3, self.p4, self.p5]
    }

    /// Moves arbitrary marker positions into the canonical frame.
    pub fn from_points(points: [Point3; 5]) -> Result<Self> {
        let iso = canonical_frame(&points[0], &points[1], &points[2]).ok_or_else(|| {
            Error::InvalidDistances("P1 and P2 coincide; axis 1 is undefined".into())
        })?;
        let p = points.map(|v| iso.apply(&v));
        Ok(Embedding {
            p1: Point3::zeros(),
            p2: Point3::new(0.0, 0.0, p[1].z),
            p3: p[2],
            p4: p[3],
            p5: p[4],
        })
    }

    pub fn distances(&self) -> DistanceSet {
        DistanceSet::from_points(&self.points())
    }

    pub fn scale(&self) -> f64 {
        self.distances().scale()
    }
}

/// Rigid transform `p -> R (p - origin)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidFrame {
    pub rotation: Rotation3<f64>,
    pub origin: Point3,
}

impl RigidFrame {
    pub fn apply(&self, p: &Point3) -> Point3 {
        self.rotation * (p - self.origin)
    }
}

/// Frame sending `p1` to the origin, `p2` onto `+z` and `p3` into the
/// `x >= 0` half of the xz-plane. `None` when `p1 == p2`.
pub fn canonical_frame(p1: &Point3, p2: &Point3, p3: &Point3) -> Option<RigidFrame> {
    let axis = p2 - p1;
    let len = axis.norm();
    if !(len > 0.0) {
        return None;
    }
    let ez = axis / len;
    let rel = p3 - p1;
    let mut radial = rel - ez * ez.dot(&rel);
    if radial.norm() <= 1e-12 * rel.norm().max(len) {
        // p3 on axis 1: any perpendicular will do.
        let helper = if ez.x.abs() < 0.9 {
            Point3::x()
        } else {
            Point3::y()
        };
        radial = helper - ez * ez.dot(&helper);
    }
    let ex = radial.normalize();
    let ey = ez.cross(&ex);
    let m = Matrix3::from_rows(&[ex.transpose(), ey.transpose(), ez.transpose()]);
    Some(RigidFrame {
        rotation: Rotation3::from_matrix_unchecked(m),
        origin: *p1,
    })
}

/// Places the points of `ds` in the canonical frame.
///
/// P4 comes from trilateration against P1, P2, P3 with the sign of its y
/// coordinate picked by `branch`. P5 sits on its circle about the P3-P4 axis
/// at the phase with the largest z (the radially outward direction when the
/// axis is vertical); this is the reference pose of the sweep.
pub fn embed(ds: &DistanceSet, branch: Branch) -> Result<Embedding> {
    ds.validate()?;
    let report = is_embeddable(ds);
    if let Some(v) = report.violation() {
        return Err(Error::NotEmbeddable {
            simplex: v.simplex,
            value: v.value,
            tolerance: v.tolerance,
        });
    }
    construct(ds, branch)
}

/// Result of replacing a (possibly noisy) distance set by the distances of
/// its clamped embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub embedding: Embedding,
    pub distances: DistanceSet,
    /// Largest absolute change of any of the eight lengths.
    pub max_delta: f64,
    pub strict: EmbeddabilityReport,
}

/// Default bound on the projection's length change, relative to `L`.
pub const DEFAULT_PROJECTION_LIMIT: f64 = 0.01;

/// Consistency projection for measured data: embeds with every negative
/// radicand clamped to zero and re-derives the distances. Fails when any
/// length moves by more than `max_relative_delta * L`.
pub fn project(ds: &DistanceSet, branch: Branch, max_relative_delta: f64) -> Result<Projection> {
    ds.validate()?;
    let strict = is_embeddable(ds);
    let embedding = construct(ds, branch)?;
    let distances = embedding.distances();
    let max_delta = ds
        .lengths()
        .iter()
        .zip(distances.lengths())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let limit = max_relative_delta * ds.scale();
    if !(max_delta <= limit) {
        return Err(Error::ProjectionTooFar {
            delta: max_delta,
            limit,
        });
    }
    Ok(Projection {
        embedding,
        distances,
        max_delta,
        strict,
    })
}

fn construct(ds: &DistanceSet, branch: Branch) -> Result<Embedding> {
    let l = ds.scale();
    let d12 = ds.d12();

    let z3 = (ds.s13 - ds.s23 + ds.s12) / (2.0 * d12);
    let x3 = (ds.s13 - z3 * z3).max(0.0).sqrt();

    let z4 = (ds.s14 - ds.s24 + ds.s12) / (2.0 * d12);
    let rho4 = (ds.s14 - z4 * z4).max(0.0).sqrt();
    let (x4, y4) = if x3 <= 1e-9 * l {
        (rho4, 0.0)
    } else {
        let x4 = (rho4 * rho4 + x3 * x3 + (z4 - z3).powi(2) - ds.s34) / (2.0 * x3);
        // Keep P4 on its circle about axis 1 if the data overshoots.
        let x4 = x4.clamp(-rho4, rho4);
        let y4 = (rho4 * rho4 - x4 * x4).max(0.0).sqrt();
        (x4, branch.sign() * y4)
    };

    let p1 = Point3::zeros();
    let p2 = Point3::new(0.0, 0.0, d12);
    let p3 = Point3::new(x3, 0.0, z3);
    let p4 = Point3::new(x4, y4, z4);
    let p5 = place_end_effector(&p3, &p4, ds.s35, ds.s45, l)?;
    Ok(Embedding { p1, p2, p3, p4, p5 })
}

fn place_end_effector(p3: &Point3, p4: &Point3, s35: f64, s45: f64, l: f64) -> Result<Point3> {
    let axis = p4 - p3;
    let d34 = axis.norm();
    if !(d34 > 1e-12 * l) {
        return Err(Error::DegenerateAxis2 { d34 });
    }
    let u = axis / d34;
    let t = (s35 - s45 + d34 * d34) / (2.0 * d34);
    let r5 = (s35 - t * t).max(0.0).sqrt();
    let centre = p3 + u * t;

    let mut dir = Point3::z() - u * u.z;
    if dir.norm() <= 1e-9 {
        dir = Point3::new(centre.x, centre.y, 0.0);
        if dir.norm() <= 1e-9 * l {
            dir = Point3::x();
        }
    }
    Ok(centre + dir.normalize() * r5)
}
