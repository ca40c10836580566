//! Independent oracles and generators shared by the integration tests.
//!
//! Nothing here calls into the library's own determinant code: the oracle
//! expands the bordered matrix by permutations, and the special-case surfaces
//! are written out by hand from their closed forms.

#![allow(dead_code)]

use malleable_workspace::distance::{DistanceSet, Point3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Determinant by the Leibniz permutation expansion.
pub fn leibniz_det<const N: usize>(m: &[[f64; N]; N]) -> f64 {
    let mut perm: [usize; N] = std::array::from_fn(|i| i);
    let mut total = 0.0;
    permute(&mut perm, 0, &mut |p| {
        let sign = permutation_sign(p);
        let prod: f64 = (0..N).map(|i| m[i][p[i]]).product();
        total += sign * prod;
    });
    total
}

fn permute<const N: usize>(p: &mut [usize; N], k: usize, f: &mut impl FnMut(&[usize; N])) {
    if k == N {
        f(p);
        return;
    }
    for i in k..N {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

fn permutation_sign<const N: usize>(p: &[usize; N]) -> f64 {
    let mut inversions = 0;
    for i in 0..N {
        for j in i + 1..N {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `-1/16` times the bordered determinant of five points given by their
/// squared-distance table (`576 V^2` for a 4-simplex).
pub fn oracle_cm5(s: &[[f64; 5]; 5]) -> f64 {
    let mut m = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            m[i][j] = match (i, j) {
                (0, 0) => 0.0,
                (0, _) | (_, 0) => 1.0,
                _ => s[i - 1][j - 1],
            };
        }
    }
    -leibniz_det(&m) / 16.0
}

pub fn table_of<const D: usize>(p: &[[f64; D]; 5]) -> [[f64; 5]; 5] {
    let mut s = [[0.0; 5]; 5];
    for i in 0..5 {
        for j in 0..5 {
            s[i][j] = (0..D).map(|k| (p[i][k] - p[j][k]).powi(2)).sum();
        }
    }
    s
}

/// Oracle for the scaled workspace function: the five-point value with the
/// end effector replaced by `p`, divided by `L^8`.
pub fn oracle_gamma(ds: &DistanceSet, p: &Point3) -> f64 {
    let s15 = p.norm_squared();
    let s25 = p.x * p.x + p.y * p.y + (p.z - ds.d12()).powi(2);
    let s = [
        [0.0, ds.s12, ds.s13, ds.s14, s15],
        [ds.s12, 0.0, ds.s23, ds.s24, s25],
        [ds.s13, ds.s23, 0.0, ds.s34, ds.s35],
        [ds.s14, ds.s24, ds.s34, 0.0, ds.s45],
        [s15, s25, ds.s35, ds.s45, 0.0],
    ];
    oracle_cm5(&s) / ds.scale().powi(8)
}

pub fn random_point(rng: &mut ChaCha8Rng, half: f64) -> Point3 {
    Point3::new(
        rng.random_range(-half..half),
        rng.random_range(-half..half),
        rng.random_range(-half..half),
    )
}

/// Five points whose axes are well defined (`d12`, `d34` not tiny), in
/// general position.
pub fn random_configuration(rng: &mut ChaCha8Rng) -> [Point3; 5] {
    loop {
        let p: [Point3; 5] = std::array::from_fn(|_| random_point(rng, 1.0));
        let d12 = (p[1] - p[0]).norm();
        let d34 = (p[3] - p[2]).norm();
        let tri = (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
        if d12 > 0.2 && d34 > 0.2 && tri > 0.05 {
            return p;
        }
    }
}

pub fn random_distance_set(rng: &mut ChaCha8Rng) -> DistanceSet {
    DistanceSet::from_points(&random_configuration(rng))
}

/// P3 on P1: the workspace is the sphere `|p| = d35`.
pub fn spherical_points(rng: &mut ChaCha8Rng) -> [Point3; 5] {
    let d12 = rng.random_range(0.3..1.0);
    let p4 = random_point(rng, 1.0);
    let p5 = random_point(rng, 1.0);
    [Point3::zeros(), Point3::new(0.0, 0.0, d12), Point3::zeros(), p4, p5]
}

/// P4 on P2: the workspace is the sphere about P2 of radius d45.
pub fn puma_points(rng: &mut ChaCha8Rng) -> [Point3; 5] {
    let d12 = rng.random_range(0.3..1.0);
    let p2 = Point3::new(0.0, 0.0, d12);
    let p3 = Point3::new(rng.random_range(0.3..1.0), 0.0, rng.random_range(-1.0..1.0));
    let p5 = p2 + random_point(rng, 1.0);
    [Point3::zeros(), p2, p3, p2, p5]
}

/// Second axis parallel to the first: the workspace is the plane through P5.
pub fn scara_points(rng: &mut ChaCha8Rng) -> [Point3; 5] {
    let d12 = rng.random_range(0.3..1.0);
    let p3 = Point3::new(rng.random_range(0.3..1.0), 0.0, rng.random_range(-1.0..1.0));
    let p4 = p3 + Point3::new(0.0, 0.0, rng.random_range(0.3..1.0));
    let p5 = p3 + Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    [Point3::zeros(), Point3::new(0.0, 0.0, d12), p3, p4, p5]
}
