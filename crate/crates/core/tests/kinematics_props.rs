mod common;

use malleable_workspace::distance::{embed, Branch, DistanceSet, Point3};
use malleable_workspace::kinematics::{
    azimuth_deg, sweep, wedge_mask, AzimuthRange, JointLimits, Sweeper,
};
use nalgebra::{Rotation3, Unit, Vector3};
use proptest::prelude::*;

fn config() -> impl Strategy<Value = [Point3; 5]> {
    any::<u64>().prop_map(|seed| common::random_configuration(&mut common::rng(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Joint 1 first, then joint 2 about the moved axis, against nalgebra's
    /// rotations applied to the whole second stage.
    #[test]
    fn position_matches_rotation_matrices(p in config(), t1 in 10.0..350.0f64, t2 in 53.0..307.0f64) {
        let emb = embed(&DistanceSet::from_points(&p), Branch::Positive).unwrap();
        let s = Sweeper::new(&emb, JointLimits::PROTOTYPE, 32).unwrap();

        let r1 = Rotation3::from_axis_angle(&Vector3::z_axis(), t1.to_radians());
        let (p3, p4, p5) = (r1 * emb.p3, r1 * emb.p4, r1 * emb.p5);
        let r2 = Rotation3::from_axis_angle(&Unit::new_normalize(p4 - p3), t2.to_radians());
        let oracle = p3 + r2 * (p5 - p3);

        let got = s.position(t1, t2);
        prop_assert!((got - oracle).norm() <= 1e-12 * emb.scale());
        let l = emb.scale();
        prop_assert!(((got - p3).norm() - emb.distances().d35()).abs() <= 1e-12 * l);
        prop_assert!(((got - p4).norm() - emb.distances().d45()).abs() <= 1e-12 * l);
    }

    #[test]
    fn synthetic_sweeps_stay_on_the_surface(p in config()) {
        let emb = embed(&DistanceSet::from_points(&p), Branch::Positive).unwrap();
        let cloud = sweep(&emb, JointLimits::PROTOTYPE, 96).unwrap();
        prop_assert!(cloud.stats.max <= 1e-9, "{}", cloud.stats.max);
        prop_assert!(cloud.points.iter().all(|q| common::oracle_gamma(&cloud.distances, &q.position).abs() <= 1e-9));
    }

    #[test]
    fn wedge_removes_exactly_its_sector(p in config(), start in 0.0..360.0f64, width in 0.0..180.0f64) {
        let emb = embed(&DistanceSet::from_points(&p), Branch::Positive).unwrap();
        let cloud = sweep(&emb, JointLimits::PROTOTYPE, 96).unwrap();
        let end = (start + width) % 360.0;
        let range = AzimuthRange::new(start, end).unwrap();
        let kept = wedge_mask(&cloud, range);
        let inside = |a: f64| if start <= end { a >= start && a < end } else { a >= start || a < end };
        let expected = cloud.points.iter().filter(|q| !inside(azimuth_deg(&q.position))).count();
        prop_assert_eq!(kept.points.len(), expected);
    }
}

#[test]
fn fixed_theta2_traces_circles_about_axis_one() {
    let mut rng = common::rng(21);
    let emb = embed(&common::random_distance_set(&mut rng), Branch::Positive).unwrap();
    let s = Sweeper::new(&emb, JointLimits::PROTOTYPE, 32).unwrap();
    for t2 in [60.0, 180.0, 300.0] {
        let first = s.position(10.0, t2);
        for t1 in [50.0, 170.0, 349.0] {
            let q = s.position(t1, t2);
            assert!((q.z - first.z).abs() < 1e-12);
            assert!((q.xy().norm() - first.xy().norm()).abs() < 1e-12);
        }
    }
}

#[test]
fn full_grid_dimensions() {
    assert_eq!(JointLimits::PROTOTYPE.grid_shape(1), (3864, 2887));
    let mut rng = common::rng(22);
    let emb = embed(&common::random_distance_set(&mut rng), Branch::Positive).unwrap();
    let cloud = sweep(&emb, JointLimits::PROTOTYPE, 32).unwrap();
    assert_eq!((cloud.rows, cloud.cols), (121, 91));
    assert_eq!(cloud.points.len(), 121 * 91);
    assert_eq!(cloud.points[0].theta1, 10.0);
    assert_eq!(cloud.points[0].theta2, 53.0);
}
