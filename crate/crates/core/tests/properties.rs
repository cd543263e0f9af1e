mod common;

use std::sync::Arc;

use isorep::faithful::{averaged_kernel, orbit_kernel};
use isorep::isometry::isometry_group;
use isorep::kernel::{check_psd, gaussian_gram, gram_on_group, gram_on_points, KernelFunction};
use isorep::metric::{cloud_to_metric, parse_csv, parse_json, MetricError, PointCloud};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn cloud_strategy() -> impl Strategy<Value = PointCloud> {
    (1usize..=8, 1usize..=12).prop_flat_map(|(k, n)| {
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, k), n)
            .prop_map(|pts| PointCloud::new(pts).unwrap())
    })
}

proptest! {
    #[test]
    fn euclidean_metrics_satisfy_triangle_inequality(cloud in cloud_strategy()) {
        match cloud_to_metric(&cloud) {
            Ok(space) => prop_assert_eq!(space.len(), cloud.len()),
            Err(MetricError::DuplicatePoints(..)) => {}
            Err(e) => prop_assert!(false, "unexpected {e:?}"),
        }
    }

    #[test]
    fn save_load_round_trip(cloud in cloud_strategy()) {
        if let Ok(space) = cloud_to_metric(&cloud) {
            let json = parse_json(&space.to_json()).unwrap();
            prop_assert_eq!(json.matrix(), space.matrix());
            prop_assert_eq!(json.labels(), space.labels());
            let csv = parse_csv(&space.to_csv()).unwrap();
            prop_assert_eq!(csv.matrix(), space.matrix());
        }
    }

    #[test]
    fn gaussian_gram_is_psd(cloud in cloud_strategy()) {
        let g = gaussian_gram(&cloud);
        let c = check_psd(g.entries(), 1e-9).unwrap();
        prop_assert!(c.is_psd, "min eigenvalue {}", c.min_eigenvalue);
    }

    #[test]
    fn gram_on_points_symmetric_unit_diagonal(cloud in cloud_strategy(), pick in prop::collection::vec(0usize..12, 1..6)) {
        if let Ok(space) = cloud_to_metric(&cloud) {
            let idx: Vec<usize> = pick.into_iter().map(|i| i % space.len()).collect();
            let g = gram_on_points(&KernelFunction::gaussian(), &space, &idx).unwrap();
            prop_assert!(g.is_symmetric());
            for i in 0..idx.len() {
                prop_assert_eq!(g.get(i, i), 1.0);
            }
        }
    }

    #[test]
    fn psd_matches_closed_form_2x2(a in -2.0f64..2.0, b in -2.0f64..2.0, d in -2.0f64..2.0) {
        let m = DMatrix::from_row_slice(2, 2, &[a, b, b, d]);
        let expected = common::eig2([[a, b], [b, d]])[0];
        let got = check_psd(&m, 1e-9).unwrap().min_eigenvalue;
        prop_assert!((got - expected).abs() <= 1e-10, "{got} vs {expected}");
    }

    #[test]
    fn psd_matches_closed_form_3x3(v in prop::array::uniform6(-2.0f64..2.0)) {
        let a = [[v[0], v[1], v[2]], [v[1], v[3], v[4]], [v[2], v[4], v[5]]];
        let m = DMatrix::from_fn(3, 3, |i, j| a[i][j]);
        let expected = common::eig3(a)[0];
        let got = check_psd(&m, 1e-9).unwrap().min_eigenvalue;
        prop_assert!((got - expected).abs() <= 1e-10, "{got} vs {expected}");
    }
}

#[test]
fn group_axioms_hold_exactly() {
    for (name, space) in common::test_spaces() {
        let g = isometry_group(&space).unwrap();
        assert!(g.identity().is_identity(), "{name}");
        for a in g.elements() {
            assert!(g.contains(&a.inverse()), "{name}");
            assert!(a.compose(&a.inverse()).unwrap().is_identity());
            for b in g.elements() {
                assert!(g.contains(&a.compose(b).unwrap()), "{name}: not closed");
            }
        }
    }
}

#[test]
fn isometry_group_matches_brute_force() {
    for (name, space) in common::test_spaces() {
        let got: Vec<Vec<usize>> = isometry_group(&space)
            .unwrap()
            .elements()
            .iter()
            .map(|g| g.as_slice().to_vec())
            .collect();
        assert_eq!(got, common::brute_force_isometries(&space), "{name}");
    }
}

#[test]
fn orbit_gram_equals_point_gram() {
    let p = KernelFunction::gaussian();
    for (name, space) in common::test_spaces() {
        let g = isometry_group(&space).unwrap();
        for a in 0..space.len() {
            let pa = orbit_kernel(&p, &space, a).unwrap();
            let by_group = gram_on_group(&pa, &g, g.elements()).unwrap();
            let orbit: Vec<usize> = g.elements().iter().map(|h| h.apply(a)).collect();
            let by_points = gram_on_points(&p, &space, &orbit).unwrap();
            assert_eq!(by_group.entries(), by_points.entries(), "{name}, a = {a}");
            assert!(by_group.is_symmetric(), "{name}");
            assert!(check_psd(by_group.entries(), 1e-9).unwrap().is_psd, "{name}, a = {a}");
        }
    }
}

#[test]
fn averaged_kernel_is_positive_definite() {
    let p = KernelFunction::gaussian();
    for (name, space) in common::test_spaces() {
        let g = Arc::new(isometry_group(&space).unwrap());
        let all: Vec<usize> = (0..space.len()).collect();
        let t = averaged_kernel(&p, &space, &all).unwrap();
        let gram = gram_on_group(&t, &g, g.elements()).unwrap();
        assert!(gram.is_symmetric(), "{name}");
        assert!(check_psd(gram.entries(), 1e-9).unwrap().is_psd, "{name}");
    }
}
