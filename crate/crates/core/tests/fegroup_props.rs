use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use twistlab::fegroup::*;

fn rat() -> impl Strategy<Value = Q> {
    (-4000i64..4000, 1i64..97).prop_map(|(n, d)| q(n, d))
}

fn point() -> impl Strategy<Value = Pt> {
    (rat(), rat()).prop_map(|(a, b)| pt(a, b))
}

fn group_index() -> impl Strategy<Value = usize> {
    0usize..12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn r1_case_systems_agree(x in point()) {
        let zero = BigRational::from_integer(BigInt::from(0));
        prop_assert_eq!(r1_case_membership(&zero, &x), region_r1().contains(&x));
        let eps = q(1, 50);
        prop_assert_eq!(r1_case_membership(&eps, &x), region_r1_sampled(&eps).unwrap().contains(&x));
        prop_assert_eq!(region_r1_sampled(&zero).unwrap().contains(&x), region_r1().contains(&x));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_commutes_with_composition(i in group_index(), j in group_index(), x in point()) {
        let g = fe_group().unwrap();
        let r = region_prop56();
        let step = r.transform(&g[j].map).unwrap().transform(&g[i].map).unwrap();
        let once = r.transform(&g[i].map.compose(&g[j].map)).unwrap();
        prop_assert_eq!(step.contains(&x), once.contains(&x));
        let back = g[i].map.compose(&g[j].map).inverse().apply(&x);
        prop_assert_eq!(once.contains(&x), r.contains(&back));
    }

    #[test]
    fn hull_is_idempotent_and_monotone(i in group_index(), x in point()) {
        let g = fe_group().unwrap();
        let r1 = region_r1();
        let img = r1.transform(&g[i].map).unwrap();
        let h = hull(&[&r1, &img]).unwrap();
        prop_assert_eq!(hull(&[&h]).unwrap(), h.clone());
        if r1.contains(&x) || img.contains(&x) {
            prop_assert!(h.contains(&x));
        }
        let bigger = hull(&[&h, &region_prop56()]).unwrap();
        if h.contains(&x) {
            prop_assert!(bigger.contains(&x));
        }
    }

    #[test]
    fn polar_lines_stay_in_orbit(i in group_index()) {
        let g = fe_group().unwrap();
        let xi = CompletionFactor::new(Vec::new());
        let orbit = line_orbit(&g, &polar_divisor(&xi));
        for l in transport_poles(&g[i].map, &polar_divisor(&xi)) {
            prop_assert!(orbit.contains(&l));
        }
    }
}

#[test]
fn pipeline_covers_box_on_full_grid() {
    let stages = continuation_pipeline(&region_r1()).unwrap();
    let cov = box_coverage(&stages[3].region, &q(-100, 1), &q(100, 1), 201);
    assert_eq!(cov.samples, 201 * 201);
    assert!(cov.covered());
    let eps = q(1, 100);
    let sampled = continuation_pipeline(&region_r1_sampled(&eps).unwrap()).unwrap();
    assert!(sampled[3].region.is_whole_plane());
}
