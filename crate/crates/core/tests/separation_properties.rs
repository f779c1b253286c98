use orbitframe::group_families::{enumerate_lattice, FamilySpec, LatticeWindow};
use orbitframe::orbit_atlas::OrbitSpec;
use orbitframe::separation::*;
use proptest::prelude::*;

fn dyadic(n: usize, k: i64) -> (OrbitSpec, Vec<orbitframe::group_core::GroupElement>) {
    let spec = FamilySpec::similitude(n);
    let orbit = OrbitSpec::similitude(spec.clone()).unwrap();
    let lat = enumerate_lattice(&spec, &LatticeWindow::new(vec![(-k, k)], vec![])).unwrap();
    (orbit, lat)
}

fn verdict(s: &Status) -> &'static str {
    s.label()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn separation_agrees_up_and_down(outer in prop_oneof![1.05f64..1.95, 2.05f64..3.5], n in 1usize..3) {
        let (orbit, lat) = dyadic(n, 3);
        let down = Region::Annulus { inner: 1.0, outer };
        let up = lift_region(&orbit, &down).unwrap();
        let exact = check_separated(&orbit, &lat, &down, &Method::Exact).unwrap();
        let lifted = check_separated(&orbit, &lat, &up, &Method::sampled()).unwrap();
        let sampled = check_separated(&orbit, &lat, &down, &Method::sampled()).unwrap();
        prop_assert_eq!(verdict(&exact.status), if outer < 2.0 { "verified" } else { "violated" });
        prop_assert_eq!(verdict(&exact.status), verdict(&lifted.status));
        prop_assert_eq!(verdict(&exact.status), verdict(&sampled.status));
    }

    #[test]
    fn multiplicity_is_bounded_by_alpha(outer in prop_oneof![1.2f64..1.9, 2.0f64..3.7]) {
        let (orbit, lat) = dyadic(1, 6);
        let f = Region::Annulus { inner: 1.0, outer };
        let alpha = overlap_constant(&orbit, &lat, &f, &Method::Exact).unwrap().alpha;
        let k = Region::Annulus { inner: 0.5, outer: 8.0 };
        let cov = check_covering(&orbit, &lat, &f, &k, Sampling { per_axis: 512, total: 512 }, None).unwrap();
        prop_assert_eq!(cov.covered, outer >= 2.0);
        prop_assert!(cov.max_multiplicity <= alpha);
        let sampled = overlap_constant(&orbit, &lat, &f, &Method::sampled()).unwrap().alpha;
        prop_assert_eq!(sampled, alpha);
    }

    #[test]
    fn alpha_is_stable_under_window_growth(outer in 1.1f64..7.9, k in 3i64..6) {
        let f = Region::Annulus { inner: 1.0, outer };
        let (orbit, small) = dyadic(1, k);
        let (_, big) = dyadic(1, k + 3);
        let a = overlap_constant(&orbit, &small, &f, &Method::Exact).unwrap().alpha;
        let b = overlap_constant(&orbit, &big, &f, &Method::Exact).unwrap().alpha;
        prop_assert_eq!(a, b);
        // intervals [2^j, 2^j outer] with |j| <= k: brute force count
        let l = outer.log2().floor() as usize;
        prop_assert_eq!(a, 2 * l + 1);
    }
}

#[test]
fn lorentz_bq_agrees_up_and_down() {
    let spec = FamilySpec::lorentz_an(2);
    let orbit = OrbitSpec::lorentz(spec.clone(), 1).unwrap();
    let window = LatticeWindow::symmetric(&spec, 1, 1);
    let lat = enumerate_lattice(&spec, &window).unwrap();
    let bq = build_bq_region(&spec, &window, &BqOptions::default()).unwrap();
    let up = Region::Params(bq.region.clone());
    let down = Region::Image { source: bq.region };
    let a = check_separated(&orbit, &lat, &up, &Method::Exact).unwrap();
    let b = check_separated(&orbit, &lat, &down, &Method::sampled()).unwrap();
    assert_eq!(a.status, Status::Verified);
    assert_eq!(b.status, Status::Verified);

    // a box wide enough to contain n(1) is violated on both levels
    let wide = ParamBox::cube(vec![0.1, 0.1], 0.6);
    let a = check_separated(&orbit, &lat, &Region::Params(wide.clone()), &Method::sampled()).unwrap();
    let b = check_separated(&orbit, &lat, &Region::Image { source: wide }, &Method::sampled()).unwrap();
    assert_eq!(verdict(&a.status), "violated");
    assert_eq!(verdict(&b.status), "violated");
}
