use proptest::prelude::*;

use tilewave::geometry::{self, sqrt3};
use tilewave::observability::{estimate_constants, observed_energy, ObservedGram};
use tilewave::{
    build_basis, BasisKind, BasisSpec, ConvexPolygon, ObservationRegion, ObservationSetup, Point, QuadratureRule,
    Region, Tiling, WaveState,
};

fn triangle_strategy() -> impl Strategy<Value = ConvexPolygon> {
    (prop::array::uniform6(-3.0..3.0f64)).prop_filter_map("degenerate", |c| {
        let (a, b, p) = (Point::new(c[0], c[1]), Point::new(c[2], c[3]), Point::new(c[4], c[5]));
        if ((b - a).cross(p - a)).abs() < 0.05 {
            return None;
        }
        ConvexPolygon::new_any_orientation(vec![a, b, p]).ok()
    })
}

fn subrectangle() -> impl Strategy<Value = ConvexPolygon> {
    (0.0..0.8f64, 0.0..0.8f64, 0.1..1.0f64, 0.1..1.0f64).prop_map(|(x, y, w, h)| {
        let s = sqrt3();
        let lo = Point::new(x * s, y);
        let hi = Point::new((x + w * (1.0 - x)) * s, y + h * (1.0 - y));
        ConvexPolygon::rectangle(lo, hi).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadrature_weights_sum_to_area_and_nodes_lie_inside(tri in triangle_strategy(), order in 2usize..16, level in 0u32..4) {
        for rule in [QuadratureRule::triangle(&tri, order).unwrap(), QuadratureRule::composite(&tri, level)] {
            prop_assert!((rule.weight_sum() - tri.area()).abs() < 1e-10 * tri.area().max(1.0));
            prop_assert!(rule.weights().iter().all(|w| *w > 0.0));
            prop_assert!(rule.nodes().iter().all(|p| tri.contains_closed(*p, 1e-9)));
        }
    }

    #[test]
    fn rectangle_observation_refines_stably(rect in subrectangle(), t in 0.2..6.0f64, seed in 0u64..1000) {
        let basis = build_basis(&BasisKind::sqrt3_rectangle(), &BasisSpec { max_k1: 3, max_k2: 3, ..Default::default() }).unwrap();
        let mut x = seed as f64;
        let mut next = || { x = (x * 16807.0 + 1.0) % 2147483647.0; x / 2147483647.0 - 0.5 };
        let c: Vec<f64> = (0..basis.len()).map(|_| next()).collect();
        let d: Vec<f64> = (0..basis.len()).map(|_| 4.0 * next()).collect();
        let state = WaveState::new(&basis, c, d).unwrap();
        let region = ObservationRegion::Polygons(Region::single(rect));
        let coarse = observed_energy(&state, &ObservationSetup::new(region.clone(), t, 24).unwrap()).unwrap();
        let fine = observed_energy(&state, &ObservationSetup::new(region, t, 48).unwrap()).unwrap();
        prop_assert!(coarse >= 0.0);
        prop_assert!((coarse - fine).abs() <= 1e-6 * fine.max(1e-300));
    }

    #[test]
    fn constants_are_ordered_and_region_monotone(rect in subrectangle(), t in 0.2..6.0f64) {
        let basis = build_basis(&BasisKind::sqrt3_rectangle(), &BasisSpec { max_k1: 3, max_k2: 3, ..Default::default() }).unwrap();
        let part = estimate_constants(&basis, &ObservationSetup::new(ObservationRegion::Polygons(Region::single(rect)), t, 24).unwrap()).unwrap();
        let full = estimate_constants(&basis, &ObservationSetup::new(ObservationRegion::Full, t, 24).unwrap()).unwrap();
        prop_assert!(0.0 <= part.c1 && part.c1 <= part.c2);
        prop_assert!(part.c1 <= full.c1 + 1e-10 && part.c2 <= full.c2 + 1e-10);
    }

    #[test]
    fn energy_form_is_symmetric_psd(t in 0.05..8.0f64, max_k in 6u32..10) {
        let basis = build_basis(&BasisKind::half_equilateral(), &BasisSpec { max_k1: max_k, max_k2: max_k, ..Default::default() }).unwrap();
        let left = Region::single(ConvexPolygon::rectangle(Point::ORIGIN, Point::new(sqrt3() / 2.0, 1.0)).unwrap());
        let gram = ObservedGram::assemble(&basis, &ObservationRegion::pullback(left), 24).unwrap();
        let q = gram.energy_form(t).unwrap();
        prop_assert!((&q - q.transpose()).amax() <= 1e-12 * q.amax());
        let min = nalgebra::SymmetricEigen::new(q.clone()).eigenvalues.min();
        prop_assert!(min >= -1e-9 * q.amax());
    }

    #[test]
    fn motion_images_stay_in_target(x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let t = Tiling::half_equilateral();
        let p = Point::new(x / sqrt3(), y);
        prop_assume!(t.tile().contains_closed(p, 0.0));
        let rect = geometry::sqrt3_rectangle();
        for m in t.motions() {
            prop_assert!(rect.contains_closed(m.apply(p), 1e-12));
        }
    }
}
