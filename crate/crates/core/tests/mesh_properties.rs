use proptest::prelude::*;
use sdm_core::mesh::{annulus_mesh, circle_loop, matched_circle_loop, parse_mesh, rect_loop, same_cycle, scale_loop, write_mesh};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn annulus_area_is_the_polygon_difference(r in 0.1f64..2.0, g in 1.01f64..3.0, n in 8usize..80, layers in 1usize..6) {
        let inner = circle_loop(r, n).unwrap();
        let outer = scale_loop(&inner, g).unwrap();
        let m = annulus_mesh(&inner, &outer, layers).unwrap();
        prop_assert_eq!(m.nodes.len(), n * (layers + 1));
        prop_assert_eq!(m.elements.len(), 2 * n * layers);
        let want = outer.signed_area() - inner.signed_area();
        prop_assert!(((m.area() - want) / want).abs() < 1e-12);
    }

    #[test]
    fn extracted_boundary_reproduces_loops(w in 0.2f64..1.0, aspect in 0.3f64..1.0, per_side in 2usize..12, layers in 1usize..5) {
        let s = rect_loop(w, w * aspect, per_side).unwrap();
        let b = matched_circle_loop(&s, 1.2 * w).unwrap();
        let m = annulus_mesh(&s, &b, layers).unwrap();
        let cycles = m.extract_boundary_cycles();
        prop_assert_eq!(cycles.len(), 2);
        for name in ["inner", "outer"] {
            let stored = m.loop_nodes(name).unwrap();
            prop_assert!(cycles.iter().any(|c| same_cycle(c, stored)));
        }
        let want = b.signed_area() - s.signed_area();
        prop_assert!(((m.area() - want) / want).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip_is_bit_exact(r in 0.01f64..5.0, n in 8usize..40, layers in 1usize..4) {
        let inner = circle_loop(r, n).unwrap();
        let m = annulus_mesh(&inner, &scale_loop(&inner, 1.0 + r).unwrap(), layers).unwrap();
        prop_assert_eq!(parse_mesh(&write_mesh(&m)).unwrap(), m);
    }
}

#[test]
fn scale_preconditions() {
    let c = circle_loop(0.55, 16).unwrap();
    let bigger = scale_loop(&c, 1.05).unwrap();
    assert!((bigger.nodes()[0].x - 0.5775).abs() < 1e-15);
    assert!(scale_loop(&c, 1.0 + 1e-9).is_ok());
    assert!(scale_loop(&bigger, 1.0 / (1.05 * 1.05)).is_err());
    assert!(annulus_mesh(&circle_loop(1.0, 16).unwrap(), &circle_loop(2.0, 17).unwrap(), 1).is_err());
}
