// Reference values are quoted at full printed precision.
#![allow(clippy::excessive_precision)]

use num_complex::Complex64;
use proptest::prelude::*;
use sdm_core::specfun::{bessel_j, bessel_y, green_2d, green_grad_2d, hankel_out};
use sdm_core::Point2;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

// (n, x, J_n(x), Y_n(x)) from 30-digit arithmetic.
const TABLE: &[(i32, f64, f64, f64)] = &[
    (0, 0.1, 0.997501562066040032, -1.5342386513503668083),
    (3, 0.5, 0.0025637299945872440754, -42.059494304723882688),
    (5, 2.0, 0.0070396297558716854842, -9.935989128481974981),
    (10, 7.5, 0.038998257889412210093, -1.2769419280524374718),
    (0, 12.5, 0.14688405470042110231, -0.17121430684466928735),
    (1, 24.9, -0.13485569953140886933, -0.086002557595554252479),
    (2, 25.1, -0.11740991724771220584, 0.1079531870621141598),
    (7, 30.0, 0.1451851895723282743, 0.027202118395205591982),
    (20, 40.0, 0.12779393355084889625, 0.04516182056580589068),
    (0, 50.0, 0.055812327669251815005, -0.098064995470077079029),
    (15, 100.0, 0.015198121223927322519, 0.078790686946702842653),
    (20, 1.0, 3.8735030085246577189e-25, -4.1139703148355052801e+22),
    (20, 100.0, 0.062217458498338753141, 0.051247973076188424211),
    (13, 13.0, 0.19014887604197097019, -0.32963025681004056194),
];

#[test]
fn high_precision_table() {
    for &(n, x, j, y) in TABLE {
        assert!(rel(bessel_j(n, x).unwrap(), j) < 1e-12, "J_{n}({x})");
        assert!(rel(bessel_y(n, x).unwrap(), y) < 1e-10, "Y_{n}({x})");
    }
}

#[test]
fn small_argument_and_first_zero() {
    assert!((bessel_j(0, 1e-12).unwrap() - 1.0).abs() < 1e-12);
    assert!(bessel_j(0, 2.404825557695773).unwrap().abs() < 1e-10);
    assert!(rel(bessel_j(1, 1.0).unwrap(), 0.4400505857449335) < 1e-12);
    let h0 = hankel_out(0, 1.0).unwrap();
    assert!((h0 - Complex64::new(0.7651976865579666, 0.08825696421567696)).norm() < 1e-12);
}

#[test]
fn wronskian_grid() {
    for n in 0..=10 {
        for x in [0.1, 1.0, 10.0, 50.0] {
            let w = bessel_j(n, x).unwrap() * bessel_y(n + 1, x).unwrap() - bessel_j(n + 1, x).unwrap() * bessel_y(n, x).unwrap();
            let want = -2.0 / (std::f64::consts::PI * x);
            assert!(rel(w, want) < 1e-9, "n={n} x={x}: {w} vs {want}");
        }
    }
}

#[test]
fn three_term_recurrence_grid() {
    for n in 1..=10 {
        for x in [0.1, 1.0, 10.0, 50.0] {
            for c in [bessel_j, bessel_y] {
                let lhs = c(n - 1, x).unwrap() + c(n + 1, x).unwrap();
                let rhs = 2.0 * n as f64 / x * c(n, x).unwrap();
                let scale = lhs.abs().max(rhs.abs()).max(c(n - 1, x).unwrap().abs());
                assert!((lhs - rhs).abs() <= 1e-9 * scale, "n={n} x={x}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_central_difference(
        x in (-2.0f64..2.0, -2.0f64..2.0),
        x0 in (-2.0f64..2.0, -2.0f64..2.0),
        k in 0.5f64..20.0,
    ) {
        let (x, x0) = (Point2::new(x.0, x.1), Point2::new(x0.0, x0.1));
        let r = (x - x0).norm();
        prop_assume!(r > 0.05);
        let h = 1e-6 * r;
        let g = green_grad_2d(x, x0, k).unwrap();
        let scale = (g[0].norm_sqr() + g[1].norm_sqr()).sqrt();
        for (axis, dx) in [Point2::new(h, 0.0), Point2::new(0.0, h)].into_iter().enumerate() {
            let fd = (green_2d(x + dx, x0, k).unwrap() - green_2d(x - dx, x0, k).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[axis]).norm() <= 1e-5 * scale, "axis {} fd {} analytic {}", axis, fd, g[axis]);
        }
    }

    #[test]
    fn green_is_symmetric(x in (-2.0f64..2.0, -2.0f64..2.0), x0 in (-2.0f64..2.0, -2.0f64..2.0), k in 0.1f64..30.0) {
        let (x, x0) = (Point2::new(x.0, x.1), Point2::new(x0.0, x0.1));
        prop_assume!((x - x0).norm() > 1e-6);
        prop_assert_eq!(green_2d(x, x0, k).unwrap(), green_2d(x0, x, k).unwrap());
    }
}
