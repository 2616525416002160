use faer::Mat;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdm_core::fem::{assemble, condense_matrix, dirichlet_ground_eigenvalue, dynamic_stiffness, FrequencyPoint, Medium};
use sdm_core::linalg::{symmetry_defect, CMat, Lu};
use sdm_core::mesh::{annulus_mesh, circle_loop, matched_circle_loop, rect_loop};

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let mut s = CMat::from_fn(n, n, |i, j| a[(i, j)] + a[(j, i)]);
    for i in 0..n {
        s[(i, i)] += Complex64::new(4.0, 0.0);
    }
    s
}

#[test]
fn condensation_matches_direct_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s = random_symmetric(&mut rng, 8);
    let keep = [1, 4, 6];
    let c = condense_matrix(s.as_ref(), &keep, 1.0).unwrap();
    // Column j of the inverse of the Schur complement is the kept part of S⁻¹ e_j.
    let lu = Lu::new(s.as_ref());
    for (a, &j) in keep.iter().enumerate() {
        let mut e = vec![Complex64::default(); 8];
        e[j] = Complex64::new(1.0, 0.0);
        let x = lu.solve_vec(&e);
        let xk: Vec<Complex64> = keep.iter().map(|&i| x[i]).collect();
        for b in 0..3 {
            let r: Complex64 = (0..3).map(|m| c[(b, m)] * xk[m]).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((r - want).norm() < 1e-12);
        }
    }
    assert!(symmetry_defect(c.as_ref()) < 1e-13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn condensation_is_associative(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_symmetric(&mut rng, 10);
        let a = [0, 2, 3, 5, 7, 9];
        let direct = condense_matrix(s.as_ref(), &[2, 5, 9], 1.0).unwrap();
        let stage = condense_matrix(s.as_ref(), &a, 1.0).unwrap();
        let twice = condense_matrix(stage.as_ref(), &[1, 3, 5], 1.0).unwrap();
        prop_assert!((&direct - &twice).norm_l2() <= 1e-10 * direct.norm_l2());
    }

    #[test]
    fn assembled_matrices_satisfy_identities(per_side in 3usize..10, layers in 1usize..5, f in 10.0f64..800.0) {
        let s = rect_loop(0.6, 0.3, per_side).unwrap();
        let b = matched_circle_loop(&s, 0.55).unwrap();
        let mesh = annulus_mesh(&s, &b, layers).unwrap();
        let sys = assemble(&mesh).unwrap();
        let n = sys.n_dofs();
        let ones = Mat::<f64>::from_fn(n, 1, |_, _| 1.0);
        let k1 = &sys.stiffness * &ones;
        prop_assert!((0..n).all(|i| k1[(i, 0)].abs() < 1e-12));
        let msum: f64 = sys.mass.triplet_iter().map(|t| *t.val).sum();
        prop_assert!(((msum - mesh.area()) / mesh.area()).abs() < 1e-12);
        prop_assert!(sys.mass.triplet_iter().all(|t| *t.val >= 0.0));
        let binner: f64 = (0..s.len()).flat_map(|i| (0..s.len()).map(move |j| (i, j))).map(|(i, j)| sys.b_inner[(i, j)]).sum();
        prop_assert!(((binner - s.perimeter()) / s.perimeter()).abs() < 1e-12);
        let ds = dynamic_stiffness(&sys, FrequencyPoint::new(f, 1e-3).unwrap(), &Medium::default());
        prop_assert!(symmetry_defect(ds.s.as_ref()) < 1e-15);
        // K and M given as triplets must be symmetric too.
        let kd = sys.stiffness.to_dense();
        prop_assert!((0..n).all(|i| (0..n).all(|j| kd[(i, j)] == kd[(j, i)])));
    }
}

#[test]
fn interior_resonance_is_reported_with_frequency() {
    // 1x1 interior with S_cc = 0 exactly.
    let s = CMat::from_fn(2, 2, |i, j| Complex64::new(if i == 1 && j == 1 { 0.0 } else { 1.0 }, 0.0));
    let err = condense_matrix(s.as_ref(), &[0], 123.0).unwrap_err();
    assert!(matches!(err, sdm_core::Error::Singular { freq_hz, .. } if freq_hz == 123.0));
}

#[test]
fn disc_dirichlet_ground_state() {
    let r = 1.0;
    let hole = circle_loop(r / 50.0, 128).unwrap();
    let rim = circle_loop(r, 128).unwrap();
    let mesh = annulus_mesh(&hole, &rim, 16).unwrap();
    let sys = assemble(&mesh).unwrap();
    let lambda = dirichlet_ground_eigenvalue(&sys, &sys.outer).unwrap();
    let want = (2.404825557695773 / r).powi(2);
    assert!(((lambda - want) / want).abs() < 0.02, "{lambda} vs {want}");
}
