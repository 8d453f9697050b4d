use nalgebra::{DMatrix, DVector};
use qelab::anis::*;
use qelab::graph::random_labelled_regular;
use qelab::kernel::PathCalculus;
use qelab::tree::km_density;
use qelab::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn skewed() -> TransitionWeights {
    TransitionWeights::new(vec![0.5, 0.3, 0.2]).unwrap()
}

fn words_upto(labels: usize, len: usize) -> Vec<Vec<usize>> {
    (0..=len).flat_map(|l| reduced_words(labels, l)).collect()
}

#[test]
fn truncated_tree_converges_to_solver() {
    let w = skewed();
    let g = C64::new(0.2, 0.05);
    let s = solve_green(&w, g).unwrap();
    let err = |depth| {
        words_upto(3, 3)
            .iter()
            .map(|word| (truncated_tree_green(&w, g, depth, word).unwrap() - s.kernel(word).unwrap()).norm())
            .fold(0.0, f64::max)
    };
    let (e25, e50, e100) = (err(25), err(50), err(100));
    assert!(e50 < e25 && e100 < e50, "{e25} {e50} {e100}");
    assert!(e100 < 1e-6, "{e100}");
}

#[test]
fn closed_truncation_is_exact() {
    let w = skewed();
    let g = C64::new(0.2, 0.05);
    let s = solve_green(&w, g).unwrap();
    let leaf: Vec<C64> = s.zeta.iter().zip(w.p()).map(|(z, p)| z / p).collect();
    for word in words_upto(3, 3) {
        let t = truncated_tree_green_closed(&w, g, 25, &word, &leaf).unwrap();
        assert!((t - s.kernel(&word).unwrap()).norm() < 1e-12, "{word:?}");
    }
}

#[test]
fn schur_recursion_matches_dense_solve() {
    // oracle: explicit resolvent of A_p on the radius-5 labelled ball
    let w = skewed();
    let depth = 5;
    let verts = words_upto(3, depth);
    let index = |v: &Vec<usize>| verts.iter().position(|u| u == v).unwrap();
    let gamma = C64::new(-0.3, 0.4);
    let n = verts.len();
    let mut m = DMatrix::<C64>::from_diagonal_element(n, n, gamma);
    for (i, v) in verts.iter().enumerate() {
        if let Some((&c, head)) = v.split_last() {
            let j = index(&head.to_vec());
            m[(i, j)] -= C64::new(w.p()[c], 0.0);
            m[(j, i)] -= C64::new(w.p()[c], 0.0);
        }
    }
    let mut e0 = DVector::<C64>::zeros(n);
    e0[0] = C64::new(1.0, 0.0);
    let col = m.lu().solve(&e0).unwrap();
    for v in words_upto(3, 3) {
        let t = truncated_tree_green(&w, gamma, depth, &v).unwrap();
        assert!((t - col[index(&v)]).norm() < 1e-12, "{v:?}");
    }
}

#[test]
fn residuals_small_on_a_gamma_grid() {
    let w = skewed();
    for i in 0..10 {
        for eta in [1.0, 0.3, 0.1, 1e-2, 1e-3] {
            let g = C64::new(-1.5 + 3.0 * i as f64 / 9.0, eta);
            let s = solve_green(&w, g).unwrap();
            assert!(s.max_residual() < 1e-10, "{g}: {}", s.max_residual());
            assert!(s.branch_ok);
            assert!(s.zeta.iter().all(|z| z.im < 0.0));
        }
    }
}

#[test]
fn lower_half_plane_is_the_conjugate() {
    let w = skewed();
    let g = C64::new(0.1, 0.2);
    let a = solve_green(&w, g).unwrap();
    let b = solve_green(&w, g.conj()).unwrap();
    assert!((a.diagonal().conj() - b.diagonal()).norm() < 1e-12);
}

#[test]
fn isotropic_reduction() {
    let q = 2;
    let w = TransitionWeights::isotropic(q);
    let km = km_density(q);
    for i in 1..20 {
        let l = -0.9 + 1.8 * i as f64 / 20.0;
        let d = density_at(&w, l);
        let expect = 3.0 * km.eval(3.0 * l);
        assert!((d - expect).abs() < 1e-8, "{l}: {d} vs {expect}");
        let g = C64::new(l, 0.2);
        let s = solve_green(&w, g).unwrap();
        let iso = 3.0 * qelab::tree::green_tree(q, 3.0 * g, 0).unwrap();
        assert!((s.diagonal() - iso).norm() < 1e-8);
    }
}

#[test]
fn density_is_a_sub_probability() {
    let w = skewed();
    let grid: Vec<f64> = (0..=80).map(|i| -1.0 + i as f64 / 40.0).collect();
    for p in anis_density(&w, &grid) {
        assert!(p.density.is_nan() || p.density >= 0.0, "{p:?}");
    }
    let (mass, _) = density_mass(&w, 1e-8);
    assert!(mass <= 1.0 + 1e-6, "{mass}");
    assert!(mass > 0.5, "{mass}");
}

#[test]
fn kolmogorov_relation_and_cylinders() {
    let w = skewed();
    let mut checked = 0;
    for i in 0..40 {
        let l = -0.95 + 1.9 * i as f64 / 39.0;
        let b = solve_green_boundary(&w, l).unwrap();
        if !b.density_positive() {
            continue;
        }
        assert!((b.state.kolmogorov_sum() - 1.0).abs() < 1e-8, "{l}");
        let c = harmonic_cylinders(&b.state, 3).unwrap();
        assert!(c.consistency_error < 1e-10 && c.normalisation_error < 1e-8);
        checked += 1;
    }
    assert!(checked >= 20, "{checked}");
}

#[test]
fn lift_intertwines_on_a_labelled_graph() {
    let w = skewed();
    let (g, bonds) = random_labelled_regular(50, 2, 11).unwrap();
    let ap = build_ap(&g, &bonds, &w).unwrap();
    for x in 0..50 {
        let row: f64 = ap.matrix[x * 50..(x + 1) * 50].iter().sum();
        assert!((row - 1.0).abs() < 1e-14);
    }
    let mut lifted = 0;
    for j in 0..49 {
        let b = solve_green_boundary(&w, ap.eig.lambdas[j]).unwrap();
        if !b.density_positive() {
            continue;
        }
        let l = lift_anis(&bonds, &w, ap.eig.psi(j), &b.state).unwrap();
        assert!(l.residual < 1e-10, "{j}: {}", l.residual);
        lifted += 1;
    }
    assert!(lifted > 20);
}

#[test]
fn unlabelled_graph_is_rejected() {
    let g = qelab::graph::random_regular(20, 2, 1).unwrap();
    assert!(build_ap(&g, &g.bonds(), &skewed()).is_err());
}

#[test]
fn transfer_operator_decays() {
    let w = skewed();
    let (g, bonds) = random_labelled_regular(40, 2, 3).unwrap();
    for e0 in [-0.6, -0.3, 0.3, 0.6, 0.8] {
        for m in [1, 2] {
            let r = transfer_decay(&g, &bonds, &w, e0, m).unwrap();
            assert!((r.norm_s - 1.0).abs() < 1e-8, "{r:?}");
            assert!(r.row_sum_error < 1e-10 && r.adjoint_defect < 1e-10, "{r:?}");
            assert!(r.norm_su_power <= 1.0 - 1e-3, "{r:?}");
            assert!((r.norm_su_power - r.norm_su_power_iterative).abs() < 1e-4, "{r:?}");
        }
    }
}

#[test]
fn isotropic_twist_is_constant_and_does_not_decay() {
    let w = TransitionWeights::isotropic(2);
    let (g, bonds) = random_labelled_regular(20, 2, 5).unwrap();
    let r = transfer_decay(&g, &bonds, &w, 0.1, 1).unwrap();
    assert!(r.u_spread < 1e-12);
    assert!((r.norm_su_power - 1.0).abs() < 1e-8, "{r:?}");
}

#[test]
fn m0_identity_holds() {
    let w = skewed();
    let (g, bonds) = random_labelled_regular(50, 2, 7).unwrap();
    let ap = build_ap(&g, &bonds, &w).unwrap();
    let pc = PathCalculus::new(&g, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let r = m0_identity_check(&pc, &bonds, &w, &ap, &a).unwrap();
    assert!(r.count > 20);
    assert!(r.residual < 1e-8, "{r:?}");
}

#[test]
fn green_orthogonality_vanishes() {
    let w = skewed();
    for l in [-0.3, 0.15, 0.4] {
        let b = solve_green_boundary(&w, l).unwrap();
        for m in 1..=3 {
            let k = random_tree_kernel(3, m, 17 + m as u64);
            assert_eq!(k.len(), 3 * 2usize.pow(m as u32 - 1));
            let r = green_orthogonality(&w, &b.state, m, &k).unwrap();
            assert!(r.relative < 1e-10, "{l} {m}: {r:?}");
        }
    }
}

#[test]
fn anisotropic_center_of_identity_is_one() {
    let w = skewed();
    let (g, bonds) = random_labelled_regular(30, 2, 9).unwrap();
    let pc = PathCalculus::new(&g, 0).unwrap();
    let k = anis_observable(&pc, AnisObservable::Identity, 0);
    let b = solve_green_boundary(&w, 0.1).unwrap();
    let c = k_lambda_p(&pc, &bonds, &k, &b.state, None).unwrap();
    assert!((c.value - 1.0).norm() < 1e-12);
}
