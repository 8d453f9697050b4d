use qelab::graph::{build_named, geometry_profile, random_regular, NamedGraph};
use qelab::kernel::{ops, PathCalculus};
use qelab::variance::*;
use qelab::{EigenSystem, GradedKernel, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn petersen() -> (qelab::RegularGraph, EigenSystem) {
    let g = build_named(NamedGraph::Petersen).unwrap();
    let e = EigenSystem::adjacency(&g).unwrap();
    (g, e)
}

#[test]
fn complete4_diagonal_observable_matches_double_loop() {
    let g = build_named(NamedGraph::Complete(4)).unwrap();
    let eig = EigenSystem::adjacency(&g).unwrap();
    let pc = PathCalculus::new(&g, 0).unwrap();
    let a = [1.0, -1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0];
    let r = quantum_variance(&pc, &eig, &GradedKernel::single(vertex_kernel(&a)), Centering::None).unwrap();
    // oracle: explicit double sum over (x, y) of psi(x) K(x, y) psi(y)
    let mut var = 0.0;
    for j in 0..4 {
        let psi = eig.psi(j);
        let mut d = 0.0;
        for x in 0..4 {
            for y in 0..4 {
                let kxy = if x == y { a[x] } else { 0.0 };
                d += psi[x] * kxy * psi[y];
            }
        }
        var += d * d;
    }
    var /= 4.0;
    assert!((r.var - var).abs() < 1e-14);
    assert!(r.var <= r.hsn_sq);
}

#[test]
fn adjacency_diagonal_is_lambda() {
    let (g, eig) = petersen();
    let pc = PathCalculus::new(&g, 1).unwrap();
    let r = quantum_variance(&pc, &eig, &GradedKernel::single(ops::indicator(&pc, 1)), Centering::Spherical).unwrap();
    for row in &r.rows {
        assert!((row.diag.re - row.lambda).abs() < 1e-12);
        assert!((row.center.re - row.lambda).abs() < 1e-12);
    }
    assert!(r.var < 1e-20);
}

#[test]
fn commutator_has_zero_variance() {
    let (g, eig) = petersen();
    let pc = PathCalculus::new(&g, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let k = GradedKernel::single(pc.random(2, &mut rng));
    let lk = ops::op_l(&pc, &k).unwrap();
    let r = quantum_variance(&pc, &eig, &lk, Centering::None).unwrap();
    assert!(r.var < 1e-20, "{}", r.var);
}

#[test]
fn variance_is_subadditive_up_to_two() {
    let (g, eig) = petersen();
    let pc = PathCalculus::new(&g, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let a = GradedKernel::single(pc.random(2, &mut rng));
        let b = GradedKernel::single(pc.random(1, &mut rng));
        let v = |k: &GradedKernel| quantum_variance(&pc, &eig, k, Centering::None).unwrap();
        let (va, vb, vab) = (v(&a), v(&b), v(&a.add(&b)));
        assert!(vab.var <= 2.0 * va.var + 2.0 * vb.var + 1e-12);
        for r in [va, vb, vab] {
            assert!(r.var >= 0.0 && r.var <= r.hsn_sq + 1e-12);
        }
    }
}

#[test]
fn nb_variance_of_constant_vanishes() {
    let (g, eig) = petersen();
    let pc = PathCalculus::new(&g, 3).unwrap();
    for k in 1..=3 {
        let one = GradedKernel::single(pc.constant(k, C64::new(1.0, 0.0)));
        assert!(nb_variance(&pc, &eig, &one, None).unwrap().var < 1e-10);
    }
    let zero = GradedKernel::single(pc.zero(1));
    assert_eq!(nb_variance(&pc, &eig, &zero, None).unwrap().var, 0.0);
    assert!(nb_variance(&pc, &eig, &zero, Some((2.5, 2.7))).is_err());
}

#[test]
fn local_nb_variance_is_dominated_by_the_norm() {
    let (g, eig) = petersen();
    let pc = PathCalculus::new(&g, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let k = pc.random(1, &mut rng);
        let v = nb_variance(&pc, &eig, &GradedKernel::single(k.clone()), Some((-2.0, 2.0))).unwrap();
        let ratio = v.var / k.norm_sq(pc.n());
        assert!(ratio <= 10.0, "ratio {ratio}");
    }
}

#[test]
fn transfer_identities_hold_on_petersen() {
    let (g, eig) = petersen();
    let pc = PathCalculus::new(&g, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for m in 1..=3 {
        let k = pc.random(m, &mut rng);
        let r = isotropic_transfer_identities(&pc, &eig, &a, &k).unwrap();
        assert!(r.residual_i < 1e-10, "m = {m}: {}", r.residual_i);
        assert!(r.residual_ii < 1e-10, "m = {m}: {}", r.residual_ii);
        assert_eq!(r.tempered, 9);
    }
}

#[test]
fn constant_vertex_function_gives_zero_in_identity_one() {
    let (g, eig) = petersen();
    let pc = PathCalculus::new(&g, 1).unwrap();
    let kp = origin_kernel(&pc, &[1.0; 10]).unwrap();
    let nb = qelab::nb::build_nb(&g);
    for j in tempered_indices(&eig, 2, None) {
        let lp = qelab::nb::lift_eigenvector(&nb, eig.psi(j), eig.lambdas[j], qelab::nb::Branch::Plus);
        assert!(qelab::nb::kb_form(&pc, &kp, &lp.f_star, &lp.f).unwrap().norm() < 1e-12);
    }
}

#[test]
fn smoothing_inequalities_hold() {
    for (name, ns) in [(NamedGraph::Heawood, vec![1]), (NamedGraph::Petersen, vec![1, 2, 3])] {
        let g = build_named(name).unwrap();
        let eig = EigenSystem::adjacency(&g).unwrap();
        let geo = geometry_profile(&g);
        let pc = PathCalculus::new(&g, 2).unwrap();
        let k = pc.random(1, &mut ChaCha8Rng::seed_from_u64(6)).centered();
        for n in ns {
            let r = variance_smoothing_check(&pc, &eig, &geo, &k, n).unwrap();
            assert!(r.holds_nabla && r.holds_final, "{name:?} n = {n}: {r:?}");
        }
        let z = variance_smoothing_check(&pc, &eig, &geo, &pc.zero(1), 1).unwrap();
        assert_eq!(z.var_nabla_star, 0.0);
        assert!(z.holds_nabla);
    }
}

#[test]
fn km_distance_small_on_a_random_graph() {
    let g = random_regular(400, 3, 1).unwrap();
    let l = qelab::eigen::adjacency_spectrum(&g).unwrap();
    assert!(km_cdf_distance(&l, 2) < 0.08);
}
