use proptest::prelude::*;

use plab::dirac;
use plab::frobenius::FrobeniusPair;
use plab::groupoid::{groupoid_axioms_residual, random_composable_triple, ActionGroupoid, MatrixRep};
use plab::linalg;
use plab::report::VerificationReport;
use plab::sample::Sampler;
use plab::spray::{self, SprayPoint};
use plab::{LieAlgebra, Mat, Vector};

fn algebras() -> Vec<LieAlgebra> {
    vec![LieAlgebra::so3(), LieAlgebra::sl2(), LieAlgebra::aff1_x_aff1(), LieAlgebra::heisenberg3(), LieAlgebra::borel()]
}

fn vector(n: usize, r: f64) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-r..r, n).prop_map(Vector::from_vec)
}

fn antisymmetric(n: usize) -> impl Strategy<Value = Mat> {
    prop::collection::vec(-2.0..2.0f64, n * n).prop_map(move |xs| {
        let m = Mat::from_vec(n, n, xs);
        &m - m.transpose()
    })
}

fn algebra_and_vectors(count: usize, r: f64) -> impl Strategy<Value = (LieAlgebra, Vec<Vector>)> {
    (0..algebras().len()).prop_flat_map(move |i| {
        let alg = algebras()[i].clone();
        let n = alg.dim();
        (Just(alg), prop::collection::vec(vector(n, r), count))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric_and_jacobi((alg, xs) in algebra_and_vectors(3, 1.0)) {
        let (x, y, z) = (&xs[0], &xs[1], &xs[2]);
        let b = |u: &Vector, v: &Vector| alg.bracket(u, v).unwrap();
        prop_assert!(linalg::max_abs_vec(&(b(x, y) + b(y, x))) < 1e-14);
        let jac = b(x, &b(y, z)) + b(y, &b(z, x)) + b(z, &b(x, y));
        prop_assert!(linalg::max_abs_vec(&jac) < 1e-13);
    }

    #[test]
    fn poisson_matrix_is_linear_and_antisymmetric((alg, xs) in algebra_and_vectors(2, 1.0), t in -2.0..2.0f64) {
        let p = |xi: &Vector| alg.poisson_matrix(xi).unwrap();
        let lhs = p(&(&xs[0] + &xs[1] * t));
        prop_assert!(linalg::max_abs(&(&lhs - (p(&xs[0]) + p(&xs[1]) * t))) < 1e-13);
        prop_assert!(linalg::antisymmetry_defect(&lhs) == 0.0);
    }

    #[test]
    fn coadjoint_flow_is_a_one_parameter_group((alg, xs) in algebra_and_vectors(2, 1.0), s in -1.0..1.0f64, t in -1.0..1.0f64) {
        let (x, xi) = (&xs[0], &xs[1]);
        let two_steps = alg.coad_exp(&(x * t), &alg.coad_exp(&(x * s), xi).unwrap()).unwrap();
        let one_step = alg.coad_exp(&(x * (s + t)), xi).unwrap();
        prop_assert!(linalg::max_abs_vec(&(two_steps - one_step)) < 1e-12);
    }

    #[test]
    fn xi_operator_inverts_the_difference_quotient((alg, xs) in algebra_and_vectors(1, 1.5)) {
        let x = &xs[0];
        let n = alg.dim();
        let lhs = alg.exp_ad(x).unwrap() - Mat::identity(n, n);
        let rhs = alg.ad_matrix(x).unwrap() * alg.xi_operator(x).unwrap();
        prop_assert!(linalg::max_abs(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn spray_flow_preserves_x_and_composes((alg, xs) in algebra_and_vectors(2, 1.0), s in 0.0..1.0f64, t in 0.0..1.0f64) {
        let p = SprayPoint::new(xs[0].clone(), xs[1].clone());
        let q = spray::spray_flow(&alg, t, &spray::spray_flow(&alg, s, &p).unwrap()).unwrap();
        let r = spray::spray_flow(&alg, s + t, &p).unwrap();
        prop_assert_eq!(&q.x, &p.x);
        prop_assert!(linalg::max_abs_vec(&(q.xi - r.xi)) < 1e-12);
    }

    #[test]
    fn omega_g_is_antisymmetric((alg, xs) in algebra_and_vectors(2, 1.0)) {
        let w = spray::omega_g_matrix(&alg, &SprayPoint::new(xs[0].clone(), xs[1].clone())).unwrap();
        prop_assert!(linalg::antisymmetry_defect(&w) < 1e-14);
    }

    #[test]
    fn dirac_graphs_are_lagrangian(pi in antisymmetric(4), w in antisymmetric(4)) {
        let l = dirac::graph_of_bivector(&pi).unwrap();
        prop_assert!(l.isotropy_defect() < 1e-12);
        let back = dirac::as_bivector(&l).unwrap();
        prop_assert!(linalg::max_abs(&(back - &pi)) < 1e-9);
        prop_assert!(dirac::graph_of_twoform(&w).unwrap().isotropy_defect() < 1e-12);
    }

    #[test]
    fn gauge_transforms_compose(pi in antisymmetric(3), s1 in antisymmetric(3), s2 in antisymmetric(3)) {
        let l = dirac::graph_of_bivector(&pi).unwrap();
        let twice = dirac::gauge(&dirac::gauge(&l, &s1).unwrap(), &s2).unwrap();
        let once = dirac::gauge(&l, &(&s1 + &s2)).unwrap();
        prop_assert!(twice.same_as(&once));
        prop_assert!(dirac::gauge(&dirac::gauge(&l, &s1).unwrap(), &(-&s1)).unwrap().same_as(&l));
    }

    #[test]
    fn images_along_isomorphisms_invert(pi in antisymmetric(3), entries in prop::collection::vec(-1.0..1.0f64, 9)) {
        let f = Mat::from_vec(3, 3, entries) + Mat::identity(3, 3) * 3.0;
        let l = dirac::graph_of_bivector(&pi).unwrap();
        let round = dirac::backward_image(&f, &dirac::forward_image(&f, &l).unwrap()).unwrap();
        prop_assert!(round.same_as(&l));
        let id = Mat::identity(3, 3);
        prop_assert!(dirac::backward_image(&id, &l).unwrap().same_as(&l));
    }

    #[test]
    fn pushforward_of_bivector_graph(pi in antisymmetric(3), entries in prop::collection::vec(-1.0..1.0f64, 6)) {
        let f = Mat::from_vec(2, 3, entries);
        let l = dirac::forward_image(&f, &dirac::graph_of_bivector(&pi).unwrap()).unwrap();
        let want = dirac::graph_of_bivector(&(&f * &pi * f.transpose())).unwrap();
        prop_assert!(l.same_as(&want));
    }

    #[test]
    fn action_groupoid_axioms_hold(seed in any::<u64>(), which in 0usize..3) {
        let rep = [MatrixRep::so3_defining(), MatrixRep::sl2_defining(), MatrixRep::heisenberg3_defining()][which].clone();
        let grp = ActionGroupoid::new(rep);
        let mut s = Sampler::new(seed);
        let triple = random_composable_triple(&grp, &mut s, 1.0).unwrap();
        prop_assert!(groupoid_axioms_residual(&grp, &triple).unwrap() < 1e-10);
    }

    #[test]
    fn horizontal_lift_is_a_right_inverse(u in vector(1, 0.5)) {
        let p = FrobeniusPair::new(LieAlgebra::sl2(), Mat::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]), Vector::from_vec(vec![0.0, 1.0])).unwrap();
        let xi = p.reference_extension() + p.annihilator() * &u;
        let hor = p.horizontal_lift(&xi).unwrap();
        let d = hor.ncols();
        prop_assert!(linalg::max_abs(&(p.h_basis().transpose() * hor - Mat::identity(d, d))) < 1e-12);
    }

    #[test]
    fn report_passes_iff_max_within_tol(residuals in prop::collection::vec(0.0..1.0f64, 1..20), tol in 0.0..1.0f64) {
        let outcomes: Vec<_> = residuals.iter().map(|r| Ok(*r)).collect();
        let r = VerificationReport::from_outcomes("p", tol, None, &outcomes);
        let max = residuals.iter().cloned().fold(0.0, f64::max);
        prop_assert_eq!(r.pass, max <= tol);
        prop_assert_eq!(r.max_residual, max);
        prop_assert_eq!(r.failures, residuals.iter().filter(|x| **x > tol).count());
        prop_assert!(r.worst.len() <= 5);
    }
}
