mod common;

use common::*;
use klein_fuchs::fuchsian::{residue_constraints, EquationA, EquationSL};
use klein_fuchs::klein::klein;
use klein_fuchs::monodromy::{
    compare_with_hypergeometric, det, eigenvalues, identity, inverse, max_diff, monodromy_rep, monodromy_rep_sl, mul,
    projective_distance, projective_equal, scale, schwarzian_residual, trace_test, transport, Mat2,
    MonodromyOptions, TransportOptions,
};
use klein_fuchs::ode::LinearOde2;
use klein_fuchs::solver::{solve_equation, SolveOptions};
use klein_fuchs::Complex64 as C;
use proptest::prelude::*;

fn mat(a: C, b: C, c: C, d: C) -> Mat2 {
    [[a, b], [c, d]]
}

fn complex(r: f64) -> impl Strategy<Value = C> {
    (-r..r, -r..r).prop_map(|(a, b)| cc(a, b))
}

fn matrix() -> impl Strategy<Value = Mat2> {
    (complex(2.0), complex(2.0), complex(2.0), complex(2.0))
        .prop_map(|(a, b, c, d)| mat(a, b, c, d))
        .prop_filter("nonsingular", |m| det(m).norm() > 0.1)
}

fn solved(seed: u64, mults: &[u32]) -> Vec<EquationA> {
    let mut rng = rng(seed);
    let skel = random_skeleton(&mut rng, mults);
    let rep = solve_equation(&skel, seed, &SolveOptions::default()).unwrap();
    rep.solutions
        .iter()
        .map(|s| skel.with_accessory(s.accessory.clone().unwrap()).unwrap())
        .filter(|e| e.satisfies_0d())
        .collect()
}

fn random_sl(seed: u64) -> EquationSL {
    let mut rng = rng(seed);
    let mut pts: Vec<C> = Vec::new();
    for _ in 0..4 {
        let p = rand_point(&mut rng, &pts, 0.8);
        pts.push(p);
    }
    let exps: Vec<C> = (0..4).map(|_| rand_generic(&mut rng) + 0.5).collect();
    let betas = residue_constraints(&pts, &exps, &[rand_c(&mut rng, 1.0)]).unwrap();
    EquationSL::new(pts, exps, betas).unwrap()
}

#[test]
fn projective_equality_examples() {
    let one = cc(1.0, 0.0);
    let zero = cc(0.0, 0.0);
    let m = mat(cc(1.0, 2.0), cc(0.5, 0.0), cc(-1.0, 0.3), cc(2.0, 0.0));
    assert!(projective_equal(&m, &scale(&m, cc(-1.0, 0.0)), 1e-15));
    let d12 = mat(one, zero, zero, cc(2.0, 0.0));
    assert!(projective_equal(&d12, &mat(cc(2.0, 0.0), zero, zero, cc(4.0, 0.0)), 1e-15));
    assert!(!projective_equal(&identity(), &d12, 1e-3));
}

#[test]
fn trace_test_examples_and_boundary() {
    assert!(trace_test(0.0, 0.0, 0.0).unitarizable);
    assert!(trace_test(1.0, 1.0, 1.0).unitarizable);
    // t3 on the surface t1^2 + t2^2 + t3^2 - t1 t2 t3 = 4
    let (t1, t2) = (0.7f64, -1.1f64);
    let disc = (t1 * t2).powi(2) - 4.0 * (t1 * t1 + t2 * t2 - 4.0);
    let t3 = (t1 * t2 + disc.sqrt()) / 2.0;
    let probe = trace_test(t1, t2, t3);
    assert!((probe.value - 4.0).abs() < 1e-12);
    assert!(probe.boundary && !probe.unitarizable);
}

#[test]
fn transport_group_properties() {
    let eq = random_sl(51);
    let ode = eq.ode().unwrap();
    let opts = TransportOptions::default();
    assert_eq!(transport(&ode, &[], &opts).unwrap(), identity());
    let path = [cc(3.1, 2.9), cc(2.4, -3.0), cc(-3.2, -2.6)];
    let back: Vec<C> = path.iter().rev().copied().collect();
    let m = mul(&transport(&ode, &back, &opts).unwrap(), &transport(&ode, &path, &opts).unwrap());
    assert!(max_diff(&m, &identity()) < 1e-9);
    // a closed loop that encircles no singular point
    let far = cc(6.0, 6.0);
    let lp: Vec<C> = (0..=12).map(|i| far + C::from_polar(0.5, std::f64::consts::TAU * i as f64 / 12.0)).collect();
    assert!(max_diff(&transport(&ode, &lp, &opts).unwrap(), &identity()) < 1e-9);
}

#[test]
fn transport_matches_a_closed_form_solution() {
    // y'' = y: the transport matrix over a segment of length h is [[cosh h, sinh h], [sinh h, cosh h]]
    use klein_fuchs::ratfn::RationalFn;
    let ode = LinearOde2::normal_form(RationalFn::new(klein_fuchs::poly::Poly::constant(cc(-1.0, 0.0)), vec![]));
    let h = cc(0.8, 0.6);
    let t = transport(&ode, &[cc(0.0, 0.0), h], &TransportOptions::default()).unwrap();
    let want = mat(h.cosh(), h.sinh(), h.sinh(), h.cosh());
    assert!(max_diff(&t, &want) < 1e-10);
}

#[test]
fn apparent_points_have_trivial_monodromy() {
    let opts = MonodromyOptions::default();
    for eq in solved(52, &[2]).iter().chain(&solved(53, &[1, 2])) {
        let rep = monodromy_rep(eq, None, &opts).unwrap();
        for a in &eq.points {
            let m = rep.matrix_at(*a).unwrap();
            assert!(max_diff(m, &identity()) < 1e-7, "{a}");
        }
    }
}

#[test]
fn hypergeometric_local_monodromy_at_zero() {
    for eq in solved(54, &[1]) {
        let hg = klein(&eq).unwrap().target.as_equation().unwrap();
        let rep = monodromy_rep(&hg, None, &MonodromyOptions::default()).unwrap();
        let m = rep.matrix_at(cc(0.0, 0.0)).unwrap();
        // exponents 0 and alpha + 1 give eigenvalue ratio e^{2 pi i alpha}
        let [l1, l2] = eigenvalues(m);
        let want = (cc(0.0, std::f64::consts::TAU) * hg.alpha).exp();
        let ok = (l1 / l2 - want).norm() < 1e-7 || (l2 / l1 - want).norm() < 1e-7;
        assert!(ok, "{l1} {l2} vs ratio {want}");
    }
}

#[test]
fn source_and_target_monodromies_agree() {
    let opts = MonodromyOptions::comparison();
    for eq in solved(55, &[2]).iter().chain(&solved(56, &[1, 2])) {
        let cmp = compare_with_hypergeometric(&klein(eq).unwrap(), &opts).unwrap();
        for l in &cmp.loops {
            assert!(l.projective_distance < 1e-6, "{}: {:e}", l.singularity, l.projective_distance);
            if l.apparent {
                assert!(l.identity_distance < 1e-7);
            }
        }
    }
}

#[test]
fn normal_form_loop_product_is_trivial() {
    let eq = random_sl(57);
    let rep = monodromy_rep_sl(&eq, None, &MonodromyOptions::default()).unwrap();
    assert!(max_diff(&rep.ordered_product(), &identity()) < 1e-7);
}

#[test]
fn schwarzian_matches_potential_and_ignores_basis() {
    let opts = MonodromyOptions::default();
    let samples = [cc(2.9, 2.7), cc(-3.1, 0.4), cc(0.3, -3.3), cc(3.4, -1.0)];
    for seed in 60..64 {
        let eq = random_sl(seed);
        let plain = schwarzian_residual(&eq, &samples, None, &opts).unwrap();
        assert!(plain < 1e-7, "seed {seed}: {plain:e}");
        let b = mat(cc(1.0, 0.5), cc(-0.3, 0.0), cc(0.2, 0.1), cc(0.8, -0.4));
        let moved = schwarzian_residual(&eq, &samples, Some(b), &opts).unwrap();
        assert!(moved < 1e-7);
    }
}

#[test]
fn schwarzian_of_the_trivial_equation() {
    // all exponent differences 1 and residues 0: w'' = 0, f = z up to a Mobius map
    let pts = vec![cc(0.0, 0.0), cc(1.0, 0.0), cc(-1.0, 0.3)];
    let eq = EquationSL::new(pts, vec![cc(1.0, 0.0); 3], vec![cc(0.0, 0.0); 3]).unwrap();
    let r = schwarzian_residual(&eq, &[cc(2.0, 1.0), cc(-1.5, -1.0)], None, &MonodromyOptions::default()).unwrap();
    assert!(r < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projective_distance_is_scale_invariant(m in matrix(), n in matrix(), s in complex(3.0)) {
        prop_assume!(s.norm() > 0.1);
        let d = projective_distance(&m, &n);
        prop_assert!((projective_distance(&scale(&m, s), &n) - d).abs() < 1e-12);
        prop_assert!((projective_distance(&m, &scale(&n, s)) - d).abs() < 1e-12);
        prop_assert!((projective_distance(&n, &m) - d).abs() < 1e-12);
        prop_assert!(projective_distance(&m, &scale(&m, s)) < 1e-14);
    }

    #[test]
    fn conjugation_preserves_projective_equality(m in matrix(), l in matrix(), s in complex(3.0)) {
        prop_assume!(s.norm() > 0.1);
        let conj = |x: &Mat2| mul(&inverse(&l), &mul(x, &l));
        prop_assert!(projective_equal(&conj(&m), &conj(&scale(&m, s)), 1e-10));
    }
}
