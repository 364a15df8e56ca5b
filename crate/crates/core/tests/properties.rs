use std::f64::consts::PI;

use nvk_core::conditions::{check_growth, check_nevanlinna_nvar};
use nvk_core::convex_transform::{b_to_k, beta_n, build_mn, k_to_b, transform, transform_general, ConvexCoefficients, LadderCoefficients};
use nvk_core::kernels::{eval_k1, eval_kn_rational, eval_kn_sum, eval_ktilde0, eval_ktilde_md, LadderKernelParams};
use nvk_core::measures::{mass, Atom, AxisBox, Measure};
use nvk_core::representation::{eval, RepresentationData};
use nvk_core::residue_oracle::{find_poles, line_integral, residue_at, ComplexPolynomial, RationalFunction};
use nvk_core::{quadrature, Complex64, PolyUpperPoint, QuadratureConfig};
use proptest::prelude::*;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn upper() -> impl Strategy<Value = Complex64> {
    (-5.0..5.0f64, 0.2..5.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn poly_upper(n: usize) -> impl Strategy<Value = PolyUpperPoint> {
    prop::collection::vec(upper(), n).prop_map(|z| PolyUpperPoint::new(z).unwrap())
}

fn ladder(n: usize) -> impl Strategy<Value = LadderCoefficients> {
    prop::collection::vec(0.2..5.0f64, n - 1).prop_map(|b| LadderCoefficients::new(b).unwrap())
}

fn weights(n: usize) -> impl Strategy<Value = ConvexCoefficients> {
    prop::collection::vec(0.05..1.0f64, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        ConvexCoefficients::new(w.iter().map(|x| x / s).collect()).unwrap()
    })
}

fn atoms(dim: usize, max: usize) -> impl Strategy<Value = Measure> {
    prop::collection::vec((prop::collection::vec(-3.0..3.0f64, dim), 0.1..3.0f64), 1..=max)
        .prop_map(move |a| Measure::atomic(dim, a.into_iter().map(|(x, w)| Atom::new(x, w)).collect()).unwrap())
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + b.norm())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadrature_is_linear(z in upper(), c in -3.0..3.0f64, s in 0.3..3.0f64, alpha in upper(), beta in upper()) {
        let f = |t: f64| 1.0 / ((t - z) * (t - z.conj() - 1.0));
        let g = |t: f64| Complex64::new(1.0 / ((t - c).powi(2) + s * s), 0.0);
        let cfg = cfg();
        let fv = quadrature::integrate_line(f, &cfg).unwrap();
        let gv = quadrature::integrate_line(g, &cfg).unwrap();
        let both = quadrature::integrate_line(|t| alpha * f(t) + beta * g(t), &cfg).unwrap();
        prop_assume!(fv.converged && gv.converged && both.converged);
        let expect = alpha * fv.value + beta * gv.value;
        let scale = (alpha * fv.value).norm() + (beta * gv.value).norm();
        prop_assert!((both.value - expect).norm() <= 10.0 * cfg.rel_tol * scale + cfg.abs_tol);
        prop_assert!((gv.value.re - PI / s).abs() <= 1e-9 * PI / s);
    }

    #[test]
    fn quadrature_commutes_with_conjugation(z in upper(), w in upper()) {
        let f = |t: f64| (t - w.conj()) / ((t - z).powi(2) * (t + Complex64::i()));
        let a = quadrature::integrate_line(f, &cfg()).unwrap();
        let b = quadrature::integrate_line(|t| f(t).conj(), &cfg()).unwrap();
        prop_assert!((a.value.conj() - b.value).norm() <= 1e-12 * (1.0 + a.value.norm()));
    }

    #[test]
    fn rational_functions_by_residues(
        poles in prop::collection::vec(upper(), 2..=6),
        flips in prop::collection::vec(any::<bool>(), 6),
        num in prop::collection::vec(upper(), 0..=3),
    ) {
        let located: Vec<Complex64> = poles.iter().zip(&flips).map(|(p, &f)| if f { p.conj() } else { *p }).collect();
        let num_deg = num.len().min(located.len() - 2);
        let numerator = ComplexPolynomial::new(num[..num_deg].iter().copied().chain([Complex64::new(1.0, 0.0)]).collect());
        let f = RationalFunction::new(numerator, ComplexPolynomial::from_roots(&located)).unwrap();
        let by_residue = line_integral(&f).unwrap();
        let by_quadrature = quadrature::integrate_line(|t| f.eval(Complex64::new(t, 0.0)), &cfg()).unwrap();
        let scale = by_residue.value.norm().max(by_residue.lower_value.norm()).max(1e-300);
        prop_assert!((by_residue.value - by_residue.lower_value).norm() <= 1e-10 * scale.max(1.0));
        // relative to ∫|f| when the integral itself vanishes
        let modulus = quadrature::integrate_line(|t| Complex64::new(f.eval(Complex64::new(t, 0.0)).norm(), 0.0), &cfg()).unwrap();
        prop_assert!((by_residue.value - by_quadrature.value).norm() <= 1e-8 * by_residue.value.norm().max(modulus.value.re));
    }

    #[test]
    fn residues_are_linear(p in upper(), q in upper(), a in upper(), c in upper()) {
        let den = ComplexPolynomial::from_roots(&[p, p, q]);
        let f = RationalFunction::new(ComplexPolynomial::constant(Complex64::new(1.0, 0.0)), den.clone()).unwrap();
        let g = RationalFunction::new(ComplexPolynomial::from_real(&[0.0, 1.0]), den.clone()).unwrap();
        let sum = RationalFunction::new(ComplexPolynomial::linear(a, c), den).unwrap();
        prop_assume!((p - q).norm() > 0.1);
        for pole in find_poles(&sum) {
            let lhs = residue_at(&sum, pole.location, pole.multiplicity).unwrap();
            let rhs = a * residue_at(&f, pole.location, pole.multiplicity).unwrap()
                + c * residue_at(&g, pole.location, pole.multiplicity).unwrap();
            prop_assert!(close(lhs, rhs, 1e-9));
        }
    }

    #[test]
    fn mass_is_positive_additive_and_monotone(
        mu in atoms(2, 5),
        lo in prop::collection::vec(-3.0..0.0f64, 2),
        w in prop::collection::vec(0.1..3.0f64, 2),
        cut in 0.1..0.9f64,
    ) {
        let measure = Measure::product(vec![Measure::lebesgue(1), mu.clone()]).unwrap();
        let hi: Vec<f64> = lo.iter().zip(&w).map(|(l, w)| l + w).collect();
        let split = lo[0] + cut * w[0];
        let boxed = |l0: f64, h0: f64| AxisBox::new(vec![-1.0, l0, lo[1]], vec![1.0, h0, hi[1]]).unwrap();
        let whole = mass(&measure, &[boxed(lo[0], hi[0])], &cfg()).unwrap().value.re;
        let left = mass(&measure, &[boxed(lo[0], split)], &cfg()).unwrap().value.re;
        let right = mass(&measure, &[boxed(split, hi[0])], &cfg()).unwrap().value.re;
        let union = mass(&measure, &[boxed(lo[0], split), boxed(split, hi[0])], &cfg()).unwrap().value.re;
        let bigger = mass(&measure, &[boxed(lo[0] - 1.0, hi[0])], &cfg()).unwrap().value.re;
        prop_assert!(left >= 0.0 && right >= 0.0);
        prop_assert!(union <= whole + 1e-9 && whole <= bigger + 1e-9);
        // the closed boxes share the face x = split, which holds no Lebesgue mass
        // but may hold atoms, so the sum can exceed the whole
        prop_assert!(left + right >= whole - 1e-9);
    }

    #[test]
    fn identity_pushforward_is_the_product(mu in atoms(1, 4), lo in prop::collection::vec(-3.0..2.0f64, 2), w in prop::collection::vec(0.1..4.0f64, 2)) {
        let push = Measure::pushforward_2d(mu.clone(), [1.0, 0.0, 0.0, 1.0]).unwrap();
        let prod = Measure::product(vec![mu, Measure::lebesgue(1)]).unwrap();
        let b = AxisBox::new(lo.clone(), lo.iter().zip(&w).map(|(l, w)| l + w).collect()).unwrap();
        let a = mass(&push, std::slice::from_ref(&b), &cfg()).unwrap().value.re;
        let c = mass(&prod, &[b], &cfg()).unwrap().value.re;
        prop_assert!((a - c).abs() <= 1e-10 * (1.0 + c));
    }

    #[test]
    fn kernel_forms_agree(n in 1usize..=4, seed in any::<u64>()) {
        let mut rng = nvk_core::sampling::rng(seed);
        let z = nvk_core::sampling::poly_upper_point(&mut rng, n, (-5.0, 5.0), (0.1, 5.0));
        let t: Vec<f64> = (0..n).map(|_| rand::Rng::gen_range(&mut rng, -10.0..10.0)).collect();
        let a = eval_kn_sum(&z, &t).unwrap();
        let b = eval_kn_rational(&z, &t).unwrap();
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn k1_is_herglotz_and_splits(z in upper(), t in -50.0..50.0f64) {
        let v = eval_k1(z, t).unwrap();
        prop_assert!(v.im > 0.0);
        let split = 1.0 / (t - z) - t / (1.0 + t * t);
        prop_assert!((v - split).norm() <= 1e-12 * (1.0 + v.norm()));
    }

    #[test]
    fn ladder_top_is_the_pulled_back_kernel(z in poly_upper(3), b in ladder(3), t in prop::collection::vec(-3.0..3.0f64, 3)) {
        let top = eval_ktilde_md(&z, &t, &LadderKernelParams::new(3, 0, &b).unwrap()).unwrap();
        let pulled = eval_ktilde0(&z, &t, &b).unwrap();
        let m = build_mn(&b);
        let image: Vec<f64> = (0..3).map(|r| (0..3).map(|c| m[(r, c)] * t[c]).sum()).collect();
        let direct = eval_kn_rational(&z, &image).unwrap();
        prop_assert!((top - pulled).norm() <= 1e-10 * (1.0 + top.norm()));
        prop_assert!((pulled - direct).norm() <= 1e-12 * (1.0 + direct.norm()));
    }

    #[test]
    fn atomic_one_variable_eval_is_the_finite_sum(a in -3.0..3.0f64, bb in 0.0..3.0f64, mu in atoms(1, 5), z in upper()) {
        let data = RepresentationData::one_var(a, bb, mu.clone()).unwrap();
        let value = eval(&data, &PolyUpperPoint::single(z).unwrap(), &cfg()).unwrap().value;
        let Measure::Atomic { atoms, .. } = &mu else { unreachable!() };
        let sum: Complex64 = atoms.iter().map(|at| at.weight * eval_k1(z, at.location[0]).unwrap()).sum();
        let expect = a + bb * z + sum / PI;
        prop_assert!((value - expect).norm() <= 1e-14 * (1.0 + expect.norm()));
        prop_assert!(value.im >= 0.0);
    }

    #[test]
    fn raising_a_linear_coefficient_raises_im(z in poly_upper(2), mu in atoms(2, 3), eps in 0.0..2.0f64, l in 0usize..2) {
        let base = RepresentationData::new(0.5, vec![0.3, 1.0], mu.clone()).unwrap();
        let mut b = vec![0.3, 1.0];
        b[l] += eps;
        let raised = RepresentationData::new(0.5, b, mu).unwrap();
        let v0 = eval(&base, &z, &cfg()).unwrap().value;
        let v1 = eval(&raised, &z, &cfg()).unwrap().value;
        prop_assert!(v0.im >= 0.0);
        prop_assert!(((v1.im - v0.im) - eps * z.coords()[l].im).abs() <= 1e-12 * (1.0 + v1.im.abs()));
    }

    #[test]
    fn coefficients_roundtrip(k in weights(5), b in ladder(5)) {
        let back = b_to_k(&k_to_b(&k).unwrap());
        for (x, y) in back.values().iter().zip(k.values()) {
            prop_assert!((x - y).abs() <= 1e-14);
        }
        let again = k_to_b(&b_to_k(&b)).unwrap();
        for (x, y) in again.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-14 * y.max(1.0));
        }
        let det = build_mn(&b).determinant();
        prop_assert!((beta_n(&b) - det).abs() <= 1e-12 * det.abs());
    }

    #[test]
    fn general_transform_agrees_with_the_strict_one(k in weights(3), mu in atoms(1, 3), z in poly_upper(3)) {
        let data = RepresentationData::one_var(0.2, 0.7, mu).unwrap();
        let strict = transform(&data, &k).unwrap();
        let general = transform_general(&data, &k).unwrap();
        let a = nvk_core::representation::eval_reduced(&strict, &z, &cfg()).unwrap().value;
        let b = nvk_core::representation::eval_reduced(&general, &z, &cfg()).unwrap().value;
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn transformed_measures_satisfy_both_conditions(n in 2usize..=3, k_seed in any::<u64>(), mu in atoms(1, 3)) {
        let mut rng = nvk_core::sampling::rng(k_seed);
        let k = ConvexCoefficients::new(nvk_core::sampling::convex_weights(&mut rng, n, 0.05)).unwrap();
        let data = transform(&RepresentationData::one_var(0.0, 1.0, mu).unwrap(), &k).unwrap();
        let growth = check_growth(data.mu(), &cfg()).unwrap();
        prop_assert!(growth.converged && !growth.diverged);
        for z in nvk_core::conditions::z_grid(n, 3) {
            let v = check_nevanlinna_nvar(data.mu(), &z, &cfg()).unwrap();
            prop_assert!(v.is_zero(), "{v:?}");
        }
    }
}
