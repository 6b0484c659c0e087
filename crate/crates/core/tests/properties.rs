use g2_core::deform::{deform_conformal, deform_exact};
use g2_core::irreps::{decompose3, i_phi, project2, g2_member};
use g2_core::json::{form_from_json, form_to_json};
use g2_core::octonion::{associator, cross, triple, Octonion};
use g2_core::random::{self, Rng64};
use g2_core::structure::G2Structure;
use g2_core::{Form, Rational, Scalar, Vec7};
use proptest::prelude::*;

fn rng(seed: u64) -> Rng64 {
    random::rng(seed)
}

fn structure(r: &mut Rng64) -> G2Structure<f64> {
    G2Structure::build(random::gl_phi(r, 0.2)).expect("near-identity pullback")
}

fn octonion(r: &mut Rng64) -> Octonion<f64> {
    let re = random::vector(r, 1.0)[0];
    Octonion::new(re, random::vector(r, 1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wedge_is_graded_commutative(seed in any::<u64>(), p in 0usize..=4, q in 0usize..=3) {
        let mut r = rng(seed);
        let a = random::float_form(&mut r, p, 1.0);
        let b = random::float_form(&mut r, q, 1.0);
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        let sign = if (p * q) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((&ab - &ba.scale(&sign)).max_abs() < 1e-12);
    }

    #[test]
    fn hodge_is_an_involution(seed in any::<u64>(), p in 0usize..=7) {
        let mut r = rng(seed);
        let s = structure(&mut r);
        let a = random::float_form(&mut r, p, 1.0);
        let back = s.metric().hodge(&s.metric().hodge(&a));
        prop_assert!((&back - &a).max_abs() < 1e-11);
    }

    #[test]
    fn exact_hodge_is_an_involution(seed in any::<u64>(), p in 0usize..=7) {
        let s = G2Structure::<Rational>::standard();
        let a = random::rational_form(&mut rng(seed), p, 9, 4);
        prop_assert_eq!(s.metric().hodge(&s.metric().hodge(&a)), a);
    }

    #[test]
    fn three_form_splitting_reconstructs(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = structure(&mut r);
        let chi = random::float_form(&mut r, 3, 1.0);
        let d = decompose3(&s, &chi).unwrap();
        prop_assert!((&d.reconstruct(&s) - &chi).max_abs() < 1e-11);
        prop_assert!(s.metric().trace(d.h.mat()).abs() < 1e-11);
    }

    #[test]
    fn lambda27_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = structure(&mut r);
        let h = random::traceless_symmetric(&mut r, &s, 1.0);
        let d = decompose3(&s, &i_phi(&s, &h)).unwrap();
        prop_assert!((&d.h - &h).max_abs() < 1e-11);
        prop_assert!(d.a.abs() < 1e-12 && d.omega.max_abs() < 1e-12);
    }

    #[test]
    fn two_form_parts_are_complementary(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = structure(&mut r);
        let alpha = random::float_form(&mut r, 2, 1.0);
        let d = project2(&s, &alpha).unwrap();
        prop_assert!((&(&d.part7 + &d.part14) - &alpha).max_abs() < 1e-12);
        prop_assert!(s.metric().inner(&d.part7, &d.part14).unwrap().abs() < 1e-11);
        prop_assert!(g2_member(&s, &d.part14, 1e-9).unwrap());
    }

    #[test]
    fn metric_scales_under_rescaling(seed in any::<u64>(), lambda in 0.2f64..5.0) {
        let mut r = rng(seed);
        let s = structure(&mut r);
        let t = G2Structure::build(s.phi().scale(&lambda)).unwrap();
        let want = s.g().scale(&lambda.powf(2.0 / 3.0));
        prop_assert!((t.g() - &want).max_abs() < 1e-12 * want.max_abs());
        prop_assert!((t.sqrt_det_g() - s.sqrt_det_g() * lambda.powf(7.0 / 3.0)).abs() < 1e-12 * t.sqrt_det_g());
        let (g, psi) = deform_conformal(&s, &lambda).unwrap();
        prop_assert!((&g - t.g()).max_abs() < 1e-12 * g.max_abs());
        prop_assert!((&psi - t.psi()).max_abs() < 1e-12 * psi.max_abs());
    }

    #[test]
    fn small_perturbations_stay_positive(seed in any::<u64>(), eps in -0.1f64..0.1) {
        let mut r = rng(seed);
        let s = structure(&mut r);
        let chi = random::float_form(&mut r, 3, 1.0);
        let t = deform_exact(&s, &chi, &eps).unwrap();
        prop_assert!(t.volume_residual() < 1e-10);
    }

    #[test]
    fn octonion_norm_is_multiplicative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (x, y) = (octonion(&mut r), octonion(&mut r));
        let lhs = (&x * &y).norm_sq();
        let rhs = x.norm_sq() * y.norm_sq();
        prop_assert!((lhs - rhs).abs() < 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn octonions_are_alternative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (x, y) = (octonion(&mut r), octonion(&mut r));
        let a = associator(&x, &x, &y);
        let b = associator(&y, &x, &x);
        prop_assert!(a.coefficients().iter().chain(b.coefficients().iter()).all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn cross_product_is_phi(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, c) = (random::vector(&mut r, 1.0), random::vector(&mut r, 1.0), random::vector(&mut r, 1.0));
        let via_cross: f64 = (0..7).map(|k| cross(&a, &b)[k] * c[k]).sum();
        prop_assert!((via_cross - triple(&a, &b, &c)).abs() < 1e-12);
        let aa = cross(&a, &a);
        prop_assert!(aa.max_abs() < 1e-14);
    }

    #[test]
    fn json_round_trip(seed in any::<u64>(), p in 0usize..=7) {
        let mut r = rng(seed);
        let f = random::float_form(&mut r, p, 10.0);
        prop_assert_eq!(form_from_json::<f64>(&form_to_json(&f), "$").unwrap(), f);
        let q = random::rational_form(&mut r, p, 50, 7);
        prop_assert_eq!(form_from_json::<Rational>(&form_to_json(&q), "$").unwrap(), q);
    }

    #[test]
    fn exact_identity_contraction_on_random_vectors(seed in any::<u64>()) {
        // |u × v|² = |u|²|v|² − ⟨u, v⟩² holds exactly in rationals.
        let mut r = rng(seed);
        let u = random::rational_vector(&mut r, 6, 5);
        let v = random::rational_vector(&mut r, 6, 5);
        let w = cross(&u, &v);
        let dot = |a: &Vec7<Rational>, b: &Vec7<Rational>| (0..7).fold(<Rational as Scalar>::from_int(0), |acc, k| acc + a[k].clone() * b[k].clone());
        let uv = dot(&u, &v);
        prop_assert_eq!(dot(&w, &w), dot(&u, &u) * dot(&v, &v) - uv.clone() * uv);
    }
}

#[test]
fn degenerate_three_forms_are_not_positive() {
    let f: Form<f64> = Form::unit(&[0, 1, 2]);
    assert!(G2Structure::build(f).is_err());
}
