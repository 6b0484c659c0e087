mod common;

use g2_core::canonical::phi0;
use g2_core::deform::{
    conformal_report, deform_27_series, deform_exact, delta_s, delta_s_terms, evaluate_sym, lambda27_series, taylor,
    vector_report, DeformKind,
};
use g2_core::irreps::i_phi;
use g2_core::structure::G2Structure;
use g2_core::{random, G2Error, Rational, Scalar};

fn base(seed: u64) -> G2Structure<f64> {
    G2Structure::build(random::gl_phi(&mut random::rng(seed), 0.15)).unwrap()
}

#[test]
fn truncation_error_has_slope_order_plus_one() {
    let s = base(1);
    let h = random::traceless_symmetric(&mut random::rng(2), &s, 1.0);
    let eps = [2e-2, 1e-2, 5e-3];
    for order in 1..=3 {
        let errs: Vec<f64> = eps.iter().map(|&e| deform_27_series(&s, &h, e, order).unwrap().oracle_residual_g).collect();
        let slope = common::log_slope(&eps, &errs);
        assert!((slope - (order + 1) as f64).abs() < 0.3, "order {order}: slope {slope}");
    }
}

#[test]
fn series_diagnostics_are_small() {
    let s = base(3);
    let h = random::traceless_symmetric(&mut random::rng(4), &s, 0.8);
    let r = deform_27_series(&s, &h, 0.01, 3).unwrap();
    assert_eq!(r.kind, DeformKind::L27);
    assert_eq!(r.g_terms.len(), 4);
    for d in &r.diagnostics {
        assert!(d.residual < 1e-9, "{}: {:e}", d.name, d.residual);
    }
}

#[test]
fn vector_third_order_term_vanishes() {
    let s = base(5);
    let omega = random::vector(&mut random::rng(6), 1.0);
    let chi = s.psi().interior(&omega).unwrap();
    let terms = delta_s_terms(&s, &chi).unwrap();
    assert!(terms[0].max_abs() < 1e-13);
    assert!(terms[1].max_abs() > 1e-3);
    assert!(terms[2].max_abs() < 1e-13, "{:e}", terms[2].max_abs());
}

#[test]
fn delta_s_is_cubic_in_eps() {
    let s = base(7);
    let chi = random::float_form(&mut random::rng(8), 3, 1.0);
    let terms = delta_s_terms(&s, &chi).unwrap();
    let mut all = vec![g2_core::SymBilinear::zero()];
    all.extend(terms);
    for eps in [0.3, -0.7, 1.1] {
        assert!((&delta_s(&s, &chi, &eps).unwrap() - &evaluate_sym(&all, &eps)).max_abs() < 1e-12);
    }
}

#[test]
fn taylor_engine_matches_the_exact_series() {
    let s = base(9);
    let h = random::traceless_symmetric(&mut random::rng(10), &s, 1.0);
    let series = lambda27_series(&s, &h, 3).unwrap();
    let t = taylor(&s, &i_phi(&s, &h)).unwrap();
    for k in 0..=3 {
        assert!((&series.g_terms[k] - &t.g[k]).max_abs() < 1e-10);
        assert!((&series.psi_terms[k] - &t.psi[k]).max_abs() < 1e-10);
    }
}

#[test]
fn exact_lambda27_series_on_phi0() {
    let s = G2Structure::<Rational>::standard();
    let h = s.metric().traceless(&g2_core::SymBilinear::from_fn(|i, j| Rational::ratio((i + 2 * j) as i64 % 5 - 2, 3)));
    let series = lambda27_series(&s, &h, 2).unwrap();
    assert_eq!(series.g_terms[0], *s.g());
    // ψ̃ to first order is ψ − ∗i_φ(h).
    assert_eq!(series.psi_terms[1], s.metric().hodge(&i_phi(&s, &h)).scale(&<Rational as Scalar>::from_int(-1)));
}

#[test]
fn conformal_and_vector_reports_meet_their_oracles() {
    let s = base(11);
    for order in 0..=3 {
        let r = conformal_report(&s, 0.7, 0.01, order).unwrap();
        let bound = 10.0 * 0.007f64.powi(order as i32 + 1);
        assert!(r.oracle_residual < bound, "order {order}: {:e}", r.oracle_residual);
    }
    let omega = random::vector(&mut random::rng(12), 1.0);
    let r = vector_report(&s, &omega, 0.08).unwrap();
    assert!(r.oracle_residual < 1e-12);
    assert!(r.diagnostics.iter().all(|d| d.residual < 1e-12), "{:?}", r.diagnostics);
}

#[test]
fn positivity_failures_are_reported_not_extrapolated() {
    let s = G2Structure::<f64>::standard();
    assert!(matches!(deform_exact(&s, &phi0::<f64>(), &-2.0), Err(G2Error::NotPositive(_))));
    assert!(matches!(conformal_report(&s, 1.0, -1.5, 2), Err(G2Error::NotPositive(_))));
    assert!(matches!(conformal_report(&s, 1.0, 0.01, 4), Err(G2Error::Unsupported(_))));
    let not_traceless = g2_core::SymBilinear::identity();
    assert!(matches!(deform_27_series(&s, &not_traceless, 0.01, 2), Err(G2Error::NotTraceless(_))));
}
