mod common;

use common::{nested_fd, potential_fd, relative, riemann_fd};
use g2_core::canonical::phi0;
use g2_core::moduli::{riemann_from_hessian_curvature, ModTensor, ModuliChart};
use g2_core::G2Error;

fn chart() -> ModuliChart {
    ModuliChart::seeded(2, 8, 0.4).unwrap()
}

#[test]
fn metric_is_the_hessian_of_the_potential() {
    let c = chart();
    for s in [vec![1.0, 0.0, 0.0], vec![0.9, 0.05, -0.08]] {
        let g = c.metric(&s).unwrap();
        let fd = potential_fd(&c, &s, 2, 1e-3, false);
        assert!(relative(fd.data(), g.data()) < 1e-6, "{s:?}");
        let exact = c.potential_derivatives(&s, 2).unwrap();
        assert!(relative(exact.data(), g.data()) < 1e-12, "{s:?}");
    }
}

#[test]
fn first_psi_derivative_holds_away_from_special_points() {
    let c = chart();
    let s = [0.9, 0.05, -0.08];
    let psi = common::psi_fn(&c);
    for n in 0..c.dim() {
        let table = c.psi_derivative(&s, &[n]).unwrap();
        assert!(relative(table.components(), &nested_fd(&psi, &s, &[n], 1e-3)) < 1e-8);
    }
}

#[test]
fn riemann_matches_the_metric_curvature() {
    let c = chart();
    let s = [1.1, 0.0, 0.0];
    let curv = c.hessian_curvature(&s).unwrap();
    let fd = riemann_fd(&c, &s, 1e-2, 1e-3).unwrap();
    assert!(fd.max_abs() > 1e-3);
    assert!(relative(fd.data(), curv.riemann.data()) < 1e-4, "{}", relative(fd.data(), curv.riemann.data()));
    assert!(curv.riemann.max_abs_diff(&riemann_from_hessian_curvature(&curv.q)) < 1e-12);
}

#[test]
fn riemann_has_curvature_symmetries() {
    let r = chart().hessian_curvature(&[1.0, 0.0, 0.0]).unwrap().riemann;
    let n = r.dim();
    let mut worst = 0.0f64;
    for i in r.indices() {
        let [a, b, c, d] = [i[0], i[1], i[2], i[3]];
        worst = worst.max((r.get(&i) + r.get(&[b, a, c, d])).abs());
        worst = worst.max((r.get(&i) - r.get(&[c, d, a, b])).abs());
        worst = worst.max((r.get(&i) + r.get(&[a, c, d, b]) + r.get(&[a, d, b, c])).abs());
    }
    assert!(worst < 1e-12, "{worst:e} on {n} moduli");
}

#[test]
fn scaling_laws_of_the_potential() {
    let c = chart();
    let s = [1.0, 0.0, 0.0];
    let lambda = 1.7;
    let t: Vec<f64> = s.iter().map(|x| lambda * x).collect();
    let v = c.volume(&s).unwrap();
    assert!((c.volume(&t).unwrap() - lambda.powf(7.0 / 3.0) * v).abs() < 1e-12 * v);
    assert!((c.potential(&t).unwrap() - c.potential(&s).unwrap() + 7.0 * lambda.ln()).abs() < 1e-12);
    let scaled = |k: i32, a: &ModTensor| a.scale(lambda.powi(-k));
    assert!(relative(c.metric(&t).unwrap().data(), scaled(2, &c.metric(&s).unwrap()).data()) < 1e-12);
    let (ya, yb) = (c.yukawa(&t).unwrap().a, c.yukawa(&s).unwrap().a);
    assert!(relative(ya.data(), scaled(3, &yb).data()) < 1e-12);
    let (qa, qb) = (c.hessian_curvature(&t).unwrap().q, c.hessian_curvature(&s).unwrap().q);
    assert!(relative(qa.data(), scaled(4, &qb).data()) < 1e-12);
}

#[test]
fn euler_relations_from_homogeneity() {
    // K(λs) = K(s) − 7 log λ gives s^N ∂_N K = −7, and two more derivatives give s^N A_NMP = −2G_MP.
    let c = chart();
    let s = [1.3, 0.0, 0.0];
    let g = c.metric(&s).unwrap();
    let a = c.yukawa(&s).unwrap().a;
    let n = c.dim();
    for m in 0..n {
        for p in 0..n {
            let contracted: f64 = (0..n).map(|k| s[k] * a.get(&[k, m, p])).sum();
            assert!((contracted + 2.0 * g.get(&[m, p])).abs() < 1e-12);
        }
    }
    let dk = c.potential_derivatives(&s, 1).unwrap();
    assert!(((0..n).map(|k| s[k] * dk.get(&[k])).sum::<f64>() + 7.0).abs() < 1e-12);
}

#[test]
fn fourth_derivative_agrees_at_a_second_special_point() {
    let c = ModuliChart::seeded(3, 21, 0.3).unwrap();
    let s = [0.8, 0.0, 0.0, 0.0];
    let k4 = c.hessian_curvature(&s).unwrap().k4;
    let exact = c.potential_derivatives(&s, 4).unwrap();
    assert!(k4.relative_error(&exact, 1e-300) < 1e-9);
    assert!(k4.symmetry_residual() < 1e-12);
}

#[test]
fn chart_errors() {
    let c = chart();
    assert!(matches!(c.metric(&[1.0, 0.0]), Err(G2Error::InvalidChart(_))));
    assert!(matches!(c.yukawa(&[1.0, 0.1, 0.0]), Err(G2Error::InvalidChart(_))));
    assert!(matches!(c.psi_derivative(&[1.0, 0.0, 0.0], &[0, 0, 0, 0]), Err(G2Error::Unsupported(_))));
    assert!(matches!(c.psi_derivative(&[1.0, 0.0, 0.0], &[5]), Err(G2Error::InvalidChart(_))));
    assert!(matches!(c.volume(&[-1.0, 0.0, 0.0]), Err(G2Error::NotPositive(_))));
    assert!(matches!(ModuliChart::new(vec![]), Err(G2Error::InvalidChart(_))));
    assert!(ModuliChart::new(vec![phi0(), phi0().scale(&2.0)]).is_err());
}
