//! Deformations `φ → φ + εχ`.
//!
//! Three engines: conformal rescaling (closed form), `Λ³₇` deformations
//! `χ = ω⌟ψ` (closed form), and `Λ³₂₇` deformations `χ = i_φ(h)` by series
//! through `ε³`. Each is checked against [`deform_exact`], which rebuilds
//! the structure from scratch, and the series against a Taylor expansion
//! computed by running the whole build in truncated power-series arithmetic.

use serde::Serialize;

use crate::error::{G2Error, Result};
use crate::irreps::{cross_contraction, i_phi};
use crate::scalar::{Rational, Scalar};
use crate::series::Series;
use crate::structure::G2Structure;
use crate::tensor::{Dense, Form, Mat7, SymBilinear, Vec7, DIM};

pub use crate::field::{first_order_torsion_conditions, FirstOrderResiduals};

/// Highest order available from the series engines.
pub const MAX_ORDER: usize = 3;

/// Rebuild the structure of `φ + εχ`.
pub fn deform_exact<S: Scalar>(s: &G2Structure<S>, chi: &Form<S>, eps: &S) -> Result<G2Structure<S>> {
    if chi.degree() != 3 {
        return Err(G2Error::WrongDegree { expected: 3, found: chi.degree() });
    }
    G2Structure::build(s.phi() + &chi.scale(eps))
}

/// `(g̃, ψ̃) = (f^{2/3} g, f^{4/3} ψ)` for `φ̃ = fφ`.
pub fn deform_conformal<S: Scalar>(s: &G2Structure<S>, f: &S) -> Result<(SymBilinear<S>, Form<S>)> {
    if !f.is_positive() {
        return Err(G2Error::NotPositive("conformal factor must be positive".into()));
    }
    let root = |n| f.pow_ratio(n, 3).ok_or_else(|| G2Error::InexactRoot(format!("f^({n}/3)")));
    Ok((s.g().scale(&root(2)?), s.psi().scale(&root(4)?)))
}

/// `C(p, k)` for rational `p`, `k = 0..=order`.
pub fn binomial_series(p: &Rational, order: usize) -> Vec<Rational> {
    let mut out = vec![Rational::from_int(1)];
    for k in 1..=order {
        let prev = out[k - 1].clone();
        out.push(prev * (p - Rational::from_int(k as i64 - 1)) / Rational::from_int(k as i64));
    }
    out
}

/// Coefficients of `ε^k` in `ψ̃/ψ` for `f = 1 + εa`.
pub fn conformal_psi_series(a: &Rational, order: usize) -> Vec<Rational> {
    scaled_binomial(Rational::ratio(4, 3), a, order)
}

/// Coefficients of `ε^k` in `g̃/g` for `f = 1 + εa`.
pub fn conformal_metric_series(a: &Rational, order: usize) -> Vec<Rational> {
    scaled_binomial(Rational::ratio(2, 3), a, order)
}

fn scaled_binomial(p: Rational, a: &Rational, order: usize) -> Vec<Rational> {
    let mut ak = Rational::from_int(1);
    binomial_series(&p, order)
        .into_iter()
        .map(|c| {
            let t = c * ak.clone();
            ak = ak.clone() * a.clone();
            t
        })
        .collect()
}

/// Closed-form `Λ³₇` deformation.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorDeformation<S> {
    pub g: SymBilinear<S>,
    pub sqrt_det: S,
    /// `F^{-1/3}(ψ + ε∗(ω⌟ψ) + ε² ω⌟∗(ω⌟φ))` with `F = 1 + ε²|ω|²`.
    pub psi: Form<S>,
    /// The same form written by representation type,
    /// `F^{-1/3}((1 + (3/7)ε²|ω|²)ψ + ε∗(ω⌟ψ) + 3ε² ∗i_φ((ω∘ω)₀))`.
    pub psi_split: Form<S>,
}

/// `ω∘ω` with both indices lowered.
fn outer_lower<S: Scalar>(s: &G2Structure<S>, omega: &Vec7<S>) -> SymBilinear<S> {
    let w = s.metric().lower(omega);
    SymBilinear::from_fn(|a, b| w[a].clone() * w[b].clone())
}

pub fn deform_vector<S: Scalar>(s: &G2Structure<S>, omega: &Vec7<S>, eps: &S) -> Result<VectorDeformation<S>> {
    let m = s.metric();
    let e2 = eps.clone() * eps.clone();
    let w2 = m.vec_inner(omega, omega);
    let f = S::one() + e2.clone() * w2.clone();
    let root = |n: i64, d: u32| f.pow_ratio(n, d).ok_or_else(|| G2Error::InexactRoot(format!("(1+ε²|ω|²)^({n}/{d})")));
    let ww = outer_lower(s, omega);
    let g = (&s.g().scale(&f) - &ww.scale(&e2)).scale(&root(-2, 3)?);
    let sqrt_det = root(2, 3)? * s.sqrt_det_g().clone();

    let chi = s.psi().interior(omega)?;
    let star_chi = m.hodge(&chi);
    let wphi = s.phi().interior(omega)?;
    let last = m.hodge(&wphi).interior(omega)?;
    let third = root(-1, 3)?;
    let psi = (&(s.psi() + &star_chi.scale(eps)) + &last.scale(&e2)).scale(&third);

    let ww0 = m.traceless(&ww);
    let singlet = S::one() + e2.clone() * w2 * S::ratio(3, 7);
    let psi_split = (&(&s.psi().scale(&singlet) + &star_chi.scale(eps))
        + &m.hodge(&i_phi(s, &ww0)).scale(&(e2 * S::from_int(3))))
        .scale(&third);
    Ok(VectorDeformation { g, sqrt_det, psi, psi_split })
}

/// `|ω♭∧(ω⌟φ) − 3 i_φ(ω∘ω)|`.
pub fn omega_square_residual<S: Scalar>(s: &G2Structure<S>, omega: &Vec7<S>) -> f64 {
    let w = Form::from_components(1, s.metric().lower(omega).0.to_vec()).expect("layout");
    let lhs = w.wedge(&s.phi().interior(omega).expect("degree 3")).expect("1 + 2");
    let rhs = i_phi(s, &outer_lower(s, omega)).scale(&S::from_int(3));
    (&lhs - &rhs).max_abs()
}

/// Coefficients of `ε, ε², ε³` in `δs`, where `g̃ √(det g̃/det g) = g + δs`.
///
/// The map `χ ↦ s(φ + εχ)` is cubic, so the three terms are exact.
pub fn delta_s_terms<S: Scalar>(s: &G2Structure<S>, chi: &Form<S>) -> Result<[SymBilinear<S>; 3]> {
    if chi.degree() != 3 {
        return Err(G2Error::WrongDegree { expected: 3, found: chi.degree() });
    }
    let m = s.metric();
    let first = cross_contraction(s, chi, s.phi()).sym_part();
    let contracted: Vec<Form<S>> = (0..DIM).map(|a| chi.interior_unit(a).expect("degree 3")).collect();
    let star = m.hodge(chi);
    let pair = |target: &Form<S>, c: S| {
        SymBilinear::from_fn(|a, b| {
            let w = contracted[a].wedge(&contracted[b]).expect("2 + 2");
            m.inner(&w, target).expect("degree 4") * c.clone()
        })
    };
    Ok([first, pair(s.psi(), S::ratio(1, 2)), pair(&star, S::ratio(1, 6))])
}

pub fn delta_s<S: Scalar>(s: &G2Structure<S>, chi: &Form<S>, eps: &S) -> Result<SymBilinear<S>> {
    let terms = delta_s_terms(s, chi)?;
    let mut out = SymBilinear::zero();
    let mut power = S::one();
    for t in &terms {
        power = power * eps.clone();
        out = &out + &t.scale(&power);
    }
    Ok(out)
}

/// `out^{..d..} = Σ_a m^{ad} t_{..a..}` on one slot.
pub(crate) fn contract_slot<S: Scalar>(t: &Dense<S>, slot: usize, m: &Mat7<S>) -> Dense<S> {
    Dense::from_fn(t.rank(), |idx| {
        let mut src = idx.to_vec();
        let mut acc = S::zero();
        for a in 0..DIM {
            if m[a][idx[slot]].is_zero() {
                continue;
            }
            src[slot] = a;
            acc = acc + m[a][idx[slot]].clone() * t.get(&src).clone();
        }
        acc
    })
}

/// Contractions of `φ` and `ψ` against a symmetric `h`, indices moved by the structure's metric.
#[derive(Debug, Clone, PartialEq)]
pub struct HContractions<S> {
    pub tr_h2: S,
    pub tr_h3: S,
    /// `(h²)_ab = h_ac h^c_b`.
    pub h2: Mat7<S>,
    pub h3: Mat7<S>,
    /// `(φhhφ)_mn = φ_abm h^ad h^be φ_den`.
    pub phi_hh_phi: Mat7<S>,
    /// `(φ h h² φ)_mn`.
    pub phi_hh2_phi: Mat7<S>,
    pub phi_hhh_phi: S,
    /// `(ψhhhψ)_mn = ψ_abcm ψ_defn h^ad h^be h^cf`.
    pub psi_hhh_psi: Mat7<S>,
    /// `α_a = ψ_amnp φ_rst h^mr h^ns h^pt`.
    pub alpha: Vec7<S>,
}

impl<S: Scalar> HContractions<S> {
    pub fn new(s: &G2Structure<S>, h: &SymBilinear<S>) -> Self {
        let m = s.metric();
        let inv = m.inv();
        let hm = h.mat();
        let h2 = &(hm * inv) * hm;
        let h3 = &(&h2 * inv) * hm;
        let up = m.raise_both(hm);
        let up2 = m.raise_both(&h2);
        let phi = Dense::from_form(s.phi());
        let psi = Dense::from_form(s.psi());

        let pair = |second: &Mat7<S>| {
            let x = contract_slot(&contract_slot(&phi, 0, &up), 1, second);
            Mat7::from_fn(|a, b| {
                let mut acc = S::zero();
                for d in 0..DIM {
                    for e in 0..DIM {
                        acc = acc + x.get(&[d, e, a]).clone() * phi.get(&[d, e, b]).clone();
                    }
                }
                acc
            })
        };
        let phi3 = contract_slot(&contract_slot(&contract_slot(&phi, 0, &up), 1, &up), 2, &up);
        let phi_hhh_phi = phi3.data().iter().zip(phi.data()).fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone());
        let psi3 = contract_slot(&contract_slot(&contract_slot(&psi, 0, &up), 1, &up), 2, &up);
        let psi_hhh_psi = Mat7::from_fn(|a, b| {
            let mut acc = S::zero();
            for k in 0..DIM.pow(3) {
                let i = [k / 49, k / 7 % 7, k % 7];
                acc = acc + psi3.get(&[i[0], i[1], i[2], a]).clone() * psi.get(&[i[0], i[1], i[2], b]).clone();
            }
            acc
        });
        let alpha = Vec7::from_fn(|a| {
            let mut acc = S::zero();
            for k in 0..DIM.pow(3) {
                let i = [k / 49, k / 7 % 7, k % 7];
                acc = acc + psi.get(&[a, i[0], i[1], i[2]]).clone() * phi3.get(&i).clone();
            }
            acc
        });
        HContractions {
            tr_h2: m.trace(&h2),
            tr_h3: m.trace(&h3),
            phi_hh_phi: pair(&up),
            phi_hh2_phi: pair(&up2),
            h2,
            h3,
            phi_hhh_phi,
            psi_hhh_psi,
            alpha,
        }
    }
}

/// Per-order terms of a `Λ³₂₇` deformation `χ = i_φ(h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lambda27Series<S> {
    /// `g̃` coefficients of `ε⁰ … ε^order`.
    pub g_terms: Vec<SymBilinear<S>>,
    pub psi_terms: Vec<Form<S>>,
    /// `δs` coefficients of `ε¹, ε², ε³` from the `h`-expansion.
    pub delta_s: [SymBilinear<S>; 3],
    /// `s_k = Tr((δs)^k)` as coefficients of `ε⁰ … ε³`, for `k = 1, 2, 3`.
    pub s_traces: [[S; 4]; 3],
}

fn require_traceless<S: Scalar>(s: &G2Structure<S>, h: &SymBilinear<S>) -> Result<()> {
    let tr = s.metric().trace(h.mat());
    if tr.is_negligible(1e-10 * h.max_abs().max(1.0)) {
        Ok(())
    } else {
        Err(G2Error::NotTraceless(tr.to_f64()))
    }
}

fn sym<S: Scalar>(m: &Mat7<S>) -> SymBilinear<S> {
    m.sym_part()
}

/// The `h`-expansion of `δs`:
/// `(2/3)h`, `−(1/63)Tr(h²)g + (2/9)(h²)₀ − (1/18)(φhhφ)₀`, `(4/567)Tr(h³)g + (1/27)(φhh²φ)₀`.
pub fn delta_s_from_h<S: Scalar>(s: &G2Structure<S>, c: &HContractions<S>, h: &SymBilinear<S>) -> [SymBilinear<S>; 3] {
    let m = s.metric();
    let g = s.g();
    let q = S::ratio;
    let d1 = h.scale(&q(2, 3));
    let d2 = &(&g.scale(&(c.tr_h2.clone() * q(-1, 63))) + &m.traceless(&sym(&c.h2)).scale(&q(2, 9)))
        - &m.traceless(&sym(&c.phi_hh_phi)).scale(&q(1, 18));
    let d3 = &g.scale(&(c.tr_h3.clone() * q(4, 567))) + &m.traceless(&sym(&c.phi_hh2_phi)).scale(&q(1, 27));
    [d1, d2, d3]
}

/// Closed forms of `s₁, s₂, s₃` in terms of `h`, as coefficients of `ε⁰ … ε³`.
pub fn s_traces_from_h<S: Scalar>(c: &HContractions<S>) -> [[S; 4]; 3] {
    let z = S::zero;
    let q = S::ratio;
    [
        [z(), z(), c.tr_h2.clone() * q(-1, 9), c.tr_h3.clone() * q(4, 81)],
        [z(), z(), c.tr_h2.clone() * q(4, 9), c.tr_h3.clone() * q(8, 27) - c.phi_hhh_phi.clone() * q(2, 27)],
        [z(), z(), z(), c.tr_h3.clone() * q(8, 27)],
    ]
}

/// `Tr((g⁻¹δs)^k)` for a polynomial `δs` with zero constant term.
pub fn s_traces<S: Scalar>(s: &G2Structure<S>, ds: &[SymBilinear<S>; 3]) -> [[S; 4]; 3] {
    let inv = s.metric().inv();
    let mixed: Vec<Mat7<S>> = ds.iter().map(|d| inv * d.mat()).collect();
    let tr = |m: &Mat7<S>| m.trace();
    let z = S::zero;
    let s1 = [z(), tr(&mixed[0]), tr(&mixed[1]), tr(&mixed[2])];
    let two = S::from_int(2);
    let s2 = [
        z(),
        z(),
        tr(&(&mixed[0] * &mixed[0])),
        tr(&(&mixed[0] * &mixed[1])) * two,
    ];
    let s3 = [z(), z(), z(), tr(&(&(&mixed[0] * &mixed[0]) * &mixed[0]))];
    [s1, s2, s3]
}

/// Series of `g̃` and `ψ̃` for `χ = i_φ(h)` with `h` traceless.
///
/// The metric is assembled as `(det(g+δs)/det g)^{-1/9}(g + δs)`, with the
/// determinant factor `1 − s₁/9 + s₂/18 − s₃/27` multiplied out order by order.
pub fn lambda27_series<S: Scalar>(s: &G2Structure<S>, h: &SymBilinear<S>, order: usize) -> Result<Lambda27Series<S>> {
    if order > MAX_ORDER {
        return Err(G2Error::Unsupported(format!("series order {order} exceeds {MAX_ORDER}")));
    }
    require_traceless(s, h)?;
    let m = s.metric();
    let c = HContractions::new(s, h);
    let ds = delta_s_from_h(s, &c, h);
    let st = s_traces(s, &ds);
    let q = S::ratio;
    let factor: Vec<S> = (0..=MAX_ORDER)
        .map(|k| {
            let base = if k == 0 { S::one() } else { S::zero() };
            base - st[0][k].clone() * q(1, 9) + st[1][k].clone() * q(1, 18) - st[2][k].clone() * q(1, 27)
        })
        .collect();
    let mut g_plus: Vec<SymBilinear<S>> = vec![s.g().clone()];
    g_plus.extend(ds.iter().cloned());
    let g_terms: Vec<SymBilinear<S>> = (0..=order)
        .map(|n| (0..=n).fold(SymBilinear::zero(), |acc, i| &acc + &g_plus[n - i].scale(&factor[i])))
        .collect();

    let star = |f: &Form<S>| m.hodge(f);
    let chi = i_phi(s, h);
    let star_chi = star(&chi);
    let mut psi_terms = vec![s.psi().clone()];
    if order >= 1 {
        psi_terms.push(-&star_chi);
    }
    if order >= 2 {
        let hh0 = m.traceless(&sym(&c.phi_hh_phi));
        psi_terms.push(&s.psi().scale(&(c.tr_h2.clone() * q(-1, 189))) + &star(&i_phi(s, &hh0)).scale(&q(1, 6)));
    }
    if order >= 3 {
        let h30 = m.traceless(&sym(&c.h3));
        let p0 = m.traceless(&sym(&c.psi_hhh_psi));
        let alpha = Form::from_components(1, c.alpha.0.to_vec()).expect("layout");
        let terms = [
            s.psi().scale(&(c.phi_hhh_phi.clone() * q(-2, 1701))),
            star_chi.scale(&(c.tr_h2.clone() * q(-5, 108))),
            star(&i_phi(s, &h30)).scale(&q(1, 18)),
            star(&i_phi(s, &p0)).scale(&q(-1, 36)),
            alpha.wedge(s.phi())?.scale(&q(1, 324)),
        ];
        psi_terms.push(terms.iter().fold(Form::zero(4), |acc, t| &acc + t));
    }
    Ok(Lambda27Series { g_terms, psi_terms, delta_s: ds, s_traces: st })
}

/// Sum `Σ ε^k t_k`.
pub fn evaluate_sym<S: Scalar>(terms: &[SymBilinear<S>], eps: &S) -> SymBilinear<S> {
    let mut out = SymBilinear::zero();
    let mut p = S::one();
    for t in terms {
        out = &out + &t.scale(&p);
        p = p * eps.clone();
    }
    out
}

pub fn evaluate_form<S: Scalar>(terms: &[Form<S>], eps: &S) -> Form<S> {
    let mut out = Form::zero(terms.first().map_or(0, Form::degree));
    let mut p = S::one();
    for t in terms {
        out = &out + &t.scale(&p);
        p = p * eps.clone();
    }
    out
}

/// Taylor coefficients through `ε³` of the structure of `φ + εχ`, computed by
/// running [`G2Structure::build`] over truncated power series.
#[derive(Debug, Clone, PartialEq)]
pub struct Taylor {
    pub g: Vec<SymBilinear<f64>>,
    pub psi: Vec<Form<f64>>,
    pub sqrt_det: Vec<f64>,
}

pub fn taylor(s: &G2Structure<f64>, chi: &Form<f64>) -> Result<Taylor> {
    type T = Series<{ MAX_ORDER + 1 }>;
    if chi.degree() != 3 {
        return Err(G2Error::WrongDegree { expected: 3, found: chi.degree() });
    }
    let lifted = Form::from_components(
        3,
        s.phi()
            .components()
            .iter()
            .zip(chi.components())
            .map(|(&p, &c)| T::linear(p, c))
            .collect(),
    )?;
    let st = G2Structure::<T>::build(lifted)?;
    let k = 0..=MAX_ORDER;
    Ok(Taylor {
        g: k.clone().map(|i| st.g().map(|x| x.coeff(i))).collect(),
        psi: k.clone().map(|i| st.psi().map(|x| x.coeff(i))).collect(),
        sqrt_det: k.map(|i| st.sqrt_det_g().coeff(i)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DeformKind {
    Conformal,
    Vector,
    L27,
}

/// A named diagnostic residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub name: String,
    pub residual: f64,
}

fn diag(name: &str, residual: f64) -> Diagnostic {
    Diagnostic { name: name.into(), residual }
}

/// Result of a deformation with its oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationReport {
    pub kind: DeformKind,
    pub eps: f64,
    pub order: Option<usize>,
    pub g_new: SymBilinear<f64>,
    pub psi_new: Form<f64>,
    pub sqrt_det_new: f64,
    /// Orders `0..=order`; empty for closed forms.
    pub g_terms: Vec<SymBilinear<f64>>,
    pub psi_terms: Vec<Form<f64>>,
    pub oracle_residual_g: f64,
    pub oracle_residual_psi: f64,
    pub oracle_residual: f64,
    pub diagnostics: Vec<Diagnostic>,
}

fn finish(
    kind: DeformKind,
    eps: f64,
    order: Option<usize>,
    (g_new, psi_new, sqrt_det_new): (SymBilinear<f64>, Form<f64>, f64),
    (g_terms, psi_terms): (Vec<SymBilinear<f64>>, Vec<Form<f64>>),
    oracle: &G2Structure<f64>,
    diagnostics: Vec<Diagnostic>,
) -> DeformationReport {
    let rg = (&g_new - oracle.g()).max_abs();
    let rp = (&psi_new - oracle.psi()).max_abs();
    DeformationReport {
        kind,
        eps,
        order,
        g_new,
        psi_new,
        sqrt_det_new,
        g_terms,
        psi_terms,
        oracle_residual_g: rg,
        oracle_residual_psi: rp,
        oracle_residual: rg.max(rp),
        diagnostics,
    }
}

/// Conformal deformation `f = 1 + εa`, series through `order`.
pub fn conformal_report(s: &G2Structure<f64>, a: f64, eps: f64, order: usize) -> Result<DeformationReport> {
    if order > MAX_ORDER {
        return Err(G2Error::Unsupported(format!("series order {order} exceeds {MAX_ORDER}")));
    }
    let f = 1.0 + eps * a;
    let (g_exact, psi_exact) = deform_conformal(s, &f)?;
    let ones = Rational::from_int(1);
    let gc = conformal_metric_series(&ones, order);
    let pc = conformal_psi_series(&ones, order);
    let g_terms: Vec<_> = gc.iter().enumerate().map(|(k, c)| s.g().scale(&(c.to_f64() * a.powi(k as i32)))).collect();
    let psi_terms: Vec<_> = pc.iter().enumerate().map(|(k, c)| s.psi().scale(&(c.to_f64() * a.powi(k as i32)))).collect();
    let oracle = deform_exact(s, &s.phi().scale(&a), &eps)?;
    let sum = (evaluate_sym(&g_terms, &eps), evaluate_form(&psi_terms, &eps));
    let diagnostics = vec![
        diag("closed_form_g", (&g_exact - oracle.g()).max_abs()),
        diag("closed_form_psi", (&psi_exact - oracle.psi()).max_abs()),
    ];
    Ok(finish(
        DeformKind::Conformal,
        eps,
        Some(order),
        (sum.0, sum.1, s.sqrt_det_g() * f.powf(7.0 / 3.0)),
        (g_terms, psi_terms),
        &oracle,
        diagnostics,
    ))
}

pub fn vector_report(s: &G2Structure<f64>, omega: &Vec7<f64>, eps: f64) -> Result<DeformationReport> {
    let v = deform_vector(s, omega, &eps)?;
    let oracle = deform_exact(s, &s.psi().interior(omega)?, &eps)?;
    let diagnostics = vec![
        diag("sqrt_det", (v.sqrt_det - oracle.sqrt_det_g()).abs()),
        diag("split_form", (&v.psi_split - &v.psi).max_abs()),
        diag("omega_square_identity", omega_square_residual(s, omega)),
    ];
    Ok(finish(DeformKind::Vector, eps, None, (v.g, v.psi, v.sqrt_det), (vec![], vec![]), &oracle, diagnostics))
}

/// Series `Λ³₂₇` deformation through `order`, checked against the exact
/// rebuild, the Taylor engine, the general `δs` and the `s_k` closed forms.
pub fn deform_27_series(s: &G2Structure<f64>, h: &SymBilinear<f64>, eps: f64, order: usize) -> Result<DeformationReport> {
    let series = lambda27_series(s, h, order)?;
    let chi = i_phi(s, h);
    let oracle = deform_exact(s, &chi, &eps)?;
    let taylor = taylor(s, &chi)?;
    let general = delta_s_terms(s, &chi)?;
    let closed = s_traces_from_h(&HContractions::new(s, h));

    let scale = h.max_abs().max(1e-300);
    let mut diagnostics = Vec::new();
    for k in 0..=order {
        let rel = scale.powi(k as i32);
        diagnostics.push(diag(&format!("taylor_g_{k}"), (&series.g_terms[k] - &taylor.g[k]).max_abs() / rel));
        diagnostics.push(diag(&format!("taylor_psi_{k}"), (&series.psi_terms[k] - &taylor.psi[k]).max_abs() / rel));
    }
    let ds = (0..3).fold(0.0f64, |m, k| m.max((&series.delta_s[k] - &general[k]).max_abs() / scale.powi(k as i32 + 1)));
    diagnostics.push(diag("delta_s_expansion", ds));
    let sk = (0..3).fold(0.0f64, |m, k| {
        (0..4).fold(m, |m, j| m.max((series.s_traces[k][j] - closed[k][j]).abs() / scale.powi(j as i32)))
    });
    diagnostics.push(diag("s_trace_closed_forms", sk));
    let g_new = evaluate_sym(&series.g_terms, &eps);
    let psi_new = evaluate_form(&series.psi_terms, &eps);
    let det_ratio = crate::tensor::positive_definite_det(&g_new)? / crate::tensor::positive_definite_det(s.g())?;
    Ok(finish(
        DeformKind::L27,
        eps,
        Some(order),
        (g_new, psi_new, s.sqrt_det_g() * det_ratio.sqrt()),
        (series.g_terms, series.psi_terms),
        &oracle,
        diagnostics,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{phi0, psi0};

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn sample_h() -> SymBilinear<Rational> {
        let h = SymBilinear::from_fn(|a, b| q(((a * 3 + b * 5) % 7) as i64 - 3, 1 + ((a + b) % 3) as i64));
        G2Structure::<Rational>::standard().metric().traceless(&h)
    }

    #[test]
    fn conformal_coefficients() {
        let c = conformal_psi_series(&q(1, 1), 3);
        assert_eq!(c, vec![q(1, 1), q(4, 3), q(2, 9), q(-4, 81)]);
        let s = G2Structure::<Rational>::standard();
        let (g, psi) = deform_conformal(&s, &q(8, 1)).unwrap();
        assert_eq!(g, SymBilinear::identity().scale(&q(4, 1)));
        assert_eq!(psi, psi0::<Rational>().scale(&q(16, 1)));
    }

    #[test]
    fn delta_s_of_phi_is_cubic_scaling() {
        let s = G2Structure::<Rational>::standard();
        let t = delta_s_terms(&s, &phi0()).unwrap();
        let id = SymBilinear::<Rational>::identity();
        assert_eq!(t, [id.scale(&q(3, 1)), id.scale(&q(3, 1)), id.clone()]);
    }

    #[test]
    fn delta_s_vanishing_patterns() {
        let s = G2Structure::<Rational>::standard();
        let w = Vec7::from_fn(|k| q(k as i64 - 2, 3));
        let t = delta_s_terms(&s, &s.psi().interior(&w).unwrap()).unwrap();
        assert_eq!(t[0].max_abs(), 0.0);
        assert_eq!(t[2].max_abs(), 0.0);
        // Closed form: ε² term is |ω|² g − ω♭ω♭.
        let w2 = s.metric().vec_inner(&w, &w);
        assert_eq!(t[1], &SymBilinear::identity().scale(&w2) - &outer_lower(&s, &w));
        let h = sample_h();
        let t = delta_s_terms(&s, &i_phi(&s, &h)).unwrap();
        assert_eq!(t[0], h.scale(&q(2, 3)));
    }

    #[test]
    fn h_expansion_of_delta_s_is_exact() {
        let s = G2Structure::<Rational>::standard();
        let h = sample_h();
        let c = HContractions::new(&s, &h);
        let closed = delta_s_from_h(&s, &c, &h);
        let general = delta_s_terms(&s, &i_phi(&s, &h)).unwrap();
        assert_eq!(closed, general);
        assert_eq!(s_traces(&s, &closed), s_traces_from_h(&c));
    }

    #[test]
    fn lambda27_first_order_and_singlet() {
        let s = G2Structure::<Rational>::standard();
        let h = sample_h();
        let r = lambda27_series(&s, &h, 3).unwrap();
        assert_eq!(r.g_terms[1], h.scale(&q(2, 3)));
        let d = crate::irreps::decompose4(&s, &r.psi_terms[2]).unwrap();
        let tr_h2 = s.metric().mat_inner(h.mat(), h.mat());
        assert_eq!(d.a, tr_h2 * q(-1, 189));
    }

    #[test]
    fn omega_square_identity_exact() {
        let s = G2Structure::<Rational>::standard();
        let w = Vec7::from_fn(|k| q(2 * k as i64 - 5, k as i64 + 1));
        assert_eq!(omega_square_residual(&s, &w), 0.0);
    }

    #[test]
    fn vector_closed_form_example() {
        let s = G2Structure::<f64>::standard();
        let v = deform_vector(&s, &Vec7::unit(0), &1.0).unwrap();
        let c = 2f64.powf(2.0 / 3.0);
        assert!((v.sqrt_det - c).abs() < 1e-14);
        assert!((v.g.get(0, 0) - 1.0 / c).abs() < 1e-14);
        assert!((v.g.get(1, 1) - 2.0 / c).abs() < 1e-14);
        let exact = deform_exact(&s, &s.psi().interior(&Vec7::unit(0)).unwrap(), &1.0).unwrap();
        assert!((&v.g - exact.g()).max_abs() < 1e-12);
        assert!((&v.psi - exact.psi()).max_abs() < 1e-12);
        assert!((&v.psi_split - exact.psi()).max_abs() < 1e-12);
    }

    #[test]
    fn taylor_matches_series() {
        let s = G2Structure::<f64>::standard();
        let h = sample_h().map(|x| x.to_f64() * 0.3);
        let r = deform_27_series(&s, &h, 1e-2, 3).unwrap();
        for d in &r.diagnostics {
            assert!(d.residual < 1e-10, "{}: {}", d.name, d.residual);
        }
    }

    #[test]
    fn metric_terms_closed_form() {
        // Non-traceless h² and φhhφ, as in the usual display, with the
        // coefficients the composition actually produces.
        let s = G2Structure::<Rational>::standard();
        let h = sample_h();
        let c = HContractions::new(&s, &h);
        let r = lambda27_series(&s, &h, 3).unwrap();
        let g = SymBilinear::<Rational>::identity();
        let e2 = &g.scale(&(c.tr_h2.clone() * q(-1, 54))) + &(&sym(&c.h2).scale(&q(2, 9)) - &sym(&c.phi_hh_phi).scale(&q(1, 18)));
        let e3 = &(&g.scale(&(c.tr_h3.clone() * q(1, 81) - c.phi_hhh_phi.clone() * q(1, 243))) + &h.scale(&(c.tr_h2.clone() * q(2, 81))))
            + &sym(&c.phi_hh2_phi).scale(&q(1, 27));
        assert_eq!(e2, r.g_terms[2]);
        assert_eq!(e3, r.g_terms[3]);
    }
}
