//! G₂-irreducible pieces of 2-, 3-, 4- and 5-forms.
//!
//! Every map takes the structure it is relative to, so the same code serves
//! the flat `φ₀` and any point of a structure field. Vectors like `ω` carry an
//! upper index.
//!
//! ```text
//! Λ² = Λ²₇ ⊕ Λ²₁₄          T_ψ = 4 on Λ²₇, −2 on Λ²₁₄
//! Λ³ = Λ³₁ ⊕ Λ³₇ ⊕ Λ³₂₇    χ = aφ + ω⌟ψ + i_φ(h)
//! ```

use crate::error::{G2Error, Result};
use crate::scalar::Scalar;
use crate::structure::G2Structure;
use crate::tensor::index::masks;
use crate::tensor::{Form, Mat7, SymBilinear, Vec7, DIM};

fn expect_degree<S: Scalar>(f: &Form<S>, p: usize) -> Result<()> {
    if f.degree() == p {
        Ok(())
    } else {
        Err(G2Error::WrongDegree { expected: p, found: f.degree() })
    }
}

/// `T_ψ(α)_ab = ψ_abcd α^cd`.
pub fn t_psi<S: Scalar>(s: &G2Structure<S>, alpha: &Form<S>) -> Result<Form<S>> {
    expect_degree(alpha, 2)?;
    let raised = s.metric().raise_form(alpha);
    let two = S::from_int(2);
    let mut out = Form::zero(2);
    for a in 0..DIM {
        for b in a + 1..DIM {
            let mut acc = S::zero();
            for (&m, v) in masks(2).iter().zip(raised.components()) {
                if v.is_zero() || m & (1 << a | 1 << b) != 0 {
                    continue;
                }
                let cd: Vec<usize> = crate::tensor::index::indices(m).collect();
                let p = s.psi().get(&[a, b, cd[0], cd[1]]);
                if !p.is_zero() {
                    acc = acc + p * v.clone();
                }
            }
            out.add_term(&[a, b], acc * two.clone())?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposed2Form<S> {
    pub part7: Form<S>,
    pub part14: Form<S>,
}

pub fn project2<S: Scalar>(s: &G2Structure<S>, alpha: &Form<S>) -> Result<Decomposed2Form<S>> {
    let t = t_psi(s, alpha)?;
    let two = S::from_int(2);
    let four = S::from_int(4);
    let sixth = S::ratio(1, 6);
    let part7 = (&t + &alpha.scale(&two)).scale(&sixth);
    let part14 = (&alpha.scale(&four) - &t).scale(&sixth);
    Ok(Decomposed2Form { part7, part14 })
}

/// `φ_abc α^bc` as a covector.
pub fn phi_contraction<S: Scalar>(s: &G2Structure<S>, alpha: &Form<S>) -> Result<Vec7<S>> {
    expect_degree(alpha, 2)?;
    let raised = s.metric().raise_form(alpha);
    let two = S::from_int(2);
    Ok(Vec7::from_fn(|a| {
        let mut acc = S::zero();
        for (&m, v) in masks(2).iter().zip(raised.components()) {
            if v.is_zero() || m & (1 << a) != 0 {
                continue;
            }
            let bc: Vec<usize> = crate::tensor::index::indices(m).collect();
            acc = acc + s.phi().get(&[a, bc[0], bc[1]]) * v.clone();
        }
        acc * two.clone()
    }))
}

/// Membership in `𝔤₂ = Λ²₁₄`: the `φ`-contraction vanishes. Float inputs are
/// compared against `tol` relative to the size of `α`.
pub fn g2_member<S: Scalar>(s: &G2Structure<S>, alpha: &Form<S>, tol: f64) -> Result<bool> {
    let c = phi_contraction(s, alpha)?;
    Ok(c.0.iter().all(|x| x.is_negligible(tol * alpha.max_abs().max(1.0))))
}

/// `ρ_φ(ω) = ω⌟φ`.
pub fn rho_phi<S: Scalar>(s: &G2Structure<S>, omega: &Vec7<S>) -> Form<S> {
    s.phi().interior(omega).expect("degree 3")
}

/// `τ_φ(α)^c = (1/6) φ^c{}_ab α^ab`, a left inverse of `ρ_φ`.
pub fn tau_phi<S: Scalar>(s: &G2Structure<S>, alpha: &Form<S>) -> Result<Vec7<S>> {
    let lower = phi_contraction(s, alpha)?.scale(&S::ratio(1, 6));
    Ok(s.metric().raise(&lower))
}

/// `i_φ(m)_abc = m_[a{}^d φ_bc]d` for any 2-tensor `m`.
pub fn i_phi_tensor<S: Scalar>(s: &G2Structure<S>, m: &Mat7<S>) -> Form<S> {
    let mixed = s.metric().mixed(m);
    let mut out = Form::zero(3);
    for a in 0..DIM {
        let u = Vec7::from_fn(|d| mixed[a][d].clone());
        if u.is_zero() {
            continue;
        }
        let piece = Form::unit(&[a]).wedge(&s.phi().interior(&u).expect("degree 3")).expect("1 + 2");
        out = &out + &piece;
    }
    out.scale(&S::ratio(1, 3))
}

pub fn i_phi<S: Scalar>(s: &G2Structure<S>, h: &SymBilinear<S>) -> Form<S> {
    i_phi_tensor(s, h.mat())
}

/// The three components of a 3-form: `χ = aφ + ω⌟ψ + i_φ(h)`, `h` traceless.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposed3Form<S> {
    pub a: S,
    pub omega: Vec7<S>,
    pub h: SymBilinear<S>,
}

impl<S: Scalar> Decomposed3Form<S> {
    pub fn pi1(&self, s: &G2Structure<S>) -> Form<S> {
        s.phi().scale(&self.a)
    }

    pub fn pi7(&self, s: &G2Structure<S>) -> Form<S> {
        s.psi().interior(&self.omega).expect("degree 4")
    }

    pub fn pi27(&self, s: &G2Structure<S>) -> Form<S> {
        i_phi(s, &self.h)
    }

    pub fn reconstruct(&self, s: &G2Structure<S>) -> Form<S> {
        &(&self.pi1(s) + &self.pi7(s)) + &self.pi27(s)
    }
}

/// `⟨e_a⌟χ, e_b⌟φ⟩`, so that `χ_amn φ_b{}^mn = 2 M_ab`.
pub(crate) fn cross_contraction<S: Scalar>(s: &G2Structure<S>, chi: &Form<S>, other: &Form<S>) -> Mat7<S> {
    let ca: Vec<Form<S>> = (0..DIM).map(|a| chi.interior_unit(a).expect("degree ≥ 1")).collect();
    let ob: Vec<Form<S>> = (0..DIM).map(|b| s.metric().raise_form(&other.interior_unit(b).expect("degree ≥ 1"))).collect();
    Mat7::from_fn(|a, b| {
        ca[a].components()
            .iter()
            .zip(ob[b].components())
            .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
    })
}

/// Projections of a 3-form:
/// `a = (1/42)χ_abc φ^abc`, `ω^a = −(1/24)χ_mnp ψ^{mnpa}`, `h_ab = (3/4)χ_mn{a} φ_b}{}^mn`.
pub fn decompose3<S: Scalar>(s: &G2Structure<S>, chi: &Form<S>) -> Result<Decomposed3Form<S>> {
    expect_degree(chi, 3)?;
    let metric = s.metric();
    let a = metric.inner(chi, s.phi())? * S::ratio(1, 7);

    let psi_up = metric.raise_form(s.psi());
    let quarter = S::ratio(-1, 4);
    let omega = Vec7::from_fn(|d| {
        let mut acc = S::zero();
        for (&m, v) in masks(3).iter().zip(chi.components()) {
            if v.is_zero() || m & (1 << d) != 0 {
                continue;
            }
            let mnp: Vec<usize> = crate::tensor::index::indices(m).collect();
            let p = psi_up.get(&[mnp[0], mnp[1], mnp[2], d]);
            if !p.is_zero() {
                acc = acc + v.clone() * p;
            }
        }
        acc * quarter.clone()
    });

    let c = cross_contraction(s, chi, s.phi());
    let h = metric.traceless(&c.sym_part().scale(&S::ratio(3, 2)));
    Ok(Decomposed3Form { a, omega, h })
}

/// Squared norms of the three projections.
#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub pi1: f64,
    pub pi7: f64,
    pub pi27: f64,
    /// `7a²`, `4|ω|²`, `(2/9)|h|²`.
    pub predicted: [f64; 3],
}

pub fn norm_report<S: Scalar>(s: &G2Structure<S>, d: &Decomposed3Form<S>) -> NormReport {
    let m = s.metric();
    let pi1 = m.norm_sq(&d.pi1(s)).to_f64();
    let pi7 = m.norm_sq(&d.pi7(s)).to_f64();
    let pi27 = m.norm_sq(&d.pi27(s)).to_f64();
    let a2 = (d.a.clone() * d.a.clone()).to_f64();
    let w2 = m.vec_inner(&d.omega, &d.omega).to_f64();
    let h2 = m.mat_inner(d.h.mat(), d.h.mat()).to_f64();
    NormReport { pi1, pi7, pi27, predicted: [7.0 * a2, 4.0 * w2, 2.0 / 9.0 * h2] }
}

/// 4-forms split through the Hodge star: `χ = ∗(aφ + ω⌟ψ + i_φ(h))`.
pub fn decompose4<S: Scalar>(s: &G2Structure<S>, chi: &Form<S>) -> Result<Decomposed3Form<S>> {
    expect_degree(chi, 4)?;
    decompose3(s, &s.metric().hodge(chi))
}

/// The 4-form pieces matching [`decompose4`].
pub fn parts4<S: Scalar>(s: &G2Structure<S>, d: &Decomposed3Form<S>) -> [Form<S>; 3] {
    let m = s.metric();
    [m.hodge(&d.pi1(s)), m.hodge(&d.pi7(s)), m.hodge(&d.pi27(s))]
}

/// 5-forms split through the Hodge star into `∗Λ²₇ ⊕ ∗Λ²₁₄`.
pub fn decompose5<S: Scalar>(s: &G2Structure<S>, chi: &Form<S>) -> Result<Decomposed2Form<S>> {
    expect_degree(chi, 5)?;
    let d = project2(s, &s.metric().hodge(chi))?;
    let m = s.metric();
    Ok(Decomposed2Form { part7: m.hodge(&d.part7), part14: m.hodge(&d.part14) })
}

/// Matrix of a linear map on p-forms in the canonical component basis
/// (column `k` is the image of the `k`-th basis form).
pub fn linear_map_matrix<S: Scalar>(p: usize, f: impl Fn(&Form<S>) -> Form<S>) -> Vec<Vec<S>> {
    let n = masks(p).len();
    let cols: Vec<Form<S>> = (0..n)
        .map(|k| {
            let mut comps = vec![S::zero(); n];
            comps[k] = S::one();
            f(&Form::from_components(p, comps).expect("layout"))
        })
        .collect();
    let m = cols[0].components().len();
    (0..m).map(|r| cols.iter().map(|c| c.components()[r].clone()).collect()).collect()
}

/// Rank by Gaussian elimination. Exact for exact scalars; float
/// pivots below `tol` count as zero.
pub fn rank<S: Scalar>(mut rows: Vec<Vec<S>>, tol: f64) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..ncols {
        let pivot = (r..rows.len())
            .filter(|&i| !rows[i][c].is_negligible(tol))
            .max_by(|&i, &j| rows[i][c].magnitude().total_cmp(&rows[j][c].magnitude()));
        let Some(p) = pivot else { continue };
        rows.swap(r, p);
        let pv = rows[r][c].clone();
        for i in 0..rows.len() {
            if i == r || rows[i][c].is_zero() {
                continue;
            }
            let f = rows[i][c].clone() / pv.clone();
            for k in c..ncols {
                let t = rows[r][k].clone() * f.clone();
                rows[i][k] = rows[i][k].clone() - t;
            }
        }
        r += 1;
    }
    r
}

/// Dimension counts that pin down the splittings, computed by rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionReport {
    pub g2: usize,
    pub t_psi_eigen4: usize,
    pub t_psi_eigen_minus2: usize,
    pub lambda3: [usize; 3],
}

pub fn dimension_report<S: Scalar>(s: &G2Structure<S>) -> DimensionReport {
    let tol = 1e-10;
    // α ↦ φ_abc α^bc, written as 7 rows over the 21 components.
    let contraction = linear_map_matrix::<S>(2, |a| {
        let v = phi_contraction(s, a).expect("degree 2");
        Form::from_components(1, v.0.to_vec()).expect("layout")
    });
    let g2 = 21 - rank(contraction, tol);
    let shifted = |lambda: i64| {
        linear_map_matrix::<S>(2, |a| &t_psi(s, a).expect("degree 2") - &a.scale(&S::from_int(lambda)))
    };
    let e4 = 21 - rank(shifted(4), tol);
    let em2 = 21 - rank(shifted(-2), tol);
    let proj = |k: usize| {
        linear_map_matrix::<S>(3, |chi| {
            let d = decompose3(s, chi).expect("degree 3");
            match k {
                0 => d.pi1(s),
                1 => d.pi7(s),
                _ => d.pi27(s),
            }
        })
    };
    DimensionReport {
        g2,
        t_psi_eigen4: e4,
        t_psi_eigen_minus2: em2,
        lambda3: [rank(proj(0), tol), rank(proj(1), tol), rank(proj(2), tol)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{phi0, psi0};
    use crate::scalar::Rational;

    type St = G2Structure<Rational>;

    fn q(n: i64) -> Rational {
        Rational::from_int(n)
    }

    fn e(idx: &[usize]) -> Form<Rational> {
        Form::unit(idx)
    }

    #[test]
    fn eigenvectors_of_t_psi() {
        let s = St::standard();
        let a7 = s.phi().interior_unit(0).unwrap();
        assert_eq!(a7, &(&e(&[1, 2]) + &e(&[3, 4])) + &e(&[5, 6]));
        assert_eq!(t_psi(&s, &a7).unwrap(), a7.scale(&q(4)));
        let a14 = &e(&[3, 4]) - &e(&[5, 6]);
        assert_eq!(t_psi(&s, &a14).unwrap(), a14.scale(&q(-2)));
        assert!(g2_member(&s, &a14, 0.0).unwrap());
        assert!(!g2_member(&s, &a7, 0.0).unwrap());
        let d = project2(&s, &a7).unwrap();
        assert_eq!((d.part7, d.part14.is_zero()), (a7, true));
    }

    #[test]
    fn tau_inverts_rho() {
        let s = St::standard();
        let w = Vec7::from_fn(|k| Rational::ratio(k as i64 - 3, 5));
        assert_eq!(tau_phi(&s, &rho_phi(&s, &w)).unwrap(), w);
        assert!(tau_phi(&s, &(&e(&[3, 4]) - &e(&[5, 6]))).unwrap().is_zero());
    }

    #[test]
    fn i_phi_of_metric_is_phi() {
        let s = St::standard();
        assert_eq!(i_phi(&s, &SymBilinear::identity()), phi0::<Rational>());
    }

    #[test]
    fn decompose_examples() {
        let s = St::standard();
        let d = decompose3(&s, &phi0()).unwrap();
        assert_eq!(d.a, q(1));
        assert!(d.omega.is_zero() && d.h.max_abs() == 0.0);

        let chi = psi0::<Rational>().interior_unit(0).unwrap();
        let d = decompose3(&s, &chi).unwrap();
        assert_eq!(d.omega, Vec7::unit(0));
        assert_eq!(d.a, q(0));

        let h0 = SymBilinear::diagonal([q(1), q(1), q(1), q(1), q(1), q(1), q(-6)]);
        let d = decompose3(&s, &i_phi(&s, &h0)).unwrap();
        assert_eq!(d.h, h0);
        assert!(d.omega.is_zero());
    }

    #[test]
    fn i_phi_on_lambda27_forms() {
        // i_φ(ω⌟φ) = c · ω⌟ψ with c fixed here.
        let s = St::standard();
        let w = Vec7::from_fn(|k| q(k as i64 + 1));
        let beta = Mat7::from_two_form(&rho_phi(&s, &w)).unwrap();
        assert_eq!(i_phi_tensor(&s, &beta), s.psi().interior(&w).unwrap());
    }
}
