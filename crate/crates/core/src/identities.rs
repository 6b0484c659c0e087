//! The contraction identities of `(φ, ψ, g)` and the exact self-test suite.
//!
//! The dense checks are written once over a numeric type `T`. With the flat
//! structure every component is an integer, so `T = i64` with all weighted
//! antisymmetrizations scaled away is exact rational arithmetic; `T = f64`
//! serves general structures.

use std::time::Instant;

use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::canonical::{phi0, psi0, PHI0_TERMS, PSI0_TERMS};
use crate::irreps::{decompose3, dimension_report, i_phi, norm_report};
use crate::octonion::{check_psi_associator, PSI_ASSOCIATOR_SIGN};
use crate::scalar::{Mode, Rational, Scalar};
use crate::structure::{metric_from_phi, G2Structure};
use crate::tensor::index::masks;
use crate::tensor::{Dense, Form, SymBilinear, DIM};

/// Coefficient in `φ_abc ψ_mnp{}^c = C (g_a[m φ_np]b − g_b[m φ_np]a)`.
///
/// With `ψ₀ = ∗φ₀` and the orientation `e^{1…7}` the identity holds with
/// `C = −3`; the opposite sign leaves a residual of 2.
pub const PHIPSI_COEFFICIENT: i32 = -3;

/// Dense ingredients of the identities. Upper indices are already raised.
pub struct ContractionData<T> {
    pub g: Dense<T>,
    pub phi: Dense<T>,
    /// `φ_ab{}^c`.
    pub phi_last_up: Dense<T>,
    pub phi_up: Dense<T>,
    pub psi: Dense<T>,
    /// `ψ_abc{}^d`.
    pub psi_last_up: Dense<T>,
    /// `ψ_ab{}^{mn}`.
    pub psi_mixed: Dense<T>,
    pub psi_up: Dense<T>,
}

fn kron<T: From<i32>>(i: usize, j: usize) -> T {
    T::from(if i == j { 1 } else { 0 })
}

impl ContractionData<i64> {
    /// The flat structure with integer entries.
    pub fn standard() -> Self {
        let phi = dense_terms(&PHI0_TERMS.map(|(i, s)| (i.to_vec(), s)));
        let psi = dense_terms(&PSI0_TERMS.map(|(i, s)| (i.to_vec(), s)));
        ContractionData {
            g: Dense::from_fn(2, |i| kron(i[0], i[1])),
            phi_last_up: phi.clone(),
            phi_up: phi.clone(),
            phi,
            psi_last_up: psi.clone(),
            psi_mixed: psi.clone(),
            psi_up: psi.clone(),
            psi,
        }
    }
}

fn dense_terms(terms: &[(Vec<usize>, i64)]) -> Dense<i64> {
    let f = Form::<Rational>::from_terms(terms[0].0.len(), terms.iter().map(|(i, s)| (i.clone(), <Rational as Scalar>::from_int(*s))))
        .expect("valid terms");
    Dense::from_form(&f).map(|v| Scalar::to_f64(v) as i64)
}

fn raise_slot(d: &Dense<f64>, slot: usize, inv: &crate::tensor::Mat7<f64>) -> Dense<f64> {
    let rank = d.rank();
    Dense::from_fn(rank, |idx| {
        let mut src = idx.to_vec();
        let mut acc = 0.0;
        for k in 0..DIM {
            src[slot] = k;
            acc += inv[k][idx[slot]] * d.get(&src);
        }
        acc
    })
}

impl ContractionData<f64> {
    pub fn from_structure(s: &G2Structure<f64>) -> Self {
        let inv = s.metric().inv();
        let phi = Dense::from_form(s.phi());
        let psi = Dense::from_form(s.psi());
        let phi_last_up = raise_slot(&phi, 2, inv);
        let phi_up = raise_slot(&raise_slot(&phi_last_up, 1, inv), 0, inv);
        let psi_last_up = raise_slot(&psi, 3, inv);
        let psi_mixed = raise_slot(&psi_last_up, 2, inv);
        let psi_up = raise_slot(&raise_slot(&psi_mixed, 1, inv), 0, inv);
        ContractionData {
            g: Dense::from_fn(2, |i| *s.g().get(i[0], i[1])),
            phi,
            phi_last_up,
            phi_up,
            psi,
            psi_last_up,
            psi_mixed,
            psi_up,
        }
    }
}

/// Max residual of three contraction identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionResiduals {
    pub phiphi: f64,
    pub phipsi: f64,
    pub psipsi: f64,
}

fn max_abs<T: Signed + ToPrimitive + Clone>(a: &Dense<T>, b: &Dense<T>) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .fold(0.0f64, |m, (x, y)| m.max((x.clone() - y.clone()).abs().to_f64().unwrap_or(f64::INFINITY)))
}

impl<T> ContractionData<T>
where
    T: Clone + Zero + Signed + ToPrimitive + From<i32> + Send + Sync,
{
    /// `φ_abc φ_mn{}^c = g_am g_bn − g_an g_bm + ψ_abmn`.
    pub fn phiphi_residual(&self) -> f64 {
        let lhs = Dense::from_fn(4, |i| {
            (0..DIM).fold(T::zero(), |acc, c| acc + self.phi.get(&[i[0], i[1], c]).clone() * self.phi_last_up.get(&[i[2], i[3], c]).clone())
        });
        let rhs = Dense::from_fn(4, |i| {
            self.g.get(&[i[0], i[2]]).clone() * self.g.get(&[i[1], i[3]]).clone()
                - self.g.get(&[i[0], i[3]]).clone() * self.g.get(&[i[1], i[2]]).clone()
                + self.psi.get(i).clone()
        });
        max_abs(&lhs, &rhs)
    }

    /// `φ_abc ψ_mnp{}^c = C (g_a[m φ_np]b − g_b[m φ_np]a)` with `C` = [`PHIPSI_COEFFICIENT`].
    pub fn phipsi_residual(&self, coefficient: i32) -> f64 {
        // Scaled by 6 to absorb the weighted bracket.
        let lhs = Dense::from_fn(5, |i| {
            let s = (0..DIM).fold(T::zero(), |acc, c| {
                acc + self.phi.get(&[i[0], i[1], c]).clone() * self.psi_last_up.get(&[i[2], i[3], i[4], c]).clone()
            });
            s * T::from(6)
        });
        let t = Dense::from_fn(5, |i| {
            self.g.get(&[i[0], i[2]]).clone() * self.phi.get(&[i[3], i[4], i[1]]).clone()
                - self.g.get(&[i[1], i[2]]).clone() * self.phi.get(&[i[3], i[4], i[0]]).clone()
        });
        let rhs = t.antisymmetrize(&[2, 3, 4]).scale(&T::from(coefficient));
        max_abs(&lhs, &rhs)
    }

    /// `ψ_abcd ψ^mnpq = 24δ^[m_a δ^n_b δ^p_c δ^q]_d + 72ψ_[ab{}^[mn δ^p_c δ^q]_d] − 16φ_[abc φ^[mnp δ^q]_d]`,
    /// multiplied through by 576 so every bracket is an unweighted sum.
    pub fn psipsi_residual(&self) -> f64 {
        let lhs = Dense::from_fn(8, |i| {
            self.psi.get(&i[..4]).clone() * self.psi_up.get(&i[4..]).clone() * T::from(576)
        });
        let deltas = Dense::from_fn(8, |i| {
            kron::<T>(i[0], i[4]) * kron(i[1], i[5]) * kron(i[2], i[6]) * kron(i[3], i[7])
        });
        let term1 = deltas.antisymmetrize(&[4, 5, 6, 7]).scale(&T::from(576));
        drop(deltas);
        let mixed = Dense::from_fn(8, |i| {
            let t2 = if i[2] == i[6] && i[3] == i[7] { self.psi_mixed.get(&[i[0], i[1], i[4], i[5]]).clone() * T::from(72) } else { T::zero() };
            let t3 = if i[3] == i[7] {
                self.phi.get(&i[..3]).clone() * self.phi_up.get(&i[4..7]).clone() * T::from(16)
            } else {
                T::zero()
            };
            t2 - t3
        });
        let both = mixed.antisymmetrize(&[0, 1, 2, 3]).antisymmetrize(&[4, 5, 6, 7]);
        let rhs = &term1 + &both;
        max_abs(&lhs, &rhs)
    }

    pub fn residuals(&self) -> ContractionResiduals {
        ContractionResiduals {
            phiphi: self.phiphi_residual(),
            phipsi: self.phipsi_residual(PHIPSI_COEFFICIENT),
            psipsi: self.psipsi_residual(),
        }
    }
}

/// One line of the self-test suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
    pub passed: bool,
    pub detail: String,
    pub millis: u128,
}

fn check(name: &str, tol: f64, f: impl FnOnce() -> (f64, String)) -> IdentityCheck {
    let t = Instant::now();
    let (residual, detail) = f();
    IdentityCheck {
        name: name.into(),
        residual,
        passed: residual <= tol,
        detail,
        millis: t.elapsed().as_millis(),
    }
}

fn run_generic<S: Scalar>(tol: f64) -> Vec<IdentityCheck> {
    let s = G2Structure::<S>::standard();
    let mut out = Vec::new();

    out.push(check("metric_phi0", tol, || {
        let (g, r) = metric_from_phi(&phi0::<S>()).expect("φ₀ is positive");
        let res = (g.mat() - SymBilinear::<S>::identity().mat()).max_abs().max((r - S::one()).magnitude());
        (res, "g(φ₀) = identity, √det g = 1".into())
    }));
    out.push(check("hodge_phi0", tol, || {
        let res = (&s.metric().hodge(&phi0::<S>()) - &psi0::<S>()).max_abs();
        (res, "∗φ₀ = ψ₀".into())
    }));
    out.push(check("phi_wedge_psi", tol, || (s.volume_residual(), "φ₀∧ψ₀ = 7 vol".into())));
    out.push(check("psi_associator", tol, || match check_psi_associator::<S>() {
        Ok(r) if r.sigma == PSI_ASSOCIATOR_SIGN => (r.residual, format!("σ = {}", r.sigma)),
        Ok(r) => (f64::INFINITY, format!("σ = {} differs from the frozen value", r.sigma)),
        Err(e) => (f64::INFINITY, e.to_string()),
    }));
    out.push(check("i_phi_metric", tol, || {
        ((&i_phi(&s, &SymBilinear::identity()) - s.phi()).max_abs(), "i_φ(g₀) = φ₀".into())
    }));
    out.push(check("three_form_projections", tol, || {
        // Every basis 3-form: reconstruction, norm laws and orthogonality.
        let mut worst = 0.0f64;
        for k in 0..masks(3).len() {
            let mut comps = vec![S::zero(); masks(3).len()];
            comps[k] = S::one();
            let chi = Form::from_components(3, comps).expect("layout");
            let d = decompose3(&s, &chi).expect("degree 3");
            worst = worst.max((&d.reconstruct(&s) - &chi).max_abs());
            let n = norm_report(&s, &d);
            for (got, want) in [n.pi1, n.pi7, n.pi27].iter().zip(n.predicted) {
                worst = worst.max((got - want).abs());
            }
            let m = s.metric();
            let parts = [d.pi1(&s), d.pi7(&s), d.pi27(&s)];
            for i in 0..3 {
                for j in i + 1..3 {
                    worst = worst.max(m.inner(&parts[i], &parts[j]).expect("same degree").magnitude());
                }
            }
        }
        (worst, "35 basis forms: χ = π₁+π₇+π₂₇, |π₁|²=7a², |π₇|²=4|ω|², |π₂₇|²=(2/9)|h|², parts orthogonal".into())
    }));
    out.push(check("dimensions", 0.0, || {
        let d = dimension_report(&s);
        let ok = d.g2 == 14 && d.t_psi_eigen4 == 7 && d.t_psi_eigen_minus2 == 14 && d.lambda3 == [1, 7, 27];
        (
            if ok { 0.0 } else { 1.0 },
            format!(
                "dim g₂ = {}, T_ψ eigenspaces 4: {}, −2: {}, Λ³ ranks {:?}",
                d.g2, d.t_psi_eigen4, d.t_psi_eigen_minus2, d.lambda3
            ),
        )
    }));
    out
}

fn run_dense<T>(data: &ContractionData<T>, tol: f64) -> Vec<IdentityCheck>
where
    T: Clone + Zero + Signed + ToPrimitive + From<i32> + Send + Sync,
{
    vec![
        check("phiphi", tol, || (data.phiphi_residual(), "φ_abc φ_mn^c = g_am g_bn − g_an g_bm + ψ_abmn".into())),
        check("phipsi", tol, || {
            (
                data.phipsi_residual(PHIPSI_COEFFICIENT),
                format!("φ_abc ψ_mnp^c = {PHIPSI_COEFFICIENT}(g_a[m φ_np]b − g_b[m φ_np]a)"),
            )
        }),
        check("psipsi", tol, || {
            (data.psipsi_residual(), "ψ_abcd ψ^mnpq = 24δδδδ + 72ψδδ − 16φφδ (bracketed)".into())
        }),
    ]
}

/// The full self-test suite on the flat structure.
pub fn run_suite(mode: Mode) -> Vec<IdentityCheck> {
    match mode {
        Mode::Exact => {
            let mut v = run_dense(&ContractionData::<i64>::standard(), 0.0);
            v.extend(run_generic::<Rational>(0.0));
            v
        }
        Mode::Float => {
            let s = G2Structure::<f64>::standard();
            let mut v = run_dense(&ContractionData::from_structure(&s), 1e-12);
            v.extend(run_generic::<f64>(1e-12));
            v
        }
    }
}

impl G2Structure<f64> {
    /// Contraction identity residuals at this structure.
    pub fn self_check(&self) -> ContractionResiduals {
        ContractionData::from_structure(self).residuals()
    }
}
