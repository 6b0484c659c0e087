//! Positive 3-forms and the structures they determine.

use crate::canonical::{phi0, psi0};
use crate::error::{G2Error, Result};
use crate::scalar::Scalar;
use crate::tensor::index::permutations_of;
use crate::tensor::{ldl, top_coefficient, Form, Metric, SymBilinear, DIM};

/// A positive 3-form with its metric, volume density and dual 4-form.
#[derive(Debug, Clone, PartialEq)]
pub struct G2Structure<S> {
    phi: Form<S>,
    psi: Form<S>,
    metric: Metric<S>,
}

/// `s_ab` with `s_ab e^{1…7} = (1/6)(e_a⌟φ)∧(e_b⌟φ)∧φ`, which equals `g_ab √det g`.
pub fn bilinear_s<S: Scalar>(phi: &Form<S>) -> Result<SymBilinear<S>> {
    if phi.degree() != 3 {
        return Err(G2Error::WrongDegree { expected: 3, found: phi.degree() });
    }
    let contracted: Vec<Form<S>> = (0..DIM).map(|a| phi.interior_unit(a).expect("degree 3")).collect();
    let with_phi: Vec<Form<S>> = contracted.iter().map(|c| c.wedge(phi).expect("2 + 3 ≤ 7")).collect();
    let sixth = S::ratio(1, 6);
    Ok(SymBilinear::from_fn(|a, b| {
        top_coefficient(&contracted[a].wedge(&with_phi[b]).expect("2 + 5 = 7")) * sixth.clone()
    }))
}

/// `s_ab = (1/144) φ_amn φ_bpq φ_rst ε̂^{mnpqrst}` summed literally over
/// permutations. Slower than [`bilinear_s`]; kept as an independent check.
pub fn bilinear_s_epsilon<S: Scalar>(phi: &Form<S>) -> Result<SymBilinear<S>> {
    if phi.degree() != 3 {
        return Err(G2Error::WrongDegree { expected: 3, found: phi.degree() });
    }
    let perms = permutations_of(DIM);
    let scale = S::ratio(1, 144);
    Ok(SymBilinear::from_fn(|a, b| {
        let mut acc = S::zero();
        for (p, sign) in perms {
            let q: Vec<usize> = p.iter().map(|&x| x as usize).collect();
            let x = phi.get(&[a, q[0], q[1]]);
            if x.is_zero() {
                continue;
            }
            let y = phi.get(&[b, q[2], q[3]]);
            if y.is_zero() {
                continue;
            }
            let z = phi.get(&[q[4], q[5], q[6]]);
            if z.is_zero() {
                continue;
            }
            let t = x * y * z;
            acc = if *sign > 0 { acc + t } else { acc - t };
        }
        acc * scale.clone()
    }))
}

/// `g = (det s)^{-1/9} s` and `√det g = (det s)^{1/9}`.
pub fn metric_from_phi<S: Scalar>(phi: &Form<S>) -> Result<(SymBilinear<S>, S)> {
    let s = bilinear_s(phi)?;
    let (_, d) = ldl(s.mat()).map_err(|_| {
        G2Error::NotPositive("the bilinear form s is not positive-definite".into())
    })?;
    let det = d.iter().fold(S::one(), |acc, x| acc * x.clone());
    let root = det
        .pow_ratio(1, 9)
        .ok_or_else(|| G2Error::InexactRoot("ninth root of det s".into()))?;
    let g = s.scale(&(S::one() / root.clone()));
    Ok((g, root))
}

impl<S: Scalar> G2Structure<S> {
    /// The flat structure `(φ₀, g₀, ψ₀)`.
    pub fn standard() -> Self {
        G2Structure { phi: phi0(), psi: psi0(), metric: Metric::euclidean() }
    }

    /// Metric and dual form of a positive 3-form, with the cheap invariants checked.
    pub fn build(phi: Form<S>) -> Result<Self> {
        let (g, sqrt_det) = metric_from_phi(&phi)?;
        let metric = Metric::with_sqrt_det(g, sqrt_det)
            .map_err(|_| G2Error::NotPositive("derived metric is not positive-definite".into()))?;
        let psi = metric.hodge(&phi);
        let s = G2Structure { phi, psi, metric };
        let r = s.volume_residual();
        if r > 1e-9 * s.metric.sqrt_det().magnitude().max(1.0) {
            return Err(G2Error::Invariant(format!("φ∧ψ differs from 7 vol by {r:e}")));
        }
        Ok(s)
    }

    pub fn phi(&self) -> &Form<S> {
        &self.phi
    }

    pub fn psi(&self) -> &Form<S> {
        &self.psi
    }

    pub fn metric(&self) -> &Metric<S> {
        &self.metric
    }

    pub fn g(&self) -> &SymBilinear<S> {
        self.metric.g()
    }

    pub fn sqrt_det_g(&self) -> &S {
        self.metric.sqrt_det()
    }

    pub fn vol(&self) -> Form<S> {
        self.metric.vol()
    }

    /// `|φ∧ψ − 7 vol|`.
    pub fn volume_residual(&self) -> f64 {
        let top = top_coefficient(&self.phi.wedge(&self.psi).expect("3 + 4 = 7"));
        (top - S::from_int(7) * self.metric.sqrt_det().clone()).magnitude()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> G2Structure<T> {
        G2Structure { phi: self.phi.map(&f), psi: self.psi.map(&f), metric: self.metric.map(&f) }
    }
}

/// `φ = dθ∧ω + Re Ω` on ℝ × ℝ⁶, with coordinate 0 playing the role of θ.
#[derive(Debug, Clone, PartialEq)]
pub struct CyProduct<S> {
    pub structure: G2Structure<S>,
    /// `½ω∧ω − dθ∧Im Ω`.
    pub expected_psi: Form<S>,
    pub psi_residual: f64,
}

pub fn cy_product<S: Scalar>(omega: &Form<S>, re_omega3: &Form<S>, im_omega3: &Form<S>) -> Result<CyProduct<S>> {
    for (f, d) in [(omega, 2), (re_omega3, 3), (im_omega3, 3)] {
        if f.degree() != d {
            return Err(G2Error::WrongDegree { expected: d, found: f.degree() });
        }
        if f.terms().any(|(idx, _)| idx.contains(&0)) {
            return Err(G2Error::BadIndex(vec![0]));
        }
    }
    let dtheta = Form::<S>::unit(&[0]);
    let phi = &dtheta.wedge(omega)? + re_omega3;
    let structure = G2Structure::build(phi)?;
    let expected_psi = &omega.wedge(omega)?.scale(&S::ratio(1, 2)) - &dtheta.wedge(im_omega3)?;
    let psi_residual = (structure.psi() - &expected_psi).max_abs();
    Ok(CyProduct { structure, expected_psi, psi_residual })
}

/// Kähler form and holomorphic volume form of flat ℂ³ on coordinates 1..6.
pub fn flat_su3<S: Scalar>() -> (Form<S>, Form<S>, Form<S>) {
    let one = S::one;
    let omega = Form::from_terms(2, [(vec![1, 2], one()), (vec![3, 4], one()), (vec![5, 6], one())]).expect("valid");
    // Ω = (e²+ie³)(e⁴+ie⁵)(e⁶+ie⁷), Re and Im parts.
    let mut re = Form::zero(3);
    let mut im = Form::zero(3);
    for choice in 0..8u8 {
        let idx: Vec<usize> = (0..3).map(|k| 1 + 2 * k + (choice >> k & 1) as usize).collect();
        let i_count = choice.count_ones();
        let coeff = if i_count / 2 % 2 == 0 { one() } else { -one() };
        if i_count % 2 == 0 {
            re.add_term(&idx, coeff).expect("valid");
        } else {
            im.add_term(&idx, coeff).expect("valid");
        }
    }
    (omega, re, im)
}

/// Betti numbers `(b¹, b², b³)` of a barely G₂ manifold `(Y × S¹)/σ̂`.
pub fn barely_betti(h11_plus: u64, h11_minus: u64, h21: u64) -> (u64, u64, u64) {
    (0, h11_plus, h11_minus + h21 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_int(n)
    }

    #[test]
    fn standard_metric_is_euclidean() {
        let (g, r) = metric_from_phi(&phi0::<Rational>()).unwrap();
        assert_eq!(g, SymBilinear::identity());
        assert_eq!(r, q(1));
        assert_eq!(bilinear_s_epsilon(&phi0::<Rational>()).unwrap(), SymBilinear::identity());
    }

    #[test]
    fn scaling_by_eight() {
        let s = G2Structure::build(phi0::<Rational>().scale(&q(8))).unwrap();
        assert_eq!(*s.g(), SymBilinear::identity().scale(&q(4)));
        assert_eq!(*s.psi(), psi0::<Rational>().scale(&q(16)));
        assert_eq!(*s.sqrt_det_g(), q(128));
    }

    #[test]
    fn degenerate_forms_are_rejected() {
        let e123 = Form::<Rational>::unit(&[0, 1, 2]);
        assert!(matches!(metric_from_phi(&e123), Err(G2Error::NotPositive(_))));
        assert!(matches!(metric_from_phi(&phi0::<Rational>().scale(&q(3))), Err(G2Error::InexactRoot(_))));
        assert!(metric_from_phi(&phi0::<f64>().scale(&3.0)).is_ok());
    }

    #[test]
    fn flat_cy_product() {
        let (w, re, im) = flat_su3::<Rational>();
        let cy = cy_product(&w, &re, &im).unwrap();
        assert_eq!(*cy.structure.phi(), phi0::<Rational>());
        assert_eq!(cy.psi_residual, 0.0);
        assert!(matches!(cy_product(&-&w, &re, &im), Err(G2Error::NotPositive(_))));
    }

    #[test]
    fn betti_arithmetic() {
        assert_eq!(barely_betti(1, 1, 3), (0, 1, 5));
        assert_eq!(barely_betti(0, 0, 0), (0, 0, 1));
    }
}
