//! Local moduli geometry of a chart of constant 3-forms on the unit 7-torus.
//!
//! A point `s` of the chart is the 3-form `φ(s) = Σ s^N basis[N]`. Integrals
//! over the torus of constant forms reduce to pointwise contractions times the
//! volume, so every `(1/V)∫ … vol` below is a single contraction.
//!
//! Two routes are provided for every derivative quantity. The closed-form
//! tables assume the special coordinates `basis[0] ∝ φ`, `basis[μ] ∈ Λ³₂₇`
//! and are valid where `s = (s⁰, 0, …, 0)`; there `a = 1/s⁰`. The series
//! route differentiates the exact map `s ↦ ψ(φ(s))` with truncated power
//! series and polarization, and works at any positive point.

use std::collections::{BTreeSet, HashMap};

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::canonical::phi0;
use crate::deform::contract_slot;
use crate::error::{G2Error, Result};
use crate::irreps::{decompose3, i_phi};
use crate::series::Series;
use crate::structure::G2Structure;
use crate::tensor::{Dense, Form, Mat7, SymBilinear, DIM};

/// Tolerance for the vanishing of `s^μ` at a special point, relative to `s⁰`.
pub const SPECIAL_TOL: f64 = 1e-12;
/// Tolerance for `basis[μ] ∧ φ` and `basis[μ] ∧ ψ`, relative to the form size.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// The `Λ³₁, Λ³₇, Λ³₂₇` projections of one basis form.
type Pieces = [Form<f64>; 3];

/// Coefficient of the `α ∧ φ` term in the third `Λ³₂₇` derivative of `ψ`.
pub const ALPHA_COEFFICIENT: f64 = 1.0 / 54.0;

type Jet = Series<5>;

/// A dense tensor over the chart's coordinates, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ModTensor {
    dim: usize,
    rank: usize,
    data: Vec<f64>,
}

impl ModTensor {
    pub fn zeros(dim: usize, rank: usize) -> Self {
        ModTensor { dim, rank, data: vec![0.0; dim.pow(rank as u32)] }
    }

    pub fn from_fn(dim: usize, rank: usize, f: impl Fn(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(dim, rank);
        for k in 0..t.data.len() {
            t.data[k] = f(&t.unflatten(k));
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    fn unflatten(&self, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.rank];
        for slot in (0..self.rank).rev() {
            idx[slot] = k % self.dim;
            k /= self.dim;
        }
        idx
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let k = self.offset(idx);
        self.data[k] = v;
    }

    /// Every multi-index, in storage order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.data.len()).map(|k| self.unflatten(k))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `max|self − reference| / max|reference|`, with the denominator floored.
    pub fn relative_error(&self, reference: &Self, floor: f64) -> f64 {
        self.max_abs_diff(reference) / reference.max_abs().max(floor)
    }

    /// Largest change under swapping any two slots.
    pub fn symmetry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for idx in self.indices() {
            for i in 0..self.rank {
                for j in i + 1..self.rank {
                    let mut p = idx.clone();
                    p.swap(i, j);
                    worst = worst.max((self.get(&idx) - self.get(&p)).abs());
                }
            }
        }
        worst
    }

    pub fn scale(&self, c: f64) -> Self {
        ModTensor { data: self.data.iter().map(|x| c * x).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &Self) -> Self {
        ModTensor { data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(), ..self.clone() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        assert_eq!(self.rank, 2, "matrix view needs rank 2");
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(&[i, j]))
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), 2, |i| m[(i[0], i[1])])
    }

    /// Nested arrays, outermost index first.
    pub fn to_nested(&self) -> serde_json::Value {
        fn rec(t: &ModTensor, prefix: &mut Vec<usize>) -> serde_json::Value {
            if prefix.len() == t.rank {
                return serde_json::json!(t.get(prefix));
            }
            let items = (0..t.dim)
                .map(|i| {
                    prefix.push(i);
                    let v = rec(t, prefix);
                    prefix.pop();
                    v
                })
                .collect();
            serde_json::Value::Array(items)
        }
        rec(self, &mut Vec::new())
    }
}

impl Serialize for ModTensor {
    fn serialize<Ser: Serializer>(&self, ser: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        self.to_nested().serialize(ser)
    }
}

/// Counts of positive, negative and numerically zero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl Signature {
    pub fn of(m: &ModTensor) -> Self {
        let eig = SymmetricEigen::new(m.to_matrix()).eigenvalues;
        let scale = eig.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
        let tol = 1e-10 * scale;
        Signature {
            positive: eig.iter().filter(|&&x| x > tol).count(),
            negative: eig.iter().filter(|&&x| x < -tol).count(),
            zero: eig.iter().filter(|&&x| x.abs() <= tol).count(),
        }
    }
}

/// Constant 3-forms with affine coordinates: `basis[0]` a positive form and
/// `basis[μ]` in `Λ³₂₇` of the structure it defines.
#[derive(Debug, Clone)]
pub struct ModuliChart {
    basis: Vec<Form<f64>>,
    base: G2Structure<f64>,
}

impl ModuliChart {
    pub fn new(basis: Vec<Form<f64>>) -> Result<Self> {
        let Some(first) = basis.first() else {
            return Err(G2Error::InvalidChart("empty basis".into()));
        };
        if let Some(b) = basis.iter().find(|b| b.degree() != 3) {
            return Err(G2Error::WrongDegree { expected: 3, found: b.degree() });
        }
        let base = G2Structure::build(first.clone())?;
        for (mu, b) in basis.iter().enumerate().skip(1) {
            let scale = b.max_abs().max(1.0) * base.phi().max_abs().max(1.0);
            let w1 = b.wedge(base.phi())?.max_abs();
            let w2 = b.wedge(base.psi())?.max_abs();
            if w1.max(w2) > MEMBERSHIP_TOL * scale {
                return Err(G2Error::InvalidChart(format!(
                    "basis[{mu}] is not in Λ³₂₇ (|χ∧φ| = {w1:.3e}, |χ∧ψ| = {w2:.3e})"
                )));
            }
        }
        Ok(ModuliChart { basis, base })
    }

    /// `a·φ₀` followed by `i_φ₀(h)` for each `h`, made traceless.
    pub fn from_traceless(a: f64, hs: &[SymBilinear<f64>]) -> Result<Self> {
        let s0 = G2Structure::standard();
        let mut basis = vec![phi0::<f64>().scale(&a)];
        basis.extend(hs.iter().map(|h| i_phi(&s0, &s0.metric().traceless(h))));
        Self::new(basis)
    }

    /// `n` seeded `Λ³₂₇` directions of size about `scale` next to `φ₀`.
    pub fn seeded(n: usize, seed: u64, scale: f64) -> Result<Self> {
        let mut rng = crate::random::rng(seed);
        let s0 = G2Structure::standard();
        let hs: Vec<_> = (0..n).map(|_| crate::random::traceless_symmetric(&mut rng, &s0, scale)).collect();
        Self::from_traceless(1.0, &hs)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Form<f64>] {
        &self.basis
    }

    pub fn base(&self) -> &G2Structure<f64> {
        &self.base
    }

    /// `(1, 0, …, 0)`, the base point.
    pub fn origin(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.dim()];
        s[0] = 1.0;
        s
    }

    fn check(&self, s: &[f64]) -> Result<()> {
        if s.len() != self.dim() {
            return Err(G2Error::InvalidChart(format!("{} coordinates for a chart of dimension {}", s.len(), self.dim())));
        }
        Ok(())
    }

    fn combine(&self, s: &[f64]) -> Form<f64> {
        let n = self.basis[0].components().len();
        let comps = (0..n).map(|c| self.basis.iter().zip(s).map(|(b, x)| x * b.components()[c]).sum()).collect();
        Form::from_components(3, comps).expect("layout")
    }

    pub fn phi_at(&self, s: &[f64]) -> Result<Form<f64>> {
        self.check(s)?;
        Ok(self.combine(s))
    }

    pub fn structure_at(&self, s: &[f64]) -> Result<G2Structure<f64>> {
        G2Structure::build(self.phi_at(s)?)
    }

    /// `V = (1/7)∫φ∧ψ`, which is `√det g` on the unit torus.
    pub fn volume(&self, s: &[f64]) -> Result<f64> {
        Ok(*self.structure_at(s)?.sqrt_det_g())
    }

    /// `K = −3 log V`.
    pub fn potential(&self, s: &[f64]) -> Result<f64> {
        Ok(-3.0 * self.volume(s)?.ln())
    }

    fn projections(&self, s: &[f64]) -> Result<(G2Structure<f64>, Vec<Pieces>)> {
        let st = self.structure_at(s)?;
        let parts = self
            .basis
            .iter()
            .map(|b| {
                let d = decompose3(&st, b)?;
                Ok([d.pi1(&st), d.pi7(&st), d.pi27(&st)])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((st, parts))
    }

    fn weighted_gram(&self, s: &[f64], w: [f64; 3]) -> Result<(G2Structure<f64>, ModTensor)> {
        let (st, parts) = self.projections(s)?;
        let m = st.metric();
        let mut out = ModTensor::zeros(self.dim(), 2);
        for i in 0..self.dim() {
            for j in i..self.dim() {
                let mut v = 0.0;
                for k in 0..3 {
                    v += w[k] * m.inner(&parts[i][k], &parts[j][k])?;
                }
                out.set(&[i, j], v);
                out.set(&[j, i], v);
            }
        }
        Ok((st, out))
    }

    /// `G_MN = ∂²K`, through the projections of the basis at `φ(s)`:
    /// `⟨π₁,π₁⟩ − ⟨π₇,π₇⟩ + ⟨π₂₇,π₂₇⟩`.
    pub fn metric(&self, s: &[f64]) -> Result<ModTensor> {
        Ok(self.weighted_gram(s, [1.0, -1.0, 1.0])?.1)
    }

    /// `(1/V)∫φ_M ∧ ∗φ_N`, equal to the metric when no `Λ³₇` parts are present.
    pub fn gram(&self, s: &[f64]) -> Result<ModTensor> {
        Ok(self.weighted_gram(s, [1.0, 1.0, 1.0])?.1)
    }

    /// `∂²V = V((4/9)⟨π₁,π₁⟩ + (1/3)⟨π₇,π₇⟩ − (1/3)⟨π₂₇,π₂₇⟩)` and its signature.
    pub fn volume_hessian(&self, s: &[f64]) -> Result<(ModTensor, Signature)> {
        let (st, h) = self.weighted_gram(s, [4.0 / 9.0, 1.0 / 3.0, -1.0 / 3.0])?;
        let h = h.scale(*st.sqrt_det_g());
        let sig = Signature::of(&h);
        Ok((h, sig))
    }

    /// `∂_N ψ = (4/3)∗π₁ + ∗π₇ − ∗π₂₇` of `basis[N]`, at any point.
    pub fn psi_first_derivative(&self, s: &[f64], n: usize) -> Result<Form<f64>> {
        let st = self.structure_at(s)?;
        let d = decompose3(&st, &self.basis[n])?;
        let m = st.metric();
        let sum = &(&d.pi1(&st).scale(&(4.0 / 3.0)) + &d.pi7(&st)) - &d.pi27(&st);
        Ok(m.hodge(&sum))
    }

    /// Data at a point `s = (s⁰, 0, …, 0)`, where the closed-form tables hold.
    pub fn special_point(&self, s: &[f64]) -> Result<SpecialPoint> {
        self.check(s)?;
        let s0 = s[0];
        if s0 <= 0.0 || s[1..].iter().any(|x| x.abs() > SPECIAL_TOL * s0.abs()) {
            return Err(G2Error::InvalidChart(
                "closed-form tables need s = (s⁰, 0, …, 0) with s⁰ > 0".into(),
            ));
        }
        SpecialPoint::new(self, s)
    }

    /// `∂_{dirs} ψ` from the closed-form table (order ≤ 3, special points only
    /// beyond first order).
    pub fn psi_derivative(&self, s: &[f64], dirs: &[usize]) -> Result<Form<f64>> {
        self.check_dirs(dirs)?;
        match dirs.len() {
            0 => Ok(self.structure_at(s)?.psi().clone()),
            1 => self.psi_first_derivative(s, dirs[0]),
            2 | 3 => self.special_point(s)?.psi_derivative(dirs),
            k => Err(G2Error::Unsupported(format!("ψ derivatives of order {k} (at most 3)"))),
        }
    }

    fn check_dirs(&self, dirs: &[usize]) -> Result<()> {
        if let Some(&d) = dirs.iter().find(|&&d| d >= self.dim()) {
            return Err(G2Error::InvalidChart(format!("direction {d} outside a chart of dimension {}", self.dim())));
        }
        Ok(())
    }

    fn jet_structure(&self, s: &[f64], multiset: &[usize]) -> Result<G2Structure<Jet>> {
        let mut v = vec![0.0; self.dim()];
        for &i in multiset {
            v[i] += 1.0;
        }
        let base = self.combine(s);
        let dir = self.combine(&v);
        let comps = base.components().iter().zip(dir.components()).map(|(&x, &d)| Jet::linear(x, d)).collect();
        G2Structure::build(Form::from_components(3, comps).expect("layout"))
    }

    /// `∂_{dirs} ψ` by exact Taylor coefficients along sums of directions.
    pub fn psi_derivative_series(&self, s: &[f64], dirs: &[usize]) -> Result<Form<f64>> {
        self.check(s)?;
        self.check_dirs(dirs)?;
        let k = dirs.len();
        if k >= 5 {
            return Err(G2Error::Unsupported(format!("series ψ derivatives of order {k} (at most 4)")));
        }
        if k == 0 {
            return Ok(self.structure_at(s)?.psi().clone());
        }
        let mut out = Form::zero(4);
        for (sub, sign) in subsets(dirs) {
            let st = self.jet_structure(s, &sub)?;
            out = &out + &st.psi().map(|x| x.coeff(k)).scale(&sign);
        }
        Ok(out)
    }

    /// The fully symmetric `∂^order K` (order ≤ 4) from exact Taylor
    /// coefficients and polarization.
    pub fn potential_derivatives(&self, s: &[f64], order: usize) -> Result<ModTensor> {
        self.check(s)?;
        if order >= 5 {
            return Err(G2Error::Unsupported(format!("derivatives of K of order {order} (at most 4)")));
        }
        let n = self.dim();
        if order == 0 {
            return Ok(ModTensor { dim: n, rank: 0, data: vec![self.potential(s)?] });
        }
        let tuples = sorted_tuples(n, order);
        let needed: BTreeSet<Vec<usize>> =
            tuples.iter().flat_map(|t| subsets(t).into_iter().map(|(m, _)| m)).collect();
        let needed: Vec<Vec<usize>> = needed.into_iter().collect();
        let values: Vec<f64> = needed
            .par_iter()
            .map(|m| {
                let st = self.jet_structure(s, m)?;
                Ok((st.sqrt_det_g().ln() * Jet::constant(-3.0)).coeff(order))
            })
            .collect::<Result<Vec<_>>>()?;
        let table: HashMap<&[usize], f64> = needed.iter().map(Vec::as_slice).zip(values).collect();
        let mut out = ModTensor::zeros(n, order);
        let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
        for idx in (0..out.data.len()).map(|k| out.unflatten(k)).collect::<Vec<_>>() {
            let mut key = idx.clone();
            key.sort_unstable();
            let v = *cache.entry(key.clone()).or_insert_with(|| subsets(&key).iter().map(|(m, c)| c * table[m.as_slice()]).sum());
            out.set(&idx, v);
        }
        Ok(out)
    }

    /// Yukawa coupling `A = ∂³K` from the closed-form table.
    pub fn yukawa(&self, s: &[f64]) -> Result<Yukawa> {
        self.special_point(s)?.yukawa()
    }

    /// Hessian curvature and the Riemann tensor from the closed-form tables.
    pub fn hessian_curvature(&self, s: &[f64]) -> Result<Curvature> {
        self.special_point(s)?.curvature()
    }

    pub fn report(&self, s: &[f64]) -> Result<ModuliReport> {
        let (volume_hessian, volume_hessian_signature) = self.volume_hessian(s)?;
        let metric = self.metric(s)?;
        let metric_signature = Signature::of(&metric);
        let special = self.special_point(s).ok();
        let (yukawa, curvature) = match &special {
            Some(p) => {
                let y = p.yukawa()?;
                let c = p.curvature_with(&y)?;
                (Some(y), Some(c))
            }
            None => (None, None),
        };
        Ok(ModuliReport {
            coords: s.to_vec(),
            volume: self.volume(s)?,
            potential: self.potential(s)?,
            metric,
            metric_signature,
            volume_hessian,
            volume_hessian_signature,
            yukawa,
            curvature,
        })
    }
}

/// All sub-multisets of `idx` (by position) with the polarization sign
/// `(−1)^{k−|S|}`, so that `Σ sign·c_k(v_S)` is the mixed `k`-th derivative
/// when `c_k(v)` is the `k`-th Taylor coefficient along `v`.
fn subsets(idx: &[usize]) -> Vec<(Vec<usize>, f64)> {
    let k = idx.len();
    (1u32..(1 << k))
        .map(|mask| {
            let mut sub: Vec<usize> = (0..k).filter(|&i| mask & (1 << i) != 0).map(|i| idx[i]).collect();
            sub.sort_unstable();
            let sign = if (k - mask.count_ones() as usize) % 2 == 0 { 1.0 } else { -1.0 };
            (sub, sign)
        })
        .collect()
}

/// Non-decreasing tuples of length `k` over `0..n`.
fn sorted_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t: Vec<usize>| {
                let lo = t.last().copied().unwrap_or(0);
                (lo..n).map(move |i| {
                    let mut t = t.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}

fn permutations<const K: usize>() -> Vec<[usize; K]> {
    fn rec<const K: usize>(cur: &mut Vec<usize>, out: &mut Vec<[usize; K]>) {
        if cur.len() == K {
            out.push(std::array::from_fn(|i| cur[i]));
            return;
        }
        for i in 0..K {
            if !cur.contains(&i) {
                cur.push(i);
                rec(cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(K), &mut out);
    out
}

/// Structure and traceless tensors `h_μ` (with `basis[μ] = i_φ(h_μ)`) at a
/// special point.
#[derive(Debug, Clone)]
pub struct SpecialPoint {
    /// `a = 1/s⁰`, so that `basis[0] = a·φ(s)`.
    pub a: f64,
    pub structure: G2Structure<f64>,
    pub basis: Vec<Form<f64>>,
    /// `h[0]` is zero; `h[μ]` for `μ ≥ 1`.
    pub h: Vec<SymBilinear<f64>>,
    /// `G_MN` at the point.
    pub metric: ModTensor,
    phi: Dense<f64>,
    psi: Dense<f64>,
    up: Vec<Mat7<f64>>,
    mixed: Vec<Mat7<f64>>,
}

impl SpecialPoint {
    fn new(chart: &ModuliChart, s: &[f64]) -> Result<Self> {
        let structure = chart.structure_at(s)?;
        let m = structure.metric();
        let mut h = vec![SymBilinear::zero()];
        for b in &chart.basis[1..] {
            h.push(decompose3(&structure, b)?.h);
        }
        let up = h.iter().map(|x| m.raise_both(x.mat())).collect();
        let mixed = h.iter().map(|x| m.inv() * x.mat()).collect();
        Ok(SpecialPoint {
            a: 1.0 / s[0],
            metric: chart.metric(s)?,
            phi: Dense::from_form(structure.phi()),
            psi: Dense::from_form(structure.psi()),
            basis: chart.basis.clone(),
            structure,
            h,
            up,
            mixed,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn star(&self, f: &Form<f64>) -> Form<f64> {
        self.structure.metric().hodge(f)
    }

    fn star_i(&self, x: &SymBilinear<f64>) -> Form<f64> {
        let t = self.structure.metric().traceless(x);
        self.star(&i_phi(&self.structure, &t))
    }

    /// `Tr(h_i h_j …)` with indices moved by the metric.
    pub fn trace(&self, hs: &[usize]) -> f64 {
        hs.iter().skip(1).fold(self.mixed[hs[0]].clone(), |acc, &i| &acc * &self.mixed[i]).trace()
    }

    fn contract(&self, t: &Dense<f64>, hs: &[usize]) -> Dense<f64> {
        hs.iter().enumerate().fold(t.clone(), |acc, (slot, &i)| contract_slot(&acc, slot, &self.up[i]))
    }

    /// `(φ h_i h_j φ)_ab = φ_{dea} h_i^{dd'} h_j^{ee'} φ_{d'e'b}`.
    pub fn phi_pair(&self, i: usize, j: usize) -> SymBilinear<f64> {
        let x = self.contract(&self.phi, &[i, j]);
        SymBilinear::from_fn(|a, b| {
            let mut acc = 0.0;
            for d in 0..DIM {
                for e in 0..DIM {
                    acc += x.get(&[d, e, a]) * self.phi.get(&[d, e, b]);
                }
            }
            acc
        })
    }

    /// `(φ h_i h_j h_k φ) = φ_{abc} h_i^{aa'} h_j^{bb'} h_k^{cc'} φ_{a'b'c'}`.
    pub fn phi_triple(&self, i: usize, j: usize, k: usize) -> f64 {
        let x = self.contract(&self.phi, &[i, j, k]);
        x.data().iter().zip(self.phi.data()).map(|(a, b)| a * b).sum()
    }

    /// `(ψ h_i h_j h_k ψ)_ab = ψ_{cdea} h_i^{cc'} h_j^{dd'} h_k^{ee'} ψ_{c'd'e'b}`.
    pub fn psi_triple(&self, i: usize, j: usize, k: usize) -> SymBilinear<f64> {
        let x = self.contract(&self.psi, &[i, j, k]);
        SymBilinear::from_fn(|a, b| {
            let mut acc = 0.0;
            for c in 0..DIM.pow(3) {
                let t = [c / 49, c / 7 % 7, c % 7];
                acc += x.get(&[t[0], t[1], t[2], a]) * self.psi.get(&[t[0], t[1], t[2], b]);
            }
            acc
        })
    }

    /// `(ψ h_i h_j h_k h_l ψ)`, fully contracted.
    pub fn psi_quad(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let x = self.contract(&self.psi, &[i, j, k, l]);
        x.data().iter().zip(self.psi.data()).map(|(a, b)| a * b).sum()
    }

    /// `α_a = ψ_{amnp} φ_{rst} h_i^{mr} h_j^{ns} h_k^{pt}` as a 1-form.
    pub fn alpha(&self, i: usize, j: usize, k: usize) -> Form<f64> {
        let x = self.contract(&self.phi, &[i, j, k]);
        let comps = (0..DIM)
            .map(|a| {
                let mut acc = 0.0;
                for c in 0..DIM.pow(3) {
                    let t = [c / 49, c / 7 % 7, c % 7];
                    acc += self.psi.get(&[a, t[0], t[1], t[2]]) * x.get(&t);
                }
                acc
            })
            .collect();
        Form::from_components(1, comps).expect("layout")
    }

    /// Symmetric part of `h_i h_j h_k`, indices down.
    pub fn product(&self, i: usize, j: usize, k: usize) -> SymBilinear<f64> {
        let g = self.structure.g().mat();
        let m = &(&self.mixed[i] * &self.mixed[j]) * &self.mixed[k];
        (g * &m).sym_part()
    }

    /// `∂_μ∂_νψ = −(2/189)Tr(h_μh_ν)ψ + (1/3)∗i_φ((φh_μh_νφ)₀)`.
    fn psi_second(&self, mu: usize, nu: usize) -> Form<f64> {
        &self.structure.psi().scale(&(-2.0 / 189.0 * self.trace(&[mu, nu]))) + &self.star_i(&self.phi_pair(mu, nu)).scale(&(1.0 / 3.0))
    }

    /// The symmetrized third `Λ³₂₇` derivative of `ψ`.
    fn psi_third(&self, idx: [usize; 3]) -> Form<f64> {
        let psi = self.structure.psi();
        let mut prod = SymBilinear::zero();
        let mut tr_star = Form::zero(4);
        for p in permutations::<3>() {
            let [i, j, k] = [idx[p[0]], idx[p[1]], idx[p[2]]];
            prod = &prod + &self.product(i, j, k);
            tr_star = &tr_star + &self.star(&self.basis[k]).scale(&self.trace(&[i, j]));
        }
        let [i, j, k] = idx;
        let terms = [
            tr_star.scale(&(-5.0 / 18.0 / 6.0)),
            self.star_i(&prod).scale(&(1.0 / 3.0 / 6.0)),
            self.star_i(&self.psi_triple(i, j, k)).scale(&(-1.0 / 6.0)),
            psi.scale(&(-4.0 / 567.0 * self.phi_triple(i, j, k))),
            self.alpha(i, j, k).wedge(self.structure.phi()).expect("1 + 3").scale(&ALPHA_COEFFICIENT),
        ];
        terms.iter().fold(Form::zero(4), |acc, t| &acc + t)
    }

    /// Table entry for `∂_{dirs} ψ`, `1 ≤ |dirs| ≤ 3`.
    pub fn psi_derivative(&self, dirs: &[usize]) -> Result<Form<f64>> {
        let mut d = dirs.to_vec();
        d.sort_unstable();
        let zeros = d.iter().take_while(|&&x| x == 0).count();
        let greek = &d[zeros..];
        let a = self.a;
        let psi = self.structure.psi();
        Ok(match (d.len(), zeros) {
            (1, 1) => psi.scale(&(4.0 / 3.0 * a)),
            (1, 0) => -&self.star(&self.basis[greek[0]]),
            (2, 2) => psi.scale(&(4.0 / 9.0 * a * a)),
            (2, 1) => self.star(&self.basis[greek[0]]).scale(&(-a / 3.0)),
            (2, 0) => self.psi_second(greek[0], greek[1]),
            (3, 3) => psi.scale(&(-8.0 / 27.0 * a * a * a)),
            (3, 2) => self.star(&self.basis[greek[0]]).scale(&(2.0 / 9.0 * a * a)),
            (3, 1) => {
                let (mu, nu) = (greek[0], greek[1]);
                &psi.scale(&(4.0 / 567.0 * a * self.trace(&[mu, nu])))
                    + &self.star_i(&self.phi_pair(mu, nu)).scale(&(-2.0 / 9.0 * a))
            }
            (3, 0) => self.psi_third([greek[0], greek[1], greek[2]]),
            (k, _) => return Err(G2Error::Unsupported(format!("ψ derivatives of order {k} in the table"))),
        })
    }

    /// `A_μνρ = −(2/27)(φ h_μ h_ν h_ρ φ)`.
    pub fn yukawa_contraction(&self, mu: usize, nu: usize, rho: usize) -> f64 {
        -2.0 / 27.0 * self.phi_triple(mu, nu, rho)
    }

    /// `A_μνρ = −(4/9)(1/V)∫ φ_abc h_μ^a ∧ h_ν^b ∧ h_ρ^c ∧ ψ`, with
    /// `h_μ^a = h_μ{}^a{}_m dx^m`, the sum over `a < b < c`, and the result
    /// symmetrized in `μνρ` (the unsymmetrized sum agrees on the diagonal only).
    pub fn yukawa_wedge(&self, mu: usize, nu: usize, rho: usize) -> f64 {
        let idx = [mu, nu, rho];
        permutations::<3>().iter().map(|p| self.wedge_term(idx[p[0]], idx[p[1]], idx[p[2]])).sum::<f64>() / 6.0
    }

    fn one_forms(&self, i: usize) -> Vec<Form<f64>> {
        (0..DIM)
            .map(|a| Form::from_components(1, (0..DIM).map(|m| self.mixed[i][a][m]).collect()).expect("layout"))
            .collect()
    }

    fn wedge_term(&self, mu: usize, nu: usize, rho: usize) -> f64 {
        let one_forms = |i| self.one_forms(i);
        let (x, y, z) = (one_forms(mu), one_forms(nu), one_forms(rho));
        let mut top = 0.0;
        for (abc, c) in self.structure.phi().terms() {
            if *c == 0.0 {
                continue;
            }
            let w = x[abc[0]].wedge(&y[abc[1]]).and_then(|f| f.wedge(&z[abc[2]])).and_then(|f| f.wedge(self.structure.psi()));
            top += c * w.expect("degrees add to 7").get(&[0, 1, 2, 3, 4, 5, 6]);
        }
        -4.0 / 9.0 * top / self.structure.sqrt_det_g()
    }

    pub fn yukawa(&self) -> Result<Yukawa> {
        let n = self.dim();
        let a = self.a;
        let g = &self.metric;
        let mut contraction = ModTensor::zeros(n, 3);
        let mut wedge = ModTensor::zeros(n, 3);
        for t in sorted_tuples(n, 3).into_iter().filter(|t| t[0] >= 1) {
            let c = self.yukawa_contraction(t[0], t[1], t[2]);
            let w = self.yukawa_wedge(t[0], t[1], t[2]);
            for p in permutations::<3>() {
                let idx = [t[p[0]], t[p[1]], t[p[2]]];
                contraction.set(&idx, c);
                wedge.set(&idx, w);
            }
        }
        let full = ModTensor::from_fn(n, 3, |idx| {
            let mut d = idx.to_vec();
            d.sort_unstable();
            match d.iter().take_while(|&&x| x == 0).count() {
                3 => -14.0 * a * a * a,
                2 => 0.0,
                1 => -2.0 * a * g.get(&[d[1], d[2]]),
                _ => contraction.get(&d),
            }
        });
        let agreement = contraction.relative_error(&wedge, 1e-300);
        Ok(Yukawa { a: full, contraction, wedge, agreement })
    }

    /// `T_(κμ T_νρ)`, the three pairings averaged.
    fn trace_pairs(&self, [k, m, n, r]: [usize; 4]) -> f64 {
        (self.trace(&[k, m]) * self.trace(&[n, r]) + self.trace(&[k, n]) * self.trace(&[m, r]) + self.trace(&[k, r]) * self.trace(&[m, n]))
            / 3.0
    }

    /// `Tr(h_κh_μh_νh_ρ)` averaged over the three distinct cyclic orderings.
    fn trace4_sym(&self, [k, m, n, r]: [usize; 4]) -> f64 {
        (self.trace(&[k, m, n, r]) + self.trace(&[k, n, m, r]) + self.trace(&[k, m, r, n])) / 3.0
    }

    /// `∂⁴K` on four `Λ³₂₇` directions:
    /// `(1/3)(G_μνG_κρ + G_μκG_νρ + G_μρG_κν) + (1/V)∫(−(2/27)Tr(h⁴) + (1/27)(ψhhhhψ) + (5/81)Tr(h²)Tr(h²))vol`,
    /// trace terms symmetrized over the four indices.
    fn k4_greek(&self, idx: [usize; 4]) -> f64 {
        let g = |i: usize, j: usize| self.metric.get(&[i, j]);
        let [k, m, n, r] = idx;
        (g(m, n) * g(k, r) + g(m, k) * g(n, r) + g(m, r) * g(k, n)) / 3.0 - 2.0 / 27.0 * self.trace4_sym(idx)
            + 5.0 / 81.0 * self.trace_pairs(idx)
            + self.psi_quad(k, m, n, r) / 27.0
    }

    /// `G^{τσ}A_μτρ A_κνσ` with `τ, σ` over the `Λ³₂₇` directions only.
    fn greek_a_dot_a(&self, a: &ModTensor, [k, m, n, r]: [usize; 4]) -> Result<f64> {
        let d = self.dim();
        let sub = DMatrix::from_fn(d - 1, d - 1, |i, j| self.metric.get(&[i + 1, j + 1]));
        let inv = sub.try_inverse().ok_or(G2Error::Singular)?;
        let mut acc = 0.0;
        for t in 1..d {
            for s in 1..d {
                acc += inv[(t - 1, s - 1)] * a.get(&[m, t, r]) * a.get(&[k, n, s]);
            }
        }
        Ok(acc)
    }

    /// `𝒬_κμνρ` in the contraction form:
    /// `(1/3)(G_μνG_κρ + G_μκG_νρ − (5/7)G_μρG_κν) − G^{τσ}A_μτρA_κνσ
    ///  + (1/V)∫(−(2/27)Tr(h_κh_μh_νh_ρ) + (1/27)(ψh_κh_μh_νh_ρψ) + (5/81)Tr(h_(κh_μ)Tr(h_νh_ρ)))vol`.
    /// It equals `∂⁴K − A·A` when `τ, σ` run over `Λ³₂₇` directions only
    /// and the trace terms are symmetrized; the `τ = 0` part of `A·A` is
    /// what turns the third pairing's coefficient `1` into `−5/7`.
    pub fn q_contraction(&self, a: &ModTensor, idx: [usize; 4]) -> Result<f64> {
        let g = |i: usize, j: usize| self.metric.get(&[i, j]);
        let [k, m, n, r] = idx;
        Ok((g(m, n) * g(k, r) + g(m, k) * g(n, r) - 5.0 / 7.0 * g(m, r) * g(k, n)) / 3.0
            - self.greek_a_dot_a(a, idx)?
            - 2.0 / 27.0 * self.trace4_sym(idx)
            + self.psi_quad(k, m, n, r) / 27.0
            + 5.0 / 81.0 * self.trace_pairs(idx))
    }

    /// `(8/9)(1/V)∫ψ_abcd h_κ^a∧h_μ^b∧h_ν^c∧h_ρ^d∧φ`, summed over `a<b<c<d` and
    /// symmetrized in the four directions.
    pub fn psi_quad_wedge(&self, idx: [usize; 4]) -> f64 {
        let perms = permutations::<4>();
        perms.iter().map(|p| self.quad_wedge_term([idx[p[0]], idx[p[1]], idx[p[2]], idx[p[3]]])).sum::<f64>() * 8.0
            / 9.0
            / perms.len() as f64
    }

    fn quad_wedge_term(&self, idx: [usize; 4]) -> f64 {
        let forms: Vec<Vec<Form<f64>>> = idx.iter().map(|&i| self.one_forms(i)).collect();
        let mut top = 0.0;
        for (abcd, c) in self.structure.psi().terms() {
            if *c == 0.0 {
                continue;
            }
            let w = (1..4)
                .try_fold(forms[0][abcd[0]].clone(), |acc, j| acc.wedge(&forms[j][abcd[j]]))
                .and_then(|f| f.wedge(self.structure.phi()));
            top += c * w.expect("degrees add to 7").get(&[0, 1, 2, 3, 4, 5, 6]);
        }
        top / self.structure.sqrt_det_g()
    }

    /// `𝒬_κμνρ` in the wedge form, with the `(ψhhhhψ)` term replaced by
    /// the wedge integral and `(1/81)(5 Tr Tr − 6 Tr(h⁴))` for the traces.
    pub fn q_wedge(&self, a: &ModTensor, idx: [usize; 4]) -> Result<f64> {
        let g = |i: usize, j: usize| self.metric.get(&[i, j]);
        let [k, m, n, r] = idx;
        Ok((g(m, n) * g(k, r) + g(m, k) * g(n, r) - 5.0 / 7.0 * g(m, r) * g(k, n)) / 3.0
            - self.greek_a_dot_a(a, idx)?
            + self.psi_quad_wedge(idx)
            + (5.0 * self.trace_pairs(idx) - 6.0 * self.trace4_sym(idx)) / 81.0)
    }

    /// `∂⁴K` from the closed-form table.
    pub fn k4(&self, yukawa: &ModTensor) -> ModTensor {
        let n = self.dim();
        let a = self.a;
        let g = &self.metric;
        let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
        let mut out = ModTensor::zeros(n, 4);
        for idx in (0..out.data.len()).map(|k| out.unflatten(k)).collect::<Vec<_>>() {
            let mut d = idx.clone();
            d.sort_unstable();
            let v = *cache.entry(d.clone()).or_insert_with(|| match d.iter().take_while(|&&x| x == 0).count() {
                4 => 42.0 * a.powi(4),
                3 => 0.0,
                2 => 6.0 * a * a * g.get(&[d[2], d[3]]),
                1 => -3.0 * a * yukawa.get(&[d[1], d[2], d[3]]),
                _ => self.k4_greek([d[0], d[1], d[2], d[3]]),
            });
            out.set(&idx, v);
        }
        out
    }

    pub fn curvature(&self) -> Result<Curvature> {
        self.curvature_with(&self.yukawa()?)
    }

    fn curvature_with(&self, y: &Yukawa) -> Result<Curvature> {
        let k4 = self.k4(&y.a);
        let aa = a_dot_a(&self.metric, &y.a)?;
        let q = k4.sub(&aa);
        let riemann = riemann_from_yukawa(&self.metric, &y.a)?;
        let riemann_from_q = riemann_from_hessian_curvature(&q);
        let (mut contraction, mut wedge) = (0.0f64, 0.0f64);
        for t in sorted_tuples(self.dim(), 4).into_iter().filter(|t| t[0] >= 1) {
            for p in permutations::<4>() {
                let idx = [t[p[0]], t[p[1]], t[p[2]], t[p[3]]];
                let want = q.get(&idx);
                contraction = contraction.max((self.q_contraction(&y.a, idx)? - want).abs());
                wedge = wedge.max((self.q_wedge(&y.a, idx)? - want).abs());
            }
        }
        let scale = q.max_abs().max(f64::MIN_POSITIVE);
        Ok(Curvature {
            k4,
            q,
            riemann,
            riemann_from_q,
            table_agreement: TableAgreement { contraction: contraction / scale, wedge: wedge / scale },
        })
    }
}

fn inverse(g: &ModTensor) -> Result<DMatrix<f64>> {
    g.to_matrix().try_inverse().ok_or(G2Error::Singular)
}

/// `(A·A)_KLMN = A_KMR G^{RS} A_SLN`.
pub fn a_dot_a(g: &ModTensor, a: &ModTensor) -> Result<ModTensor> {
    let inv = inverse(g)?;
    let n = g.dim();
    Ok(ModTensor::from_fn(n, 4, |i| {
        let mut acc = 0.0;
        for r in 0..n {
            for s in 0..n {
                acc += a.get(&[i[0], i[2], r]) * inv[(r, s)] * a.get(&[s, i[1], i[3]]);
            }
        }
        acc
    }))
}

/// `ℛ_MNPQ = G_MS ℛ^S_NPQ` with `ℛ^M_NPQ = ¼(A^M_QR A^R_NP − A^M_PR A^R_NQ)`.
pub fn riemann_from_yukawa(g: &ModTensor, a: &ModTensor) -> Result<ModTensor> {
    let inv = inverse(g)?;
    let n = g.dim();
    // A_MQR G^{RS} A_SNP, lowered throughout
    let contract = |m: usize, q: usize, nn: usize, p: usize| {
        let mut acc = 0.0;
        for r in 0..n {
            for s in 0..n {
                acc += a.get(&[m, q, r]) * inv[(r, s)] * a.get(&[s, nn, p]);
            }
        }
        acc
    };
    Ok(ModTensor::from_fn(n, 4, |i| {
        let [m, nn, p, q] = [i[0], i[1], i[2], i[3]];
        0.25 * (contract(m, q, nn, p) - contract(m, p, nn, q))
    }))
}

/// `ℛ_MNPQ = ¼(𝒬_MNPQ − 𝒬_NMPQ)`.
pub fn riemann_from_hessian_curvature(q: &ModTensor) -> ModTensor {
    ModTensor::from_fn(q.dim(), 4, |i| 0.25 * (q.get(i) - q.get(&[i[1], i[0], i[2], i[3]])))
}

/// Yukawa coupling from the table with both `Λ³₂₇` formulas.
#[derive(Debug, Clone, Serialize)]
pub struct Yukawa {
    /// Full `A_MNP`.
    pub a: ModTensor,
    /// `A_μνρ` by the `φhhhφ` contraction (zero where an index is 0).
    pub contraction: ModTensor,
    /// `A_μνρ` by the wedge formula.
    pub wedge: ModTensor,
    /// Relative max-norm difference of the two.
    pub agreement: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Curvature {
    /// `∂⁴K` from the table.
    pub k4: ModTensor,
    /// `𝒬_KLMN = ∂⁴K − A_KMR A^R_LN`.
    pub q: ModTensor,
    pub riemann: ModTensor,
    pub riemann_from_q: ModTensor,
    /// Relative deviation of the two printed `𝒬_κμνρ` forms from `q`.
    pub table_agreement: TableAgreement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableAgreement {
    pub contraction: f64,
    pub wedge: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModuliReport {
    pub coords: Vec<f64>,
    pub volume: f64,
    pub potential: f64,
    pub metric: ModTensor,
    pub metric_signature: Signature,
    pub volume_hessian: ModTensor,
    pub volume_hessian_signature: Signature,
    /// Present at special points only.
    pub yukawa: Option<Yukawa>,
    pub curvature: Option<Curvature>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_modulus_values() {
        let chart = ModuliChart::new(vec![phi0()]).unwrap();
        let s = [1.0];
        assert!((chart.volume(&s).unwrap() - 1.0).abs() < 1e-14);
        assert!((chart.metric(&s).unwrap().get(&[0, 0]) - 7.0).abs() < 1e-13);
        let y = chart.yukawa(&s).unwrap();
        assert!((y.a.get(&[0, 0, 0]) + 14.0).abs() < 1e-12);
        let c = chart.hessian_curvature(&s).unwrap();
        assert!((c.q.get(&[0, 0, 0, 0]) - 14.0).abs() < 1e-11);
        let (_, sig) = chart.volume_hessian(&s).unwrap();
        assert_eq!(sig, Signature { positive: 1, negative: 0, zero: 0 });
    }

    #[test]
    fn volume_scales_with_seven_thirds() {
        let chart = ModuliChart::new(vec![phi0()]).unwrap();
        let v = chart.volume(&[2.0]).unwrap();
        assert!((v - 2f64.powf(7.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn membership_is_enforced() {
        let basis = vec![phi0(), Form::unit(&[0, 1, 2])];
        assert!(matches!(ModuliChart::new(basis), Err(G2Error::InvalidChart(_))));
    }

    #[test]
    fn series_matches_tables() {
        let chart = ModuliChart::seeded(2, 3, 0.4).unwrap();
        let s = [1.3, 0.0, 0.0];
        let sp = chart.special_point(&s).unwrap();
        for dirs in [vec![0, 0], vec![0, 1], vec![1, 2], vec![0, 0, 2], vec![0, 1, 2], vec![1, 1, 2], vec![1, 2, 2]] {
            let t = sp.psi_derivative(&dirs).unwrap();
            let e = chart.psi_derivative_series(&s, &dirs).unwrap();
            let err = (&t - &e).max_abs() / e.max_abs();
            assert!(err < 1e-10, "{dirs:?}: {err}");
        }
        let y = sp.yukawa().unwrap();
        let a = chart.potential_derivatives(&s, 3).unwrap();
        assert!(y.a.relative_error(&a, 1e-300) < 1e-10);
        assert!(y.agreement < 1e-12, "{}", y.agreement);
        let c = sp.curvature().unwrap();
        let k4 = chart.potential_derivatives(&s, 4).unwrap();
        assert!(c.k4.relative_error(&k4, 1e-300) < 1e-9, "{}", c.k4.relative_error(&k4, 1e-300));
        assert!(c.riemann.max_abs_diff(&c.riemann_from_q) < 1e-12);
        assert!(c.table_agreement.contraction < 1e-12, "{:?}", c.table_agreement);
        assert!(c.table_agreement.wedge < 1e-12, "{:?}", c.table_agreement);
    }
}
