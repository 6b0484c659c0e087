//! Finite-difference oracles shared by the integration tests. They only use
//! pointwise evaluations of the chart, so they are independent of the
//! closed-form tables they check.
#![allow(dead_code)]

use g2_core::moduli::{ModTensor, ModuliChart};
use g2_core::Result;

/// Offsets and weights of the fourth-order central first derivative.
const STENCIL: [(f64, f64); 4] = [(-2.0, 1.0 / 12.0), (-1.0, -2.0 / 3.0), (1.0, 2.0 / 3.0), (2.0, -1.0 / 12.0)];

/// `∂_{dirs} f(s)` by nesting the fourth-order stencil once per direction.
pub fn nested_fd(f: &dyn Fn(&[f64]) -> Vec<f64>, s: &[f64], dirs: &[usize], h: f64) -> Vec<f64> {
    let Some((&d, rest)) = dirs.split_first() else {
        return f(s);
    };
    let mut acc: Option<Vec<f64>> = None;
    for (k, w) in STENCIL {
        let mut p = s.to_vec();
        p[d] += k * h;
        let v = nested_fd(f, &p, rest, h);
        let c = w / h;
        acc = Some(match acc {
            None => v.iter().map(|x| c * x).collect(),
            Some(a) => a.iter().zip(&v).map(|(a, x)| a + c * x).collect(),
        });
    }
    acc.expect("stencil is nonempty")
}

/// Nested differences at `h` and `h/2` combined to cancel the `h⁴` term.
pub fn richardson_fd(f: &dyn Fn(&[f64]) -> Vec<f64>, s: &[f64], dirs: &[usize], h: f64) -> Vec<f64> {
    let coarse = nested_fd(f, s, dirs, h);
    let fine = nested_fd(f, s, dirs, h / 2.0);
    fine.iter().zip(&coarse).map(|(f, c)| (16.0 * f - c) / 15.0).collect()
}

/// Nondecreasing index tuples of the given length.
pub fn sorted_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(n, k, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, k, 0, &mut Vec::new(), &mut out);
    out
}

pub fn potential_fn(chart: &ModuliChart) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
    move |s| vec![chart.potential(s).expect("positive along the stencil")]
}

pub fn psi_fn(chart: &ModuliChart) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
    move |s| chart.structure_at(s).expect("positive along the stencil").psi().components().to_vec()
}

/// The fully symmetric `∂^k K` with one difference per sorted tuple.
pub fn potential_fd(chart: &ModuliChart, s: &[f64], k: usize, h: f64, richardson: bool) -> ModTensor {
    let n = chart.dim();
    let f = potential_fn(chart);
    let mut values = std::collections::HashMap::new();
    for t in sorted_tuples(n, k) {
        let v = if richardson { richardson_fd(&f, s, &t, h) } else { nested_fd(&f, s, &t, h) };
        values.insert(t, v[0]);
    }
    ModTensor::from_fn(n, k, |idx| {
        let mut key = idx.to_vec();
        key.sort_unstable();
        values[&key]
    })
}

/// Relative max-norm error of `got` against `want`.
pub fn relative(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    got.iter().zip(want).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

fn inverse(g: &ModTensor) -> Vec<Vec<f64>> {
    let m = g.to_matrix().try_inverse().expect("metric is invertible");
    (0..g.dim()).map(|i| (0..g.dim()).map(|j| m[(i, j)]).collect()).collect()
}

/// `Γ^a_bc` of the chart metric, from differences of `G`.
pub fn christoffel_fd(chart: &ModuliChart, s: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = chart.dim();
    let metric = |p: &[f64]| chart.metric(p).expect("positive along the stencil").data().to_vec();
    let dg: Vec<Vec<f64>> = (0..n).map(|c| nested_fd(&metric, s, &[c], h)).collect();
    let inv = inverse(&chart.metric(s)?);
    let at = |c: usize, i: usize, j: usize| dg[c][i * n + j];
    let mut out = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                out[(a * n + b) * n + c] =
                    0.5 * (0..n).map(|d| inv[a][d] * (at(b, d, c) + at(c, d, b) - at(d, b, c))).sum::<f64>();
            }
        }
    }
    Ok(out)
}

/// `R_abcd = G_ae R^e_bcd` with `R^a_bcd = ∂_c Γ^a_db − ∂_d Γ^a_cb + Γ^a_ce Γ^e_db − Γ^a_de Γ^e_cb`.
pub fn riemann_fd(chart: &ModuliChart, s: &[f64], h_outer: f64, h_inner: f64) -> Result<ModTensor> {
    let n = chart.dim();
    let gamma_fn = |p: &[f64]| christoffel_fd(chart, p, h_inner).expect("positive along the stencil");
    let gamma = gamma_fn(s);
    let dgamma: Vec<Vec<f64>> = (0..n).map(|c| nested_fd(&gamma_fn, s, &[c], h_outer)).collect();
    let g = chart.metric(s)?;
    let ix = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
    let up = |a: usize, b: usize, c: usize, d: usize| {
        let mut v = dgamma[c][ix(a, d, b)] - dgamma[d][ix(a, c, b)];
        for e in 0..n {
            v += gamma[ix(a, c, e)] * gamma[ix(e, d, b)] - gamma[ix(a, d, e)] * gamma[ix(e, c, b)];
        }
        v
    };
    Ok(ModTensor::from_fn(n, 4, |i| (0..n).map(|e| g.get(&[i[0], e]) * up(e, i[1], i[2], i[3])).sum()))
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}
