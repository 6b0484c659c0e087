use crate::error::{G2Error, Result};
use crate::scalar::Scalar;
use crate::tensor::index::{masks, permutations_of, position, wedge_sign, FULL};
use crate::tensor::{Form, Mat7, SymBilinear, Vec7, DIM};

/// `A = L D Lᵀ` without pivoting. Fails unless every pivot is positive, which
/// is exactly positive-definiteness (all leading principal minors positive).
pub(crate) fn ldl<S: Scalar>(a: &Mat7<S>) -> Result<(Mat7<S>, [S; DIM])> {
    let mut l = Mat7::<S>::identity();
    let mut d: [S; DIM] = std::array::from_fn(|_| S::zero());
    for j in 0..DIM {
        let mut dj = a[j][j].clone();
        for k in 0..j {
            dj = dj - l[j][k].clone() * l[j][k].clone() * d[k].clone();
        }
        if !dj.is_positive() {
            return Err(G2Error::NotPositiveDefinite);
        }
        for i in j + 1..DIM {
            let mut v = a[i][j].clone();
            for k in 0..j {
                v = v - l[i][k].clone() * l[j][k].clone() * d[k].clone();
            }
            l[i][j] = v / dj.clone();
        }
        d[j] = dj;
    }
    Ok((l, d))
}

/// Determinant of a positive-definite symmetric matrix.
pub fn positive_definite_det<S: Scalar>(a: &SymBilinear<S>) -> Result<S> {
    let (_, d) = ldl(a.mat())?;
    Ok(d.iter().fold(S::one(), |acc, x| acc * x.clone()))
}

fn ldl_inverse<S: Scalar>(l: &Mat7<S>, d: &[S; DIM]) -> Mat7<S> {
    let mut inv = Mat7::zero();
    for col in 0..DIM {
        let mut y: [S; DIM] = std::array::from_fn(|i| if i == col { S::one() } else { S::zero() });
        for i in 0..DIM {
            for k in 0..i {
                y[i] = y[i].clone() - l[i][k].clone() * y[k].clone();
            }
        }
        for i in 0..DIM {
            y[i] = y[i].clone() / d[i].clone();
        }
        for i in (0..DIM).rev() {
            for k in i + 1..DIM {
                y[i] = y[i].clone() - l[k][i].clone() * y[k].clone();
            }
        }
        for i in 0..DIM {
            inv[i][col] = y[i].clone();
        }
    }
    inv.sym_part().into_mat()
}

/// A positive-definite metric with its inverse and volume density.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric<S> {
    g: SymBilinear<S>,
    inv: Mat7<S>,
    sqrt_det: S,
    diagonal: bool,
}

impl<S: Scalar> Metric<S> {
    pub fn euclidean() -> Self {
        Metric { g: SymBilinear::identity(), inv: Mat7::identity(), sqrt_det: S::one(), diagonal: true }
    }

    /// Validates positivity; the square root of the determinant must exist in `S`.
    pub fn new(g: SymBilinear<S>) -> Result<Self> {
        let (l, d) = ldl(g.mat())?;
        let det = d.iter().fold(S::one(), |acc, x| acc * x.clone());
        let sqrt_det = det.sqrt().ok_or_else(|| G2Error::InexactRoot("√det g".into()))?;
        Ok(Self::assemble(g, &l, &d, sqrt_det))
    }

    /// As [`Metric::new`] with the volume density supplied by the caller.
    pub fn with_sqrt_det(g: SymBilinear<S>, sqrt_det: S) -> Result<Self> {
        let (l, d) = ldl(g.mat())?;
        Ok(Self::assemble(g, &l, &d, sqrt_det))
    }

    fn assemble(g: SymBilinear<S>, l: &Mat7<S>, d: &[S; DIM], sqrt_det: S) -> Self {
        let inv = ldl_inverse(l, d);
        let diagonal = (0..DIM).all(|a| (0..DIM).all(|b| a == b || g.get(a, b).is_zero()));
        Metric { g, inv, sqrt_det, diagonal }
    }

    pub fn g(&self) -> &SymBilinear<S> {
        &self.g
    }

    pub fn inv(&self) -> &Mat7<S> {
        &self.inv
    }

    pub fn sqrt_det(&self) -> &S {
        &self.sqrt_det
    }

    pub fn lower(&self, v: &Vec7<S>) -> Vec7<S> {
        self.g.mat().apply(v)
    }

    pub fn raise(&self, v: &Vec7<S>) -> Vec7<S> {
        self.inv.apply(v)
    }

    /// `g(u, v)` for vectors with upper indices.
    pub fn vec_inner(&self, u: &Vec7<S>, v: &Vec7<S>) -> S {
        u.dot(&self.lower(v))
    }

    /// `g^{ab} m_ab`.
    pub fn trace(&self, m: &Mat7<S>) -> S {
        let mut acc = S::zero();
        for a in 0..DIM {
            for b in 0..DIM {
                if !self.inv[a][b].is_zero() {
                    acc = acc + self.inv[a][b].clone() * m[a][b].clone();
                }
            }
        }
        acc
    }

    /// `m_a{}^b = m_ac g^{cb}`.
    pub fn mixed(&self, m: &Mat7<S>) -> Mat7<S> {
        m * &self.inv
    }

    /// `m^{ab} = g^{ac} m_cd g^{db}`.
    pub fn raise_both(&self, m: &Mat7<S>) -> Mat7<S> {
        &(&self.inv * m) * &self.inv
    }

    /// Traceless part `h − (1/7)(tr h) g`.
    pub fn traceless(&self, h: &SymBilinear<S>) -> SymBilinear<S> {
        let t = self.trace(h.mat()) * S::ratio(1, DIM as i64);
        h - &self.g.scale(&t)
    }

    /// `h_ab k^ab`.
    pub fn mat_inner(&self, h: &Mat7<S>, k: &Mat7<S>) -> S {
        let kr = self.raise_both(k);
        let mut acc = S::zero();
        for a in 0..DIM {
            for b in 0..DIM {
                acc = acc + h[a][b].clone() * kr[a][b].clone();
            }
        }
        acc
    }

    /// Entry `(I, K)` of the p-th compound of `g⁻¹`: `det g⁻¹[I, K]`.
    fn inv_minor(&self, rows: u8, cols: u8) -> S {
        let r: Vec<usize> = crate::tensor::index::indices(rows).collect();
        let c: Vec<usize> = crate::tensor::index::indices(cols).collect();
        let mut acc = S::zero();
        for (perm, sign) in permutations_of(r.len()) {
            let mut term = S::one();
            for (i, &pi) in perm.iter().enumerate() {
                let e = &self.inv[r[i]][c[pi as usize]];
                if e.is_zero() {
                    term = S::zero();
                    break;
                }
                term = term * e.clone();
            }
            if term.is_zero() {
                continue;
            }
            acc = if *sign > 0 { acc + term } else { acc - term };
        }
        acc
    }

    /// All indices raised, stored in the same canonical layout.
    pub fn raise_form(&self, a: &Form<S>) -> Form<S> {
        let p = a.degree();
        let comps: Vec<S> = masks(p)
            .iter()
            .map(|&rows| {
                if self.diagonal {
                    let mut d = S::one();
                    for i in crate::tensor::index::indices(rows) {
                        d = d * self.inv[i][i].clone();
                    }
                    return d * a.at_mask(rows).clone();
                }
                let mut acc = S::zero();
                for (&cols, v) in masks(p).iter().zip(a.components()) {
                    if v.is_zero() {
                        continue;
                    }
                    let m = self.inv_minor(rows, cols);
                    if !m.is_zero() {
                        acc = acc + m * v.clone();
                    }
                }
                acc
            })
            .collect();
        Form::from_components(p, comps).expect("same layout")
    }

    /// `⟨a, b⟩ = (1/p!) a_{i…} b^{i…}`.
    pub fn inner(&self, a: &Form<S>, b: &Form<S>) -> Result<S> {
        if a.degree() != b.degree() {
            return Err(G2Error::DegreeMismatch(a.degree(), b.degree()));
        }
        let br = self.raise_form(b);
        Ok(a.components()
            .iter()
            .zip(br.components())
            .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone()))
    }

    pub fn norm_sq(&self, a: &Form<S>) -> S {
        self.inner(a, a).expect("same degree")
    }

    /// Hodge star with orientation `e^{1…7}`, so `a ∧ ∗b = ⟨a, b⟩ vol`.
    pub fn hodge(&self, a: &Form<S>) -> Form<S> {
        let p = a.degree();
        let raised = self.raise_form(a);
        let mut out = Form::zero(DIM - p);
        let mut comps = out.components().to_vec();
        for (&m, v) in masks(p).iter().zip(raised.components()) {
            if v.is_zero() {
                continue;
            }
            let rest = FULL & !m;
            let t = self.sqrt_det.clone() * v.clone();
            comps[position(rest)] = if wedge_sign(m, rest) > 0 { t } else { -t };
        }
        out = Form::from_components(DIM - p, comps).expect("same layout");
        out
    }

    /// `√det g · e^{1…7}`.
    pub fn vol(&self) -> Form<S> {
        Form::unit(&[0, 1, 2, 3, 4, 5, 6]).scale(&self.sqrt_det)
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Metric<T> {
        Metric {
            g: self.g.map(&f),
            inv: self.inv.map(&f),
            sqrt_det: f(&self.sqrt_det),
            diagonal: self.diagonal,
        }
    }
}
