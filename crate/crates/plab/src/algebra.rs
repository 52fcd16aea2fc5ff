//! Lie algebras given by structure constants.
//!
//! Sign conventions used throughout the crate:
//!
//! * `[e_i, e_j] = sum_k c[k][i][j] e_k` and `ad_x y = [x, y]`.
//! * The Lie-Poisson tensor is `Pi^{ij}(xi) = xi([e_i, e_j])`.
//! * The coadjoint exponential is `coad_exp(x, xi) = xi o e^{ad_x}`, i.e. the
//!   vector `(e^{ad_x})^T xi`, and `Xi_x = (e^{ad_x} - 1) / ad_x`.
//!
//! Texts that build the bracket from right-invariant vector fields write
//! `ad_x = -[x, .]`; with that reading their `e^{-ad_x^*}` and
//! `(e^{-ad} - 1)/(-ad)` are exactly the operators above.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector, RANK_RTOL};

/// Tolerance for structure-constant antisymmetry.
pub const ANTISYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra {
    n: usize,
    // c[(k * n + i) * n + j]
    c: Vec<f64>,
    labels: Vec<String>,
}

/// Output of [`LieAlgebra::jacobiator`].
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobiator {
    pub n: usize,
    /// `J[l][i][j][k]` flattened row-major.
    pub tensor: Vec<f64>,
    pub max_abs: f64,
}

impl Jacobiator {
    pub fn get(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let n = self.n;
        self.tensor[((l * n + i) * n + j) * n + k]
    }
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("e{i}")).collect()
}

impl LieAlgebra {
    /// Builds an algebra from the `i < j` brackets `[e_i, e_j] += value e_k`;
    /// the `j < i` half is filled in by antisymmetry.
    pub fn from_brackets(n: usize, brackets: &[(usize, usize, usize, f64)], labels: Option<Vec<String>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("algebra dimension must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        let mut c = vec![0.0; n * n * n];
        for &(i, j, k, v) in brackets {
            if i >= n || j >= n || k >= n {
                return Err(Error::Invalid(format!("bracket index ({i},{j},{k}) out of range for dim {n}")));
            }
            if i >= j {
                return Err(Error::Invalid(format!("bracket entry ({i},{j},{k}) must have i < j")));
            }
            if !v.is_finite() {
                return Err(Error::Invalid(format!("bracket entry ({i},{j},{k}) is not finite")));
            }
            if !seen.insert((i, j, k)) {
                return Err(Error::Invalid(format!("duplicate bracket entry ({i},{j},{k})")));
            }
            c[(k * n + i) * n + j] = v;
            c[(k * n + j) * n + i] = -v;
        }
        let labels = labels.unwrap_or_else(|| default_labels(n));
        if labels.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
        }
        Ok(Self { n, c, labels })
    }

    /// Wraps a full `c[k][i][j]` table without validating it; use
    /// [`LieAlgebra::jacobiator`] or [`LieAlgebra::antisymmetry_defect`] to check.
    pub fn from_table(n: usize, c: Vec<f64>) -> Result<Self> {
        if c.len() != n * n * n {
            return Err(Error::DimensionMismatch { expected: n * n * n, got: c.len() });
        }
        Ok(Self { n, c, labels: default_labels(n) })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn c(&self, k: usize, i: usize, j: usize) -> f64 {
        self.c[(k * self.n + i) * self.n + j]
    }

    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut d = 0.0_f64;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    d = d.max((self.c(k, i, j) + self.c(k, j, i)).abs());
                }
            }
        }
        d
    }

    /// `J[l][i][j][k]`: the `e_l` component of
    /// `[[e_i,e_j],e_k] + [[e_j,e_k],e_i] + [[e_k,e_i],e_j]`.
    pub fn jacobiator(&self) -> Result<Jacobiator> {
        let defect = self.antisymmetry_defect();
        if defect > ANTISYMMETRY_TOL {
            return Err(Error::AntisymmetryViolation { defect });
        }
        let n = self.n;
        let mut tensor = vec![0.0; n * n * n * n];
        let mut max_abs = 0.0_f64;
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut s = 0.0;
                        for m in 0..n {
                            s += self.c(m, i, j) * self.c(l, m, k) + self.c(m, j, k) * self.c(l, m, i) + self.c(m, k, i) * self.c(l, m, j);
                        }
                        tensor[((l * n + i) * n + j) * n + k] = s;
                        max_abs = max_abs.max(s.abs());
                    }
                }
            }
        }
        Ok(Jacobiator { n, tensor, max_abs })
    }

    fn check_len(&self, v: &Vector) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: v.len() });
        }
        Ok(())
    }

    pub fn bracket(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        Ok(self.ad_matrix(x)? * y)
    }

    /// `M[k][j] = sum_i c[k][i][j] x_i`, so that `M y = [x, y]`.
    pub fn ad_matrix(&self, x: &Vector) -> Result<Mat> {
        self.check_len(x)?;
        let n = self.n;
        let mut m = Mat::zeros(n, n);
        for k in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    s += self.c(k, i, j) * x[i];
                }
                m[(k, j)] = s;
            }
        }
        Ok(m)
    }

    /// Matrix of the Lie-Poisson bivector at `xi`: `Pi[i][j] = sum_k c[k][i][j] xi_k`.
    pub fn poisson_matrix(&self, xi: &Vector) -> Result<Mat> {
        self.check_len(xi)?;
        let n = self.n;
        let mut p = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.c(k, i, j) * xi[k];
                }
                p[(i, j)] = s;
            }
        }
        Ok(p)
    }

    pub fn exp_ad(&self, x: &Vector) -> Result<Mat> {
        linalg::expm(&self.ad_matrix(x)?)
    }

    /// `xi o e^{ad_x}` as a coordinate vector.
    pub fn coad_exp(&self, x: &Vector, xi: &Vector) -> Result<Vector> {
        self.check_len(xi)?;
        Ok(self.exp_ad(x)?.transpose() * xi)
    }

    /// `Xi_x = sum_k ad_x^k / (k+1)!`.
    pub fn xi_operator(&self, x: &Vector) -> Result<Mat> {
        linalg::phi1(&self.ad_matrix(x)?)
    }

    pub fn direct_sum(&self, other: &LieAlgebra) -> LieAlgebra {
        let (a, b) = (self.n, other.n);
        let n = a + b;
        let mut c = vec![0.0; n * n * n];
        for k in 0..a {
            for i in 0..a {
                for j in 0..a {
                    c[(k * n + i) * n + j] = self.c(k, i, j);
                }
            }
        }
        for k in 0..b {
            for i in 0..b {
                for j in 0..b {
                    c[((k + a) * n + i + a) * n + j + a] = other.c(k, i, j);
                }
            }
        }
        let labels = self.labels.iter().cloned().chain(other.labels.iter().map(|l| format!("{l}'"))).collect();
        LieAlgebra { n, c, labels }
    }

    /// Structure constants of the subalgebra spanned by the columns of `basis`,
    /// written in that basis. Fails if the span is not bracket-closed.
    pub fn subalgebra(&self, basis: &Mat, tol: f64) -> Result<LieAlgebra> {
        if basis.nrows() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: basis.nrows() });
        }
        let m = basis.ncols();
        if m == 0 || linalg::rank(basis, RANK_RTOL) < m {
            return Err(Error::Invalid("subalgebra basis must be non-empty and independent".into()));
        }
        let mut c = vec![0.0; m * m * m];
        let mut worst = 0.0_f64;
        for i in 0..m {
            for j in 0..m {
                let br = self.bracket(&basis.column(i).into_owned(), &basis.column(j).into_owned())?;
                let (coef, resid) = linalg::lstsq_vec(basis, &br)?;
                worst = worst.max(resid);
                for k in 0..m {
                    c[(k * m + i) * m + j] = coef[k];
                }
            }
        }
        if worst > tol * (1.0 + linalg::max_abs(basis).powi(2)) {
            return Err(Error::NotSubalgebra { residual: worst });
        }
        // Least squares leaves roundoff-level asymmetry; symmetrize it away.
        for k in 0..m {
            for i in 0..m {
                for j in (i + 1)..m {
                    let v = 0.5 * (c[(k * m + i) * m + j] - c[(k * m + j) * m + i]);
                    c[(k * m + i) * m + j] = v;
                    c[(k * m + j) * m + i] = -v;
                }
                c[(k * m + i) * m + i] = 0.0;
            }
        }
        Ok(LieAlgebra { n: m, c, labels: default_labels(m) })
    }

    pub fn so3() -> Self {
        Self::from_brackets(3, &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (0, 2, 1, -1.0)], Some(vec!["e1".into(), "e2".into(), "e3".into()]))
            .unwrap()
    }

    /// Basis `(h, e, f)` with `[h,e] = 2e`, `[h,f] = -2f`, `[e,f] = h`.
    pub fn sl2() -> Self {
        Self::from_brackets(3, &[(0, 1, 1, 2.0), (0, 2, 2, -2.0), (1, 2, 0, 1.0)], Some(vec!["h".into(), "e".into(), "f".into()])).unwrap()
    }

    /// `[e1, e2] = e2`.
    pub fn aff1() -> Self {
        Self::from_brackets(2, &[(0, 1, 1, 1.0)], Some(vec!["e1".into(), "e2".into()])).unwrap()
    }

    pub fn aff1_x_aff1() -> Self {
        Self::aff1().direct_sum(&Self::aff1())
    }

    /// `[x, y] = z`.
    pub fn heisenberg3() -> Self {
        Self::from_brackets(3, &[(0, 1, 2, 1.0)], Some(vec!["x".into(), "y".into(), "z".into()])).unwrap()
    }

    pub fn abelian(n: usize) -> Self {
        Self::from_brackets(n, &[], None).unwrap()
    }

    /// Upper-triangular traceless 2x2 matrices, basis `(h, e)` with `[h,e] = 2e`.
    pub fn borel() -> Self {
        Self::from_brackets(2, &[(0, 1, 1, 2.0)], Some(vec!["h".into(), "e".into()])).unwrap()
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "so3" => Some(Self::so3()),
            "sl2" => Some(Self::sl2()),
            "aff1" => Some(Self::aff1()),
            "aff1_x_aff1" => Some(Self::aff1_x_aff1()),
            "heisenberg3" => Some(Self::heisenberg3()),
            "borel" => Some(Self::borel()),
            _ => name.strip_prefix("abelian").and_then(|d| d.parse().ok()).filter(|&d: &usize| d > 0).map(Self::abelian),
        }
    }
}

/// `max |f[e_i,e_j] - [f e_i, f e_j]|` for `f: g -> h` given as a `dim h x dim g` matrix.
pub fn is_morphism(g: &LieAlgebra, h: &LieAlgebra, f: &Mat) -> Result<f64> {
    if f.ncols() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: f.ncols() });
    }
    if f.nrows() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: f.nrows() });
    }
    let n = g.dim();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let ei = Vector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 });
            let ej = Vector::from_fn(n, |r, _| if r == j { 1.0 } else { 0.0 });
            let lhs = f * g.bracket(&ei, &ej)?;
            let rhs = h.bracket(&(f * &ei), &(f * &ej))?;
            worst = worst.max(linalg::max_abs_vec(&(lhs - rhs)));
        }
    }
    Ok(worst)
}

/// A linear subspace of a coordinate space, stored with an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSubspace {
    ambient: usize,
    basis: Mat,
}

impl LinearSubspace {
    /// Columns must be linearly independent.
    pub fn new(basis: &Mat) -> Result<Self> {
        let q = linalg::orth(basis, RANK_RTOL);
        if q.ncols() != basis.ncols() {
            return Err(Error::Invalid(format!("subspace basis has rank {} but {} columns", q.ncols(), basis.ncols())));
        }
        Ok(Self { ambient: basis.nrows(), basis: q })
    }

    pub fn zero(ambient: usize) -> Self {
        Self { ambient, basis: Mat::zeros(ambient, 0) }
    }

    pub fn full(ambient: usize) -> Self {
        Self { ambient, basis: Mat::identity(ambient, ambient) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthonormal basis columns.
    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    /// `{alpha : alpha(v) = 0 for v in S}` in dual coordinates.
    pub fn annihilator(&self) -> LinearSubspace {
        if self.dim() == 0 {
            return Self::full(self.ambient);
        }
        let k = linalg::kernel(&self.basis.transpose(), RANK_RTOL);
        LinearSubspace { ambient: self.ambient, basis: k }
    }

    pub fn same_span(&self, other: &LinearSubspace, tol: f64) -> bool {
        self.ambient == other.ambient && linalg::span_distance(&self.basis, &other.basis, RANK_RTOL) <= tol
    }

    pub fn contains(&self, v: &Vector, tol: f64) -> bool {
        let r = if self.dim() == 0 { v.clone() } else { v - &self.basis * (self.basis.transpose() * v) };
        linalg::max_abs_vec(&r) <= tol * (1.0 + linalg::max_abs_vec(v))
    }
}
