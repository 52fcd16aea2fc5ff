use crate::algebra::LieAlgebra;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector, RANK_RTOL};

/// Faithful matrix representation `rho: g -> gl(N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRep {
    algebra: LieAlgebra,
    size: usize,
    rho: Vec<Mat>,
    /// `N^2 x n`, column `i` is `vec(rho(e_i))`.
    flat: Mat,
}

pub const HOMOMORPHISM_TOL: f64 = 1e-12;

impl MatrixRep {
    pub fn new(algebra: LieAlgebra, rho: Vec<Mat>) -> Result<Self> {
        let n = algebra.dim();
        if rho.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: rho.len() });
        }
        let size = rho.first().map(|m| m.nrows()).unwrap_or(0);
        if size == 0 || rho.iter().any(|m| m.shape() != (size, size)) {
            return Err(Error::BadRepresentation("generators must be square matrices of one size".into()));
        }
        let mut flat = Mat::zeros(size * size, n);
        for (i, m) in rho.iter().enumerate() {
            flat.set_column(i, &Vector::from_column_slice(m.as_slice()));
        }
        if linalg::rank(&flat, RANK_RTOL) < n {
            return Err(Error::BadRepresentation("representation is not faithful".into()));
        }
        let rep = Self { algebra, size, rho, flat };
        let defect = rep.homomorphism_defect()?;
        let scale = rep.rho.iter().map(linalg::max_abs).fold(1.0, f64::max);
        if defect > HOMOMORPHISM_TOL * scale * scale {
            return Err(Error::BadRepresentation(format!("bracket not preserved (defect {defect:e})")));
        }
        Ok(rep)
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.algebra
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn generators(&self) -> &[Mat] {
        &self.rho
    }

    /// `max |rho([e_i,e_j]) - [rho(e_i), rho(e_j)]|`.
    pub fn homomorphism_defect(&self) -> Result<f64> {
        let n = self.algebra.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let mut br = Vector::zeros(n);
                for k in 0..n {
                    br[k] = self.algebra.c(k, i, j);
                }
                let lhs = self.represent(&br);
                let rhs = &self.rho[i] * &self.rho[j] - &self.rho[j] * &self.rho[i];
                worst = worst.max(linalg::max_abs(&(lhs - rhs)));
            }
        }
        Ok(worst)
    }

    pub fn represent(&self, x: &Vector) -> Mat {
        let mut m = Mat::zeros(self.size, self.size);
        for (i, r) in self.rho.iter().enumerate() {
            m += r * x[i];
        }
        m
    }

    pub fn exp(&self, x: &Vector) -> Result<Mat> {
        if x.len() != self.algebra.dim() {
            return Err(Error::DimensionMismatch { expected: self.algebra.dim(), got: x.len() });
        }
        linalg::expm(&self.represent(x))
    }

    /// `exp(rho(x_1)) ... exp(rho(x_r))`.
    pub fn word(&self, xs: &[Vector]) -> Result<Mat> {
        let mut g = Mat::identity(self.size, self.size);
        for x in xs {
            g *= self.exp(x)?;
        }
        Ok(g)
    }

    /// Solves `rho(x) = m`; fails when `m` is not in the image.
    pub fn algebra_element(&self, m: &Mat) -> Result<Vector> {
        let target = Vector::from_column_slice(m.as_slice());
        let (x, residual) = linalg::lstsq_vec(&self.flat, &target)?;
        if residual > 1e-9 * (1.0 + linalg::max_abs(m)) {
            return Err(Error::NotInAdjointImage { residual });
        }
        Ok(x)
    }

    /// `Ad_g` on `g`, from `rho(Ad_g x) = g rho(x) g^{-1}`.
    pub fn adjoint(&self, g: &Mat) -> Result<Mat> {
        let g_inv = linalg::inverse(g).ok_or_else(|| Error::Invalid("group element is singular".into()))?;
        let n = self.algebra.dim();
        let mut ad = Mat::zeros(n, n);
        for (i, r) in self.rho.iter().enumerate() {
            ad.set_column(i, &self.algebra_element(&(g * r * &g_inv))?);
        }
        Ok(ad)
    }

    pub fn direct_sum(&self, other: &MatrixRep) -> Result<MatrixRep> {
        let alg = self.algebra.direct_sum(&other.algebra);
        let z1 = Mat::zeros(other.size, other.size);
        let z0 = Mat::zeros(self.size, self.size);
        let rho =
            self.rho.iter().map(|r| linalg::block_diag(&[r, &z1])).chain(other.rho.iter().map(|r| linalg::block_diag(&[&z0, r]))).collect();
        MatrixRep::new(alg, rho)
    }

    /// `rho(e_i)_{jk} = -eps_{ijk}`.
    pub fn so3_defining() -> Self {
        let l = |i: usize| {
            let mut m = Mat::zeros(3, 3);
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            m[(j, k)] = -1.0;
            m[(k, j)] = 1.0;
            m
        };
        Self::new(LieAlgebra::so3(), vec![l(0), l(1), l(2)]).unwrap()
    }

    pub fn sl2_defining() -> Self {
        let h = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let e = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let f = Mat::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        Self::new(LieAlgebra::sl2(), vec![h, e, f]).unwrap()
    }

    pub fn borel_defining() -> Self {
        let h = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let e = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        Self::new(LieAlgebra::borel(), vec![h, e]).unwrap()
    }

    /// `x -> [[x1, x2], [0, 0]]`.
    pub fn aff1_defining() -> Self {
        let a = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let b = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        Self::new(LieAlgebra::aff1(), vec![a, b]).unwrap()
    }

    pub fn aff1_x_aff1_defining() -> Self {
        Self::aff1_defining().direct_sum(&Self::aff1_defining()).unwrap()
    }

    /// Strictly upper triangular 3x3 matrices.
    pub fn heisenberg3_defining() -> Self {
        let unit = |i: usize, j: usize| {
            let mut m = Mat::zeros(3, 3);
            m[(i, j)] = 1.0;
            m
        };
        Self::new(LieAlgebra::heisenberg3(), vec![unit(0, 1), unit(1, 2), unit(0, 2)]).unwrap()
    }

    /// Diagonal matrices; the group is `(R_{>0})^n ≅ R^n`.
    pub fn abelian_diagonal(n: usize) -> Self {
        let rho = (0..n)
            .map(|i| {
                let mut m = Mat::zeros(n, n);
                m[(i, i)] = 1.0;
                m
            })
            .collect();
        Self::new(LieAlgebra::abelian(n), rho).unwrap()
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "so3" => Some(Self::so3_defining()),
            "sl2" => Some(Self::sl2_defining()),
            "borel" => Some(Self::borel_defining()),
            "aff1" => Some(Self::aff1_defining()),
            "aff1_x_aff1" => Some(Self::aff1_x_aff1_defining()),
            "heisenberg3" => Some(Self::heisenberg3_defining()),
            _ => name.strip_prefix("abelian").and_then(|d| d.parse().ok()).filter(|&d: &usize| d > 0).map(Self::abelian_diagonal),
        }
    }
}

/// `xi o Ad_g`, i.e. `Ad_g^T xi`. For `g = exp(rho(x))` this is `coad_exp(x, xi)`.
pub fn coadjoint_action(rep: &MatrixRep, g: &Mat, xi: &Vector) -> Result<Vector> {
    Ok(rep.adjoint(g)?.transpose() * xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_reps_are_homomorphisms() {
        for name in ["so3", "sl2", "borel", "aff1", "aff1_x_aff1", "heisenberg3", "abelian3"] {
            let rep = MatrixRep::builtin(name).unwrap();
            assert!(rep.homomorphism_defect().unwrap() < 1e-15, "{name}");
        }
    }

    #[test]
    fn unfaithful_and_wrong_bracket_rejected() {
        let z = Mat::zeros(2, 2);
        assert!(MatrixRep::new(LieAlgebra::aff1(), vec![z.clone(), z]).is_err());
        let a = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let b = Mat::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(MatrixRep::new(LieAlgebra::aff1(), vec![a, b]), Err(Error::BadRepresentation(_))));
    }

    #[test]
    fn coadjoint_action_matches_coad_exp() {
        let rep = MatrixRep::so3_defining();
        let x = Vector::from_vec(vec![0.0, 0.0, 0.9]);
        let xi = Vector::from_vec(vec![0.4, -1.0, 0.3]);
        let g = rep.exp(&x).unwrap();
        let via_rep = coadjoint_action(&rep, &g, &xi).unwrap();
        let via_series = rep.algebra().coad_exp(&x, &xi).unwrap();
        assert!(linalg::max_abs_vec(&(via_rep - via_series)) < 1e-12);
        assert!(linalg::max_abs_vec(&(coadjoint_action(&rep, &Mat::identity(3, 3), &xi).unwrap() - &xi)) < 1e-15);
    }

    #[test]
    fn non_image_matrix_detected() {
        let rep = MatrixRep::aff1_defining();
        let m = Mat::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(rep.algebra_element(&m), Err(Error::NotInAdjointImage { .. })));
    }
}
