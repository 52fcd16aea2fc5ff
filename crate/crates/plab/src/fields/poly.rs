use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use crate::algebra::LieAlgebra;
use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};

use super::{BivectorField, Trivector};

/// Sparse real polynomial in `nvars` variables, keyed by exponent vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn variable(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, 1.0);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &f64)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, exps: Vec<u32>, coef: f64) {
        assert_eq!(exps.len(), self.nvars);
        match self.terms.entry(exps) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += coef;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                if coef != 0.0 {
                    v.insert(coef);
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn partial(&self, var: usize) -> Polynomial {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[var] > 0 {
                let mut d = e.clone();
                d[var] -= 1;
                out.add_term(d, c * e[var] as f64);
            }
        }
        out
    }

    pub fn eval(&self, p: &Vector) -> f64 {
        self.terms.iter().map(|(e, c)| c * e.iter().enumerate().map(|(i, &k)| p[i].powi(k as i32)).product::<f64>()).sum()
    }
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Bivector field with polynomial coefficients; only `i < j` is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyBivectorField {
    n: usize,
    comps: Vec<Polynomial>,
}

impl PolyBivectorField {
    pub fn zero(n: usize) -> Self {
        Self { n, comps: vec![Polynomial::zero(n); n * n.saturating_sub(1) / 2] }
    }

    pub fn set(&mut self, i: usize, j: usize, p: Polynomial) {
        assert!(i != j && p.nvars() == self.n);
        if i < j {
            let idx = pair_index(self.n, i, j);
            self.comps[idx] = p;
        } else {
            let idx = pair_index(self.n, j, i);
            self.comps[idx] = p.scale(-1.0);
        }
    }

    /// Component `pi^{ij}` with the antisymmetric completion.
    pub fn component(&self, i: usize, j: usize) -> Polynomial {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.comps[pair_index(self.n, i, j)].clone(),
            std::cmp::Ordering::Greater => self.comps[pair_index(self.n, j, i)].scale(-1.0),
            std::cmp::Ordering::Equal => Polynomial::zero(self.n),
        }
    }

    pub fn degree(&self) -> u32 {
        self.comps.iter().filter_map(|p| p.degree()).max().unwrap_or(0)
    }

    pub fn eval(&self, p: &Vector) -> Mat {
        let mut m = Mat::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let v = self.comps[pair_index(self.n, i, j)].eval(p);
                m[(i, j)] = v;
                m[(j, i)] = -v;
            }
        }
        m
    }
}

impl BivectorField for PolyBivectorField {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, p: &Vector) -> Result<Mat> {
        Ok(self.eval(p))
    }

    fn partials(&self, p: &Vector) -> Result<Vec<Mat>> {
        let n = self.n;
        Ok((0..n)
            .map(|l| {
                let mut m = Mat::zeros(n, n);
                for i in 0..n {
                    for j in (i + 1)..n {
                        let v = self.comps[pair_index(n, i, j)].partial(l).eval(p);
                        m[(i, j)] = v;
                        m[(j, i)] = -v;
                    }
                }
                m
            })
            .collect())
    }
}

/// The linear Poisson structure `pi^{ij}(xi) = sum_k c[k][i][j] xi_k`.
pub fn lie_poisson_field(alg: &LieAlgebra) -> PolyBivectorField {
    let n = alg.dim();
    let mut f = PolyBivectorField::zero(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut p = Polynomial::zero(n);
            for k in 0..n {
                let c = alg.c(k, i, j);
                if c != 0.0 {
                    p = p.add(&Polynomial::variable(n, k).scale(c));
                }
            }
            f.set(i, j, p);
        }
    }
    f
}

/// Trivector with polynomial components, stored for `i < j < k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTrivectorField {
    n: usize,
    comps: BTreeMap<(usize, usize, usize), Polynomial>,
}

impl PolyTrivectorField {
    pub fn component(&self, i: usize, j: usize, k: usize) -> &Polynomial {
        &self.comps[&(i, j, k)]
    }

    /// True when every coefficient cancelled exactly.
    pub fn is_zero(&self) -> bool {
        self.comps.values().all(Polynomial::is_zero)
    }

    /// Largest absolute coefficient over all components.
    pub fn max_coefficient(&self) -> f64 {
        self.comps.values().flat_map(|p| p.terms().map(|(_, c)| c.abs())).fold(0.0, f64::max)
    }

    pub fn eval(&self, p: &Vector) -> Trivector {
        let mut t = Trivector::zeros(self.n);
        for (&(i, j, k), poly) in &self.comps {
            t.set_antisymmetric(i, j, k, poly.eval(p));
        }
        t
    }
}

/// Schouten bracket computed symbolically, so cancellations are exact for
/// integer coefficients.
pub fn schouten_poly(pi: &PolyBivectorField, rho: &PolyBivectorField) -> Result<PolyTrivectorField> {
    if pi.n != rho.n {
        return Err(Error::MixedDimensions { left: pi.n, right: rho.n });
    }
    let n = pi.n;
    let term = |i: usize, j: usize, k: usize| -> Polynomial {
        let mut acc = Polynomial::zero(n);
        for l in 0..n {
            acc = acc.add(&pi.component(l, i).mul(&rho.component(j, k).partial(l)));
            acc = acc.add(&rho.component(l, i).mul(&pi.component(j, k).partial(l)));
        }
        acc
    };
    let mut comps = BTreeMap::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let s = term(i, j, k).add(&term(j, k, i)).add(&term(k, i, j));
                comps.insert((i, j, k), s);
            }
        }
    }
    Ok(PolyTrivectorField { n, comps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_arithmetic() {
        let x = Polynomial::variable(2, 0);
        let y = Polynomial::variable(2, 1);
        let p = x.mul(&x).add(&y.scale(3.0)); // x^2 + 3y
        assert_eq!(p.degree(), Some(2));
        assert_eq!(p.eval(&Vector::from_vec(vec![2.0, 1.0])), 7.0);
        assert_eq!(p.partial(0).eval(&Vector::from_vec(vec![2.0, 5.0])), 4.0);
        assert!(p.add(&p.scale(-1.0)).is_zero());
    }

    #[test]
    fn pair_index_is_dense() {
        let n = 5;
        let mut seen = vec![];
        for i in 0..n {
            for j in (i + 1)..n {
                seen.push(pair_index(n, i, j));
            }
        }
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn lie_poisson_of_so3() {
        let f = lie_poisson_field(&LieAlgebra::so3());
        let m = f.eval(&Vector::from_vec(vec![0.0, 0.0, 1.0]));
        assert_eq!(m[(0, 1)], 1.0);
        assert_eq!(m[(0, 2)], 0.0);
        assert_eq!(m[(1, 2)], 0.0);
        assert_eq!(f.degree(), 1);
        assert!(schouten_poly(&f, &f).unwrap().is_zero());
    }

    #[test]
    fn abelian_field_is_zero() {
        let f = lie_poisson_field(&LieAlgebra::abelian(3));
        assert_eq!(f.eval(&Vector::from_vec(vec![1.0, 2.0, 3.0])), Mat::zeros(3, 3));
    }
}
