//! Polynomials in z and z̄ with complex coefficients, used as exact oracles
//! for chart derivatives.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

type Exponents = (Vec<u32>, Vec<u32>);

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    n: usize,
    terms: BTreeMap<Exponents, Complex64>,
}

/// Serializable term: coefficient (re, im) times z^z_exp z̄^zbar_exp.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub z: Vec<u32>,
    pub zbar: Vec<u32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl Poly {
    pub fn zero(n: usize) -> Self {
        Poly { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: Complex64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(vec![0; n], vec![0; n], c);
        p
    }

    /// z^α (holomorphic coordinate).
    pub fn coordinate(n: usize, alpha: usize) -> Self {
        let mut e = vec![0; n];
        e[alpha] = 1;
        let mut p = Self::zero(n);
        p.add_term(e, vec![0; n], Complex64::new(1.0, 0.0));
        p
    }

    /// |z|² = Σ z^α z̄^α.
    pub fn norm_squared(n: usize) -> Self {
        let mut p = Self::zero(n);
        for a in 0..n {
            let mut e = vec![0; n];
            e[a] = 1;
            p.add_term(e.clone(), e, Complex64::new(1.0, 0.0));
        }
        p
    }

    pub fn from_terms(n: usize, terms: &[PolyTerm]) -> Result<Self> {
        let mut p = Self::zero(n);
        for t in terms {
            if t.z.len() != n || t.zbar.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: t.z.len().max(t.zbar.len()) });
            }
            p.add_term(t.z.clone(), t.zbar.clone(), Complex64::new(t.re, t.im));
        }
        Ok(p)
    }

    pub fn to_terms(&self) -> Vec<PolyTerm> {
        self.terms.iter().map(|((z, zb), c)| PolyTerm { z: z.clone(), zbar: zb.clone(), re: c.re, im: c.im }).collect()
    }

    /// Seeded real polynomial Re(Σ c z^a z̄^b) of total degree ≤ `degree`,
    /// with coefficients of size ≤ `scale`.
    pub fn random_real(n: usize, degree: u32, terms: usize, scale: f64, seed: u64, label: &str) -> Self {
        let mut r = rng::stream(seed, rng::label_id(label));
        let mut p = Self::zero(n);
        for _ in 0..terms {
            let mut z = vec![0u32; n];
            let mut zb = vec![0u32; n];
            let deg = 1 + (rng::uniform(&mut r, 0.0, degree as f64) as u32).min(degree - 1);
            for _ in 0..deg {
                let slot = (rng::uniform(&mut r, 0.0, 2.0 * n as f64) as usize).min(2 * n - 1);
                if slot < n {
                    z[slot] += 1;
                } else {
                    zb[slot - n] += 1;
                }
            }
            let c = Complex64::new(rng::uniform(&mut r, -scale, scale), rng::uniform(&mut r, -scale, scale));
            p.add_term(z, zb, c);
        }
        p.real_part()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn add_term(&mut self, z: Vec<u32>, zbar: Vec<u32>, c: Complex64) {
        let key = (z, zbar);
        let v = self.terms.get(&key).copied().unwrap_or_default() + c;
        if v.norm() == 0.0 {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, v);
        }
    }

    /// Complex conjugate: swaps the z and z̄ exponents.
    pub fn conj(&self) -> Self {
        Poly { n: self.n, terms: self.terms.iter().map(|((z, zb), c)| ((zb.clone(), z.clone()), c.conj())).collect() }
    }

    pub fn real_part(&self) -> Self {
        (self + &self.conj()).scaled(Complex64::new(0.5, 0.0))
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Poly { n: self.n, terms: self.terms.iter().map(|(k, c)| (k.clone(), c * s)).collect() }
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|((ez, eb), c)| {
                let mut v = *c;
                for a in 0..self.n {
                    v *= z[a].powu(ez[a]) * z[a].conj().powu(eb[a]);
                }
                v
            })
            .sum()
    }

    /// ∂/∂z^α.
    pub fn dz(&self, alpha: usize) -> Self {
        let mut p = Self::zero(self.n);
        for ((ez, eb), c) in &self.terms {
            if ez[alpha] > 0 {
                let mut e = ez.clone();
                e[alpha] -= 1;
                p.add_term(e, eb.clone(), c * ez[alpha] as f64);
            }
        }
        p
    }

    /// ∂/∂z̄^α.
    pub fn dzbar(&self, alpha: usize) -> Self {
        let mut p = Self::zero(self.n);
        for ((ez, eb), c) in &self.terms {
            if eb[alpha] > 0 {
                let mut e = eb.clone();
                e[alpha] -= 1;
                p.add_term(ez.clone(), e, c * eb[alpha] as f64);
            }
        }
        p
    }

    /// Sum of coefficient moduli, a bound for |p| on the closed unit polydisc.
    pub fn coefficient_bound(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut p = Self::zero(self.n);
        for ((az, ab), ac) in &self.terms {
            for ((bz, bb), bc) in &other.terms {
                let z = az.iter().zip(bz).map(|(x, y)| x + y).collect();
                let zb = ab.iter().zip(bb).map(|(x, y)| x + y).collect();
                p.add_term(z, zb, ac * bc);
            }
        }
        p
    }
}

impl std::ops::Add for &Poly {
    type Output = Poly;
    fn add(self, other: &Poly) -> Poly {
        let mut p = self.clone();
        for (k, c) in &other.terms {
            p.add_term(k.0.clone(), k.1.clone(), *c);
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let p = Poly::random_real(2, 4, 6, 1.0, 5, "poly");
        let z = [Complex64::new(0.3, -0.2), Complex64::new(-0.1, 0.4)];
        let h = 1e-5;
        for a in 0..2 {
            let shift = |d: Complex64| {
                let mut w = z;
                w[a] += d;
                p.eval(&w)
            };
            let dx = (shift(Complex64::new(h, 0.0)) - shift(Complex64::new(-h, 0.0))) / (2.0 * h);
            let dy = (shift(Complex64::new(0.0, h)) - shift(Complex64::new(0.0, -h))) / (2.0 * h);
            let i = Complex64::i();
            assert!(((dx - i * dy) * 0.5 - p.dz(a).eval(&z)).norm() < 1e-9);
            assert!(((dx + i * dy) * 0.5 - p.dzbar(a).eval(&z)).norm() < 1e-9);
        }
    }

    #[test]
    fn real_polynomials_are_real() {
        let p = Poly::random_real(3, 3, 8, 1.0, 1, "real");
        let z = [Complex64::new(0.2, 0.7), Complex64::new(-0.5, 0.1), Complex64::new(0.0, -0.3)];
        assert!(p.eval(&z).im.abs() < 1e-15);
        assert_eq!(p.conj(), p);
    }

    #[test]
    fn term_round_trip() {
        let p = Poly::random_real(2, 3, 4, 1.0, 2, "rt");
        assert_eq!(Poly::from_terms(2, &p.to_terms()).unwrap(), p);
    }
}
