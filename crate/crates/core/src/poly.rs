//! Dense real polynomials in coefficient form (index j holds the x^j coefficient).

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Default for Polynomial {
    fn default() -> Self {
        Self::constant(0.0)
    }
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn constant(v: f64) -> Self {
        Self::new(vec![v])
    }

    /// `x`
    pub fn identity() -> Self {
        Self::new(vec![0.0, 1.0])
    }

    /// `(a + b x)^m`
    pub fn affine_power(a: f64, b: f64, m: usize) -> Self {
        let base = Self::new(vec![a, b]);
        (0..m).fold(Self::constant(1.0), |acc, _| &acc * &base)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Degree of the polynomial; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs.get(j).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::default();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| j as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && self.coeffs.last() == Some(&0.0) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
        }
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..len).map(|j| self.coeff(j) + rhs.coeff(j)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..len).map(|j| self.coeff(j) - rhs.coeff(j)).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_power_binomial() {
        let p = Polynomial::affine_power(1.0, 2.0, 3);
        assert_eq!(p.coeffs(), &[1.0, 6.0, 12.0, 8.0]);
    }

    #[test]
    fn derivative_and_eval() {
        let p = Polynomial::new(vec![1.0, -2.0, 0.0, 4.0]);
        assert_eq!(p.derivative().coeffs(), &[-2.0, 0.0, 12.0]);
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 32.0);
        assert_eq!(Polynomial::constant(3.0).derivative().coeffs(), &[0.0]);
    }

    #[test]
    fn trims_trailing_zeros() {
        let p = &Polynomial::new(vec![1.0, 1.0]) - &Polynomial::new(vec![0.0, 1.0]);
        assert_eq!(p.degree(), 0);
    }
}
