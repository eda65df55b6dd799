//! Raw and central moments of the operator as polynomials in `x`.
//!
//! Three independent routes are provided:
//!
//! * the recurrence in `m` for central moments (positive terms only, so plain
//!   binary64 is stable);
//! * the closed form for raw moments obtained from the moment generating
//!   function, expanded in powers of `(1 + c x)`;
//! * central moments by binomial expansion of the raw ones.
//!
//! The last two are alternating sums whose terms grow like `(n/c)^r` while the
//! result stays O(1), so they are carried out in exact rational arithmetic on
//! the (exactly representable) binary64 values of `n` and `c`, then rounded once.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::basis::OperatorParams;
use crate::config::EvalConfig;
use crate::error::Result;
use crate::function::FunctionSpec;
use crate::operator::apply_transformed;
use crate::poly::Polynomial;

/// Highest moment order built by this module.
pub const MAX_MOMENT_ORDER: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentKind {
    /// `M_{n,i}(x) = L(t^i, x)`
    Raw(u32),
    /// `μ_{n,m}(x) = L((t-x)^m, x)`
    Central(u32),
}

impl MomentKind {
    pub fn order(&self) -> u32 {
        match *self {
            MomentKind::Raw(i) | MomentKind::Central(i) => i,
        }
    }
}

/// A moment of `L_{n,c}` at fixed numeric `(n, c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentPolynomial {
    pub poly: Polynomial,
    pub kind: MomentKind,
    pub params: OperatorParams,
}

impl MomentPolynomial {
    pub fn eval(&self, x: f64) -> f64 {
        self.poly.eval(x)
    }

    pub fn coeffs(&self) -> &[f64] {
        self.poly.coeffs()
    }

    pub fn degree(&self) -> usize {
        self.poly.degree()
    }
}

/// `λ_n(c, s) = (n/c)_s c^s n^{-s}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaNorm {
    pub s: u32,
    pub value: f64,
}

/// `λ_n(c, s) = ∏_{i<s} (n + i c) / n`.
pub fn lambda_norm(params: &OperatorParams, s: u32) -> LambdaNorm {
    let n = params.n();
    let value = (0..s).map(|i| (n + f64::from(i) * params.c()) / n).product();
    LambdaNorm { s, value }
}

fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite operator parameter")
}

fn binomial(n: u32, k: u32) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

fn round_all(coeffs: &[BigRational]) -> Polynomial {
    Polynomial::new(coeffs.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect())
}

fn exact_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Exact coefficients of `M_{n,r}` from
/// `n^{-r} Σ_j C(r,j) (1+cx)^j (n/c)_j (-1)^{r-j} ∏_{k=1}^{r-j} (n/c - k)`.
fn raw_moment_exact(params: &OperatorParams, r: u32) -> Vec<BigRational> {
    let n = exact(params.n());
    let c = exact(params.c());
    let a = &n / &c;
    let mut out = vec![BigRational::zero(); r as usize + 1];
    // (1 + c x)^j built incrementally
    let mut power = vec![BigRational::one()];
    let affine = vec![BigRational::one(), c.clone()];
    let mut rising = BigRational::one();
    for j in 0..=r {
        if j > 0 {
            rising *= &a + BigRational::from_integer(BigInt::from(j - 1));
            power = exact_mul(&power, &affine);
        }
        let mut falling = BigRational::one();
        for k in 1..=(r - j) {
            falling *= &a - BigRational::from_integer(BigInt::from(k));
        }
        let mut factor = BigRational::from_integer(binomial(r, j)) * &rising * falling;
        if (r - j) % 2 == 1 {
            factor = -factor;
        }
        for (i, p) in power.iter().enumerate() {
            out[i] += &factor * p;
        }
    }
    let scale = (0..r).fold(BigRational::one(), |acc, _| acc * &n);
    out.into_iter().map(|v| v / &scale).collect()
}

/// `M_{n,r}(x) = L_{n,c}(t^r, x)` from the closed form.
pub fn raw_moment_closed(params: &OperatorParams, r: u32) -> MomentPolynomial {
    assert!(r <= MAX_MOMENT_ORDER, "raw moment order above {MAX_MOMENT_ORDER}");
    MomentPolynomial {
        poly: round_all(&raw_moment_exact(params, r)),
        kind: MomentKind::Raw(r),
        params: *params,
    }
}

/// `μ_{n,0} ... μ_{n,m_max}` from
/// `n μ_{m+1} = x(1+cx)[μ'_m + m μ_{m-1}] + (m+1) μ_m + m x μ_{m-1}`,
/// seeded with `μ_0 = 1`, `μ_1 = 1/n`.
pub fn central_moment_recurrence(params: &OperatorParams, m_max: u32) -> Vec<MomentPolynomial> {
    assert!(m_max <= MAX_MOMENT_ORDER, "central moment order above {MAX_MOMENT_ORDER}");
    let n = params.n();
    let x_one_plus_cx = Polynomial::new(vec![0.0, 1.0, params.c()]);
    let x = Polynomial::identity();
    let mut mu = vec![Polynomial::constant(1.0), Polynomial::constant(1.0 / n)];
    for m in 1..m_max.max(1) {
        let mf = f64::from(m);
        let current = &mu[m as usize];
        let previous = &mu[m as usize - 1];
        let bracket = &current.derivative() + &previous.scale(mf);
        let sum = &(&(&x_one_plus_cx * &bracket) + &current.scale(mf + 1.0)) + &(&x * previous).scale(mf);
        mu.push(sum.scale(1.0 / n));
    }
    mu.truncate(m_max as usize + 1);
    mu.into_iter()
        .enumerate()
        .map(|(m, poly)| MomentPolynomial {
            poly,
            kind: MomentKind::Central(m as u32),
            params: *params,
        })
        .collect()
}

/// `μ_{n,m}(x) = Σ_j C(m,j) (-x)^{m-j} M_{n,j}(x)`.
pub fn central_from_raw(params: &OperatorParams, m: u32) -> MomentPolynomial {
    assert!(m <= MAX_MOMENT_ORDER, "central moment order above {MAX_MOMENT_ORDER}");
    let mut out = vec![BigRational::zero(); m as usize + 1];
    for j in 0..=m {
        let raw = raw_moment_exact(params, j);
        let mut factor = BigRational::from_integer(binomial(m, j));
        if (m - j) % 2 == 1 {
            factor = -factor;
        }
        let shift = (m - j) as usize;
        for (i, coeff) in raw.iter().enumerate() {
            out[i + shift] += &factor * coeff;
        }
    }
    MomentPolynomial {
        poly: round_all(&out),
        kind: MomentKind::Central(m),
        params: *params,
    }
}

/// The raw moments `M_{n,0..4}` as printed in closed form.
pub fn printed_raw_moment(params: &OperatorParams, i: u32) -> Option<Polynomial> {
    let (n, c) = (params.n(), params.c());
    let coeffs = match i {
        0 => vec![1.0],
        1 => vec![1.0 / n, 1.0],
        2 => vec![2.0, 4.0 * n, c * n + n * n].into_iter().map(|v| v / (n * n)).collect(),
        3 => vec![6.0, 18.0 * n, 9.0 * c * n + 9.0 * n * n, 2.0 * c * c * n + 3.0 * c * n * n + n.powi(3)]
            .into_iter()
            .map(|v| v / n.powi(3))
            .collect(),
        4 => vec![
            24.0,
            96.0 * n,
            72.0 * n * n + 72.0 * c * n,
            16.0 * n.powi(3) + 48.0 * c * n * n + 32.0 * c * c * n,
            n.powi(4) + 6.0 * c * n.powi(3) + 11.0 * c * c * n * n + 6.0 * c.powi(3) * n,
        ]
        .into_iter()
        .map(|v| v / n.powi(4))
        .collect(),
        _ => return None,
    };
    Some(Polynomial::new(coeffs))
}

/// The central moments `μ_{n,0..4}` as printed in closed form.
pub fn printed_central_moment(params: &OperatorParams, m: u32) -> Option<Polynomial> {
    let (n, c) = (params.n(), params.c());
    let coeffs = match m {
        0 => vec![1.0],
        1 => vec![1.0 / n],
        2 => vec![2.0, 2.0 * n, c * n].into_iter().map(|v| v / (n * n)).collect(),
        3 => vec![6.0, 12.0 * n, 9.0 * c * n, 2.0 * c * c * n]
            .into_iter()
            .map(|v| v / n.powi(3))
            .collect(),
        4 => vec![
            24.0,
            72.0 * n,
            72.0 * c * n + 12.0 * n * n,
            32.0 * c * c * n + 12.0 * c * n * n,
            6.0 * c.powi(3) * n + 3.0 * c * c * n * n,
        ]
        .into_iter()
        .map(|v| v / n.powi(4))
        .collect(),
        _ => return None,
    };
    Some(Polynomial::new(coeffs))
}

/// Second central moment of the transformed operator, computed and printed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformedSecondMoment {
    pub r: u32,
    pub x: f64,
    /// `L_{n,c,r}((t-x)^2, x)` by series and quadrature.
    pub numeric: f64,
    pub numeric_error: f64,
    /// `(n x (c x+2) + r (x (c x+4)+3) + r^2 (x+1)^2 + 2) / n^2`
    pub printed: f64,
}

impl TransformedSecondMoment {
    pub fn relative_discrepancy(&self) -> f64 {
        (self.numeric - self.printed).abs() / self.numeric.abs().max(f64::MIN_POSITIVE)
    }
}

/// The printed closed form of `L_{n,c,r}((t-x)^2, x)`.
///
/// Exact only at `c = 1`; the exact moment has `r (x (c^2 x + 4c) + 3)` and
/// `r^2 (1+cx)^2` in place of the two `r` terms.
pub fn printed_transformed_second_moment(params: &OperatorParams, r: u32, x: f64) -> f64 {
    let (n, c) = (params.n(), params.c());
    let r = f64::from(r);
    (n * x * (c * x + 2.0) + r * (x * (c * x + 4.0) + 3.0) + r * r * (x + 1.0).powi(2) + 2.0) / (n * n)
}

pub fn transformed_second_central_moment(
    params: &OperatorParams,
    r: u32,
    x: f64,
    cfg: &EvalConfig,
) -> Result<TransformedSecondMoment> {
    let v = apply_transformed(&FunctionSpec::centered_power(x, 2), r, x, params, cfg)?;
    Ok(TransformedSecondMoment {
        r,
        x,
        numeric: v.value,
        numeric_error: v.quadrature_error,
        printed: printed_transformed_second_moment(params, r, x),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: f64, c: f64) -> OperatorParams {
        OperatorParams::new(n, c).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn raw_examples() {
        let p = params(10.0, 0.5);
        assert_eq!(raw_moment_closed(&p, 0).coeffs(), &[1.0]);
        let m1 = raw_moment_closed(&p, 1);
        assert!(close(m1.coeffs()[0], 0.1, 1e-15) && close(m1.coeffs()[1], 1.0, 1e-15));
        let m2 = raw_moment_closed(&p, 2);
        for (got, want) in m2.coeffs().iter().zip([0.02, 0.4, 1.05]) {
            assert!(close(*got, want, 1e-15), "{got} vs {want}");
        }
    }

    #[test]
    fn recurrence_examples() {
        let mu = central_moment_recurrence(&params(10.0, 0.5), 4);
        assert_eq!(mu[0].coeffs(), &[1.0]);
        assert!(close(mu[2].eval(1.0), 0.27, 1e-14));
        let mu = central_moment_recurrence(&params(10.0, 1.0), 4);
        assert!(close(mu[4].eval(1.0), 0.4544, 1e-14));
    }

    #[test]
    fn recurrence_short_requests() {
        assert_eq!(central_moment_recurrence(&params(5.0, 1.0), 0).len(), 1);
        assert_eq!(central_moment_recurrence(&params(5.0, 1.0), 1).len(), 2);
    }

    #[test]
    fn central_from_raw_examples() {
        let p = params(20.0, 0.5);
        assert_eq!(central_from_raw(&p, 0).coeffs(), &[1.0]);
        let m1 = central_from_raw(&p, 1);
        assert_eq!(m1.coeffs(), &[1.0 / 20.0]);
        let rec = central_moment_recurrence(&p, 3);
        assert!(close(central_from_raw(&p, 3).eval(2.0), rec[3].eval(2.0), 1e-10));
    }

    #[test]
    fn degree_bound() {
        for m in 0..=MAX_MOMENT_ORDER {
            assert!(central_from_raw(&params(7.0, 0.3), m).degree() <= m as usize);
        }
        for mp in central_moment_recurrence(&params(7.0, 0.3), MAX_MOMENT_ORDER) {
            assert!(mp.degree() <= mp.kind.order() as usize);
        }
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda_norm(&params(10.0, 0.5), 0).value, 1.0);
        assert!(close(lambda_norm(&params(10.0, 0.5), 2).value, 1.05, 1e-15));
        assert!(close(lambda_norm(&params(100.0, 1.0), 3).value, 1.0302, 1e-14));
        assert!((lambda_norm(&params(1e8, 1.0), 5).value - 1.0 - 1e-7).abs() < 1e-14);
    }

    #[test]
    fn printed_forms_match_exact_routes() {
        for &(n, c) in &[(5.0, 0.1), (10.0, 0.5), (800.0, 1.0)] {
            let p = params(n, c);
            for i in 0..=4 {
                let printed = printed_raw_moment(&p, i).unwrap();
                let closed = raw_moment_closed(&p, i);
                for j in 0..=i as usize {
                    assert!(close(printed.coeff(j), closed.poly.coeff(j), 1e-13));
                }
                let printed = printed_central_moment(&p, i).unwrap();
                let central = central_from_raw(&p, i);
                for j in 0..=i as usize {
                    assert!(close(printed.coeff(j), central.poly.coeff(j), 1e-13), "n={n} c={c} m={i} j={j}");
                }
            }
        }
        assert!(printed_raw_moment(&params(5.0, 1.0), 5).is_none());
    }

    #[test]
    fn transformed_second_moment_at_r0() {
        let cfg = EvalConfig::default();
        let p = params(30.0, 0.5);
        let v = transformed_second_central_moment(&p, 0, 0.0, &cfg).unwrap();
        assert!(close(v.printed, 2.0 / 900.0, 1e-15));
        assert!(close(v.numeric, 2.0 / 900.0, 1e-10));
        let mu2 = &central_moment_recurrence(&p, 2)[2];
        let v = transformed_second_central_moment(&p, 0, 1.3, &cfg).unwrap();
        assert!(close(v.numeric, mu2.eval(1.3), 1e-9));
        assert!(close(v.printed, mu2.eval(1.3), 1e-14));
    }
}
