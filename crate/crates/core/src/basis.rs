//! The two basis families of the operator.
//!
//! * `p_{n,k}(x) = (n/c)_k (cx)^k / (k! (1+cx)^{n/c+k})`, a negative-binomial
//!   mass in `k` with size `n/c` and mean `n x`;
//! * `θ_{n,k}(t) = n e^{-nt} (nt)^k / k!`, the Gamma(k+1, rate n) density.
//!
//! Both are evaluated in log space through the saddle-point forms of
//! [`crate::special`], so nothing underflows before the true value does.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ln_gamma, ln_negative_binomial_pmf, ln_poisson_pmf};

/// Number of factors below which the Pochhammer symbol is summed directly.
const DIRECT_POCHHAMMER_TERMS: u64 = 30;

/// The operator parameters `(n, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    n: f64,
    c: f64,
}

impl OperatorParams {
    pub fn new(n: f64, c: f64) -> Result<Self> {
        if !(n.is_finite() && n >= 1.0) {
            return Err(Error::InvalidParameter {
                name: "n",
                value: n,
                reason: "n must be a finite real >= 1",
            });
        }
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "c",
                value: c,
                reason: "c must lie in (0, 1]",
            });
        }
        Ok(Self { n, c })
    }

    #[inline]
    pub fn n(&self) -> f64 {
        self.n
    }

    #[inline]
    pub fn c(&self) -> f64 {
        self.c
    }

    /// The negative-binomial size `n / c`.
    #[inline]
    pub fn size(&self) -> f64 {
        self.n / self.c
    }

    /// Same `c`, different `n`.
    pub fn with_n(&self, n: f64) -> Self {
        Self { n, c: self.c }
    }
}

/// Which parameter shift the x-basis takes under differentiation.
///
/// `d/dx p_{n,k} = n (p_{n+c,k-1} - p_{n+c,k})`, so r derivatives move `n` to
/// `n + r c`. The `Printed` form moves it to `n + r` instead; the two agree at
/// `c = 1` and the variant is kept for side-by-side comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum BasisShift {
    #[default]
    Exact,
    Printed,
}

impl BasisShift {
    /// Basis parameters after `r` derivatives.
    pub fn shifted(self, params: &OperatorParams, r: u32) -> OperatorParams {
        let step = match self {
            BasisShift::Exact => params.c,
            BasisShift::Printed => 1.0,
        };
        params.with_n(params.n + f64::from(r) * step)
    }
}

/// A finite index range `[k_lo, k_hi]` carrying all but `tolerance` of the basis mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationWindow {
    pub k_lo: u64,
    pub k_hi: u64,
    pub captured_mass: f64,
    pub tolerance: f64,
}

impl TruncationWindow {
    pub fn len(&self) -> u64 {
        self.k_hi - self.k_lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: u64) -> bool {
        (self.k_lo..=self.k_hi).contains(&k)
    }
}

/// `ln (a)_k` for the rising factorial `(a)_k = a (a+1) ... (a+k-1)`.
pub fn log_pochhammer(a: f64, k: u64) -> f64 {
    debug_assert!(a > 0.0);
    if k == 0 {
        return 0.0;
    }
    if k < DIRECT_POCHHAMMER_TERMS {
        // Pairwise products keep the number of logarithms down without overflowing.
        let mut acc = 0.0;
        let mut prod = 1.0_f64;
        for i in 0..k {
            prod *= a + i as f64;
            if prod > 1e280 {
                acc += prod.ln();
                prod = 1.0;
            }
        }
        return acc + prod.ln();
    }
    ln_gamma(a + k as f64) - ln_gamma(a)
}

/// `ln p_{n,k}(x)`.
pub fn ln_baskakov_weight(params: &OperatorParams, k: u64, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let cx = params.c * x;
    let prob = 1.0 / (1.0 + cx);
    let one_minus = cx / (1.0 + cx);
    ln_negative_binomial_pmf(k, params.size(), prob, one_minus)
}

/// `p_{n,k}(x)`.
pub fn baskakov_weight(params: &OperatorParams, k: u64, x: f64) -> f64 {
    ln_baskakov_weight(params, k, x).exp()
}

/// `ln θ_{n,k}(t)`.
pub fn ln_erlang_density(n: f64, k: u64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    n.ln() + ln_poisson_pmf(k, n * t)
}

/// `θ_{n,k}(t) = n e^{-nt} (nt)^k / k!`.
pub fn erlang_density(n: f64, k: u64, t: f64) -> f64 {
    ln_erlang_density(n, k, t).exp()
}

/// `d/dx p_{n,k}(x)` through the shifted-parameter identity.
pub fn baskakov_weight_derivative(params: &OperatorParams, k: u64, x: f64) -> f64 {
    weight_derivative_with(params, BasisShift::Exact, k, x)
}

/// The same identity with the printed `n + 1` shift, for comparison only.
pub fn baskakov_weight_derivative_printed(params: &OperatorParams, k: u64, x: f64) -> f64 {
    weight_derivative_with(params, BasisShift::Printed, k, x)
}

fn weight_derivative_with(params: &OperatorParams, shift: BasisShift, k: u64, x: f64) -> f64 {
    let shifted = shift.shifted(params, 1);
    let lower = if k == 0 {
        0.0
    } else {
        baskakov_weight(&shifted, k - 1, x)
    };
    params.n * (lower - baskakov_weight(&shifted, k, x))
}

/// Grows a window outward from `⌊n x⌋` until the geometric tail bounds on both
/// sides sum to at most `tolerance`.
pub fn truncation_window(
    params: &OperatorParams,
    x: f64,
    tolerance: f64,
    max_terms: u64,
) -> Result<TruncationWindow> {
    if !(tolerance > 0.0 && tolerance <= 1e-3) {
        return Err(Error::InvalidParameter {
            name: "tolerance",
            value: tolerance,
            reason: "truncation tolerance must lie in (0, 1e-3]",
        });
    }
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "x",
            value: x,
            reason: "x must be finite and nonnegative",
        });
    }
    if x == 0.0 {
        return Ok(TruncationWindow {
            k_lo: 0,
            k_hi: 0,
            captured_mass: 1.0,
            tolerance,
        });
    }

    let size = params.size();
    let q = params.c * x / (1.0 + params.c * x);
    let cap_error = || Error::TruncationCap {
        cap: max_terms,
        n: params.n,
        c: params.c,
        x,
    };

    let start = (params.n * x).floor();
    if start >= max_terms as f64 {
        return Err(cap_error());
    }
    let start = start as u64;
    let mut k_lo = start;
    let mut k_hi = start;
    let mut captured = baskakov_weight(params, start, x);
    let mut up = baskakov_weight(params, k_hi + 1, x);
    let mut down = if k_lo > 0 {
        baskakov_weight(params, k_lo - 1, x)
    } else {
        0.0
    };

    loop {
        // Ratio p_{j+1}/p_j for j >= k_hi + 1 is bounded by its value at j = k_hi + 1
        // when size >= 1, and by q otherwise.
        let j = (k_hi + 1) as f64;
        let ratio_up = if size >= 1.0 { (size + j) / (j + 1.0) * q } else { q };
        let upper_tail = if ratio_up < 1.0 {
            up / (1.0 - ratio_up)
        } else {
            f64::INFINITY
        };
        let lower_tail = if k_lo == 0 {
            0.0
        } else {
            // p_{j-1}/p_j = j / ((size + j - 1) q), nonincreasing as j decreases.
            let j = (k_lo - 1) as f64;
            let ratio_down = if j == 0.0 { 0.0 } else { j / ((size + j - 1.0) * q) };
            if ratio_down < 1.0 {
                down / (1.0 - ratio_down)
            } else {
                f64::INFINITY
            }
        };
        if upper_tail + lower_tail <= tolerance {
            break;
        }
        let grow_up = k_lo == 0 || upper_tail >= lower_tail;
        if grow_up {
            k_hi += 1;
            if k_hi > max_terms {
                return Err(cap_error());
            }
            captured += up;
            up = baskakov_weight(params, k_hi + 1, x);
        } else {
            k_lo -= 1;
            captured += down;
            down = if k_lo > 0 {
                baskakov_weight(params, k_lo - 1, x)
            } else {
                0.0
            };
        }
    }

    Ok(TruncationWindow {
        k_lo,
        k_hi,
        captured_mass: captured.min(1.0),
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: f64, c: f64) -> OperatorParams {
        OperatorParams::new(n, c).unwrap()
    }

    fn direct_product(a: f64, k: u64) -> f64 {
        (0..k).map(|i| a + i as f64).product()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(OperatorParams::new(0.5, 0.5).is_err());
        assert!(OperatorParams::new(10.0, 0.0).is_err());
        assert!(OperatorParams::new(10.0, 1.5).is_err());
        assert!(OperatorParams::new(f64::INFINITY, 1.0).is_err());
        assert!(OperatorParams::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(log_pochhammer(7.0, 0), 0.0);
        assert!((log_pochhammer(4.0, 3) - 120f64.ln()).abs() < 1e-15);
        let brute = direct_product(2.5, 20).ln();
        assert!((log_pochhammer(2.5, 20) - brute).abs() <= 1e-13 * brute.abs());
    }

    #[test]
    fn pochhammer_gamma_path_matches_product() {
        for &(a, k) in &[(2.5, 30u64), (0.7, 45), (13.25, 60), (100.0, 31)] {
            let brute = direct_product(a, k).ln();
            let v = log_pochhammer(a, k);
            assert!((v - brute).abs() <= 1e-13 * brute.abs(), "a = {a}, k = {k}: {v} vs {brute}");
        }
    }

    #[test]
    fn weight_at_origin() {
        for &(n, c) in &[(1.0, 0.1), (10.0, 0.5), (800.0, 1.0)] {
            assert_eq!(baskakov_weight(&params(n, c), 0, 0.0), 1.0);
            assert_eq!(baskakov_weight(&params(n, c), 3, 0.0), 0.0);
        }
    }

    #[test]
    fn weight_direct_substitution() {
        // (n/c)_1 (c x) / (1! (1 + c x)^{n/c + 1}) at n = 10, c = 0.5, x = 1
        let expected = 20.0 * 0.5 / 1.5_f64.powi(21);
        let v = baskakov_weight(&params(10.0, 0.5), 1, 1.0);
        assert!((v - expected).abs() <= 1e-14 * expected);
    }

    #[test]
    fn weight_log_space_matches_direct_formula() {
        let p = params(10.0, 0.5);
        let size = p.size();
        for k in 0..60u64 {
            for &x in &[0.1, 0.7, 2.0, 5.0] {
                let cx = p.c() * x;
                let direct = direct_product(size, k) * cx.powi(k as i32)
                    / direct_product(1.0, k)
                    / (1.0 + cx).powf(size + k as f64);
                let v = baskakov_weight(&p, k, x);
                assert!((v - direct).abs() <= 1e-13 * direct, "k = {k}, x = {x}: {v} vs {direct}");
            }
        }
    }

    #[test]
    fn partition_of_unity_n10_c1() {
        let p = params(10.0, 1.0);
        let s: f64 = (0..2000).map(|k| baskakov_weight(&p, k, 2.0)).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn erlang_examples() {
        assert_eq!(erlang_density(1.0, 0, 0.0), 1.0);
        let expected = 5.0 * (-5.0_f64).exp() * 125.0 / 6.0;
        assert!((erlang_density(5.0, 3, 1.0) - expected).abs() <= 1e-14 * expected);
        assert_eq!(erlang_density(3.0, 2, 0.0), 0.0);
    }

    #[test]
    fn window_at_origin() {
        let w = truncation_window(&params(7.0, 0.3), 0.0, 1e-14, 10_000_000).unwrap();
        assert_eq!((w.k_lo, w.k_hi), (0, 0));
        assert_eq!(w.captured_mass, 1.0);
    }

    #[test]
    fn window_contains_mode_and_mass() {
        let p = params(50.0, 1.0);
        let w = truncation_window(&p, 2.0, 1e-14, 10_000_000).unwrap();
        assert!(w.contains(100));
        // cumulative-scan oracle over a range far wider than the window
        let total: f64 = (0..5000).map(|k| baskakov_weight(&p, k, 2.0)).sum();
        let inside: f64 = (w.k_lo..=w.k_hi).map(|k| baskakov_weight(&p, k, 2.0)).sum();
        assert!(total - inside <= 1e-14);
        assert!(inside >= 1.0 - 1e-14 - 1e-15);
    }

    #[test]
    fn window_mass_band() {
        let p = params(10.0, 0.5);
        let w = truncation_window(&p, 1.0, 1e-12, 10_000_000).unwrap();
        let s: f64 = (w.k_lo..=w.k_hi).map(|k| baskakov_weight(&p, k, 1.0)).sum();
        assert!(s >= 1.0 - 1e-12 && s <= 1.0 + 1e-15, "{s}");
    }

    #[test]
    fn window_cap_reported() {
        let err = truncation_window(&params(1000.0, 1.0), 50.0, 1e-14, 1000).unwrap_err();
        assert!(matches!(err, Error::TruncationCap { .. }));
    }

    #[test]
    fn window_rejects_bad_tolerance() {
        assert!(truncation_window(&params(10.0, 1.0), 1.0, 0.1, 100).is_err());
        assert!(truncation_window(&params(10.0, 1.0), 1.0, 0.0, 100).is_err());
    }

    fn central_difference(p: &OperatorParams, k: u64, x: f64) -> f64 {
        let h = 1e-6 * x.max(1.0);
        (baskakov_weight(p, k, x + h) - baskakov_weight(p, k, x - h)) / (2.0 * h)
    }

    #[test]
    fn derivative_at_k0() {
        let p = params(10.0, 0.5);
        let shifted = p.with_n(10.5);
        let expected = -10.0 * baskakov_weight(&shifted, 0, 0.8);
        assert_eq!(baskakov_weight_derivative(&p, 0, 0.8), expected);
    }

    #[test]
    fn derivative_matches_finite_difference_c1() {
        let p = params(10.0, 1.0);
        let fd = central_difference(&p, 3, 0.7);
        let d = baskakov_weight_derivative(&p, 3, 0.7);
        assert!((d - fd).abs() <= 1e-6 * fd.abs());
        // at c = 1 the printed n + 1 shift is the same identity
        assert!((baskakov_weight_derivative_printed(&p, 3, 0.7) - d).abs() <= 1e-14 * d.abs());
    }

    #[test]
    fn derivative_matches_finite_difference_c_half_and_printed_shift_does_not() {
        let p = params(10.0, 0.5);
        let fd = central_difference(&p, 3, 0.7);
        let d = baskakov_weight_derivative(&p, 3, 0.7);
        assert!((d - fd).abs() <= 1e-6 * fd.abs());
        let printed = baskakov_weight_derivative_printed(&p, 3, 0.7);
        assert!((printed - fd).abs() > 1e-3 * fd.abs());
    }
}
