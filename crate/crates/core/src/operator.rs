//! Evaluation of `L_{n,c} f(x)`, its derivatives and its moment generating function.
//!
//! Every evaluation path goes through [`apply_grid`]: the inner integrals
//! `∫ θ_{n,k+r}(t) f(t) dt` do not depend on `x`, so for a grid of points they
//! are computed once over the union of the summation windows and then reused.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{baskakov_weight, truncation_window, BasisShift, OperatorParams};
use crate::config::EvalConfig;
use crate::error::{Error, Result};
use crate::function::FunctionSpec;
use crate::moments::lambda_norm;
use crate::quadrature::{erlang_integral, erlang_integral_between, gamma_upper_tail_bound, Integral};

/// Terms below this fraction of the running absolute sum are negligible.
const NEGLIGIBLE_TERM: f64 = 1e-17;
/// Largest derivative order accepted by the transformed operator.
pub const MAX_TRANSFER_ORDER: u32 = 6;

/// Result of one operator evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorValue {
    pub value: f64,
    /// Basis mass outside the final summation window.
    pub truncation_mass_dropped: f64,
    /// `Σ p_k · (per-term quadrature error estimate)`.
    pub quadrature_error: f64,
}

impl OperatorValue {
    /// Sum of both error fields.
    pub fn error_bound(&self) -> f64 {
        self.quadrature_error + self.truncation_mass_dropped * self.value.abs().max(1.0)
    }

    pub(crate) fn scaled(self, s: f64) -> Self {
        Self {
            value: self.value * s,
            truncation_mass_dropped: self.truncation_mass_dropped,
            quadrature_error: self.quadrature_error * s.abs(),
        }
    }
}

/// Inner integrals `∫ θ_{n,k+offset} f`, memoized by `k`.
struct KernelTable<'a> {
    f: &'a FunctionSpec,
    n: f64,
    offset: u64,
    cfg: &'a EvalConfig,
    values: HashMap<u64, Integral>,
}

impl<'a> KernelTable<'a> {
    fn new(f: &'a FunctionSpec, n: f64, offset: u64, cfg: &'a EvalConfig) -> Self {
        Self {
            f,
            n,
            offset,
            cfg,
            values: HashMap::new(),
        }
    }

    fn fill(&mut self, lo: u64, hi: u64) -> Result<()> {
        let missing: Vec<u64> = (lo..=hi).filter(|k| !self.values.contains_key(k)).collect();
        let computed: Result<Vec<(u64, Integral)>> = missing
            .par_iter()
            .map(|&k| erlang_integral(self.f, self.n, k + self.offset, &self.cfg.quadrature).map(|v| (k, v)))
            .collect();
        self.values.extend(computed?);
        Ok(())
    }

    fn get(&mut self, k: u64) -> Result<Integral> {
        if let Some(v) = self.values.get(&k) {
            return Ok(*v);
        }
        let v = erlang_integral(self.f, self.n, k + self.offset, &self.cfg.quadrature)?;
        self.values.insert(k, v);
        Ok(v)
    }
}

fn check_preconditions(f: &FunctionSpec, x: f64, params: &OperatorParams) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "x",
            value: x,
            reason: "x must be finite and nonnegative",
        });
    }
    let gamma = f.growth_rate();
    // L(e^{γt}, x) converges only for γ (1 + c x) < n.
    if gamma >= params.n() || gamma * (1.0 + params.c() * x) >= params.n() {
        return Err(Error::Growth {
            label: f.label().to_string(),
            growth: gamma,
            n: params.n(),
        });
    }
    Ok(())
}

/// `Σ_k p_{basis,k}(x) ∫ θ_{n,k+r}(t) f(t) dt` at every point of `xs`.
///
/// `basis` is the x-basis after the shift selected by `shift`; the kernel keeps
/// rate `n` and moves its index by `r`.
pub fn apply_grid(
    f: &FunctionSpec,
    r: u32,
    xs: &[f64],
    params: &OperatorParams,
    shift: BasisShift,
    cfg: &EvalConfig,
) -> Result<Vec<OperatorValue>> {
    cfg.validate()?;
    if r > MAX_TRANSFER_ORDER {
        return Err(Error::InvalidParameter {
            name: "r",
            value: f64::from(r),
            reason: "transfer order above 6 is not supported",
        });
    }
    for &x in xs {
        check_preconditions(f, x, params)?;
    }
    let basis = shift.shifted(params, r);
    let windows = xs
        .iter()
        .map(|&x| truncation_window(&basis, x, cfg.truncation_tolerance, cfg.max_terms))
        .collect::<Result<Vec<_>>>()?;
    let mut table = KernelTable::new(f, params.n(), u64::from(r), cfg);
    if let (Some(lo), Some(hi)) = (
        windows.iter().map(|w| w.k_lo).min(),
        windows.iter().map(|w| w.k_hi).max(),
    ) {
        table.fill(lo, hi)?;
    }

    xs.iter()
        .zip(&windows)
        .map(|(&x, w)| {
            let mut value = 0.0;
            let mut abs_sum = 0.0;
            let mut qerr = 0.0;
            let mut mass = 0.0;
            for k in w.k_lo..=w.k_hi {
                let p = baskakov_weight(&basis, k, x);
                let i = table.get(k)?;
                value += p * i.value;
                abs_sum += (p * i.value).abs();
                qerr += p * i.error_estimate;
                mass += p;
            }
            // Growing or decaying integrands shift weight outside the basis window.
            let mut quiet = 0;
            let mut k = w.k_hi;
            while quiet < 2 {
                k += 1;
                if k > cfg.max_terms {
                    return Err(Error::TruncationCap {
                        cap: cfg.max_terms,
                        n: params.n(),
                        c: params.c(),
                        x,
                    });
                }
                let p = baskakov_weight(&basis, k, x);
                let i = table.get(k)?;
                let term = p * i.value;
                value += term;
                abs_sum += term.abs();
                qerr += p * i.error_estimate;
                mass += p;
                if term.abs() <= NEGLIGIBLE_TERM * abs_sum {
                    quiet += 1;
                } else {
                    quiet = 0;
                }
            }
            let mut quiet = 0;
            let mut k = w.k_lo;
            while quiet < 2 && k > 0 {
                k -= 1;
                let p = baskakov_weight(&basis, k, x);
                let i = table.get(k)?;
                let term = p * i.value;
                value += term;
                abs_sum += term.abs();
                qerr += p * i.error_estimate;
                mass += p;
                if term.abs() <= NEGLIGIBLE_TERM * abs_sum {
                    quiet += 1;
                } else {
                    quiet = 0;
                }
            }
            Ok(OperatorValue {
                value,
                truncation_mass_dropped: (1.0 - mass).max(0.0),
                quadrature_error: qerr + 4.0 * f64::EPSILON * abs_sum,
            })
        })
        .collect()
}

/// `L_{n,c} f(x)`.
pub fn apply(f: &FunctionSpec, x: f64, params: &OperatorParams, cfg: &EvalConfig) -> Result<OperatorValue> {
    apply_transformed(f, 0, x, params, cfg)
}

/// The transformed operator `L_{n,c,r} f(x) = Σ_k p_{n+rc,k}(x) ∫ θ_{n,k+r}(t) f(t) dt`.
pub fn apply_transformed(
    f_r: &FunctionSpec,
    r: u32,
    x: f64,
    params: &OperatorParams,
    cfg: &EvalConfig,
) -> Result<OperatorValue> {
    apply_transformed_with(f_r, r, x, params, BasisShift::Exact, cfg)
}

/// [`apply_transformed`] with an explicit basis shift.
pub fn apply_transformed_with(
    f_r: &FunctionSpec,
    r: u32,
    x: f64,
    params: &OperatorParams,
    shift: BasisShift,
    cfg: &EvalConfig,
) -> Result<OperatorValue> {
    Ok(apply_grid(f_r, r, &[x], params, shift, cfg)?[0])
}

/// `d^r/dx^r L_{n,c}(f, x)`.
///
/// Chaining the one-step identity `d/dx L = Σ p_{n+c,k} ∫ θ_{n,k+1} f'` r
/// times picks up the factor `∏_{i<r} (n + i c)/n = λ_n(c, r)`, so this returns
/// `λ_n(c, r) · L_{n,c,r}(f^{(r)}, x)`.
pub fn derivative_of_operator(
    f: &FunctionSpec,
    r: u32,
    x: f64,
    params: &OperatorParams,
    cfg: &EvalConfig,
) -> Result<OperatorValue> {
    Ok(derivative_of_operator_grid(f, r, &[x], params, cfg)?[0])
}

/// [`derivative_of_operator`] on a grid of points.
pub fn derivative_of_operator_grid(
    f: &FunctionSpec,
    r: u32,
    xs: &[f64],
    params: &OperatorParams,
    cfg: &EvalConfig,
) -> Result<Vec<OperatorValue>> {
    let f_r = f.derivative(r as usize)?;
    let lambda = lambda_norm(params, r).value;
    Ok(apply_grid(&f_r, r, xs, params, BasisShift::Exact, cfg)?
        .into_iter()
        .map(|v| v.scaled(lambda))
        .collect())
}

/// Closed form of `L_{n,c}(e^{θ t}, x) = n (n-θ)^{n/c-1} / (n - θ(1+cx))^{n/c}`.
pub fn operator_mgf(theta: f64, x: f64, params: &OperatorParams) -> Result<f64> {
    let n = params.n();
    let y = 1.0 + params.c() * x;
    if !(theta < n && theta * y < n) || x < 0.0 {
        return Err(Error::Pole {
            theta,
            x,
            n,
            c: params.c(),
        });
    }
    let a = params.size();
    let l1 = (-theta / n).ln_1p();
    let l2 = (-theta * y / n).ln_1p();
    Ok(((a - 1.0) * l1 - a * l2).exp())
}

/// `Σ_k p_{n,k}(x) ∫_{|t-x| >= δ} θ_{n,k}(t) e^{γ t} dt`.
///
/// The right piece is integrated up to `T = x + δ + 30/√n + 20(1+γ)/n` and the
/// remainder beyond `T` is replaced by its Chernoff bound, so the result is an
/// upper estimate whose bias is below the quadrature tolerance for sane inputs.
pub fn tail_mass(params: &OperatorParams, x: f64, delta: f64, gamma: f64, cfg: &EvalConfig) -> Result<f64> {
    if !(x > 0.0) || !(delta > 0.0) {
        return Err(Error::InvalidParameter {
            name: "x/delta",
            value: x.min(delta),
            reason: "x and delta must be positive",
        });
    }
    let n = params.n();
    let g = if gamma == 0.0 {
        FunctionSpec::constant(1.0)
    } else {
        FunctionSpec::exp_theta(gamma)
    };
    check_preconditions(&g, x, params)?;
    let upper = x + delta + 30.0 / n.sqrt() + 20.0 * (1.0 + gamma) / n;
    let q = &cfg.quadrature;

    let term = |k: u64| -> Result<f64> {
        let left = erlang_integral_between(&g, n, k, 0.0, x - delta, q)?.value;
        let right = erlang_integral_between(&g, n, k, x + delta, upper, q)?.value;
        let tilt = (k as f64 + 1.0) * (n / (n - gamma)).ln();
        let remainder = tilt.exp() * gamma_upper_tail_bound(k as f64 + 1.0, n - gamma, upper);
        Ok(left + right + remainder)
    };

    let w = truncation_window(params, x, cfg.truncation_tolerance, cfg.max_terms)?;
    let terms: Result<Vec<f64>> = (w.k_lo..=w.k_hi)
        .into_par_iter()
        .map(|k| Ok(baskakov_weight(params, k, x) * term(k)?))
        .collect();
    let mut sum: f64 = terms?.iter().sum();

    let mut extend = |range: &mut dyn Iterator<Item = u64>| -> Result<()> {
        let mut quiet = 0;
        for k in range {
            let t = baskakov_weight(params, k, x) * term(k)?;
            sum += t;
            quiet = if t <= NEGLIGIBLE_TERM * sum { quiet + 1 } else { 0 };
            if quiet >= 2 {
                break;
            }
        }
        Ok(())
    };
    extend(&mut (w.k_hi + 1..=cfg.max_terms))?;
    extend(&mut (0..w.k_lo).rev())?;
    Ok(sum)
}
