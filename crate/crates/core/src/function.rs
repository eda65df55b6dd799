//! Evaluable test functions on `[0, ∞)` with exact derivatives and growth data.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// A real function of one variable, shareable across worker threads.
///
/// Evaluators are called concurrently during grid sweeps and must not rely on
/// interior mutability.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A function together with the metadata every evaluation path relies on.
///
/// * `derivatives[i]` is the `(i+1)`-th derivative;
/// * `growth_rate` is a `γ` with `|f(t)| <= A e^{γ t}` (polynomials declare 0);
/// * `kinks` are points where some listed derivative is not smooth, and are
///   used to split quadrature panels;
/// * `damped`, when present, evaluates `f(t) e^{-γ t}` so that integrands stay
///   finite where `f` alone would overflow.
#[derive(Clone)]
pub struct FunctionSpec {
    label: String,
    evaluator: RealFn,
    derivatives: Vec<RealFn>,
    growth_rate: f64,
    kinks: Vec<f64>,
    polynomial: Option<Polynomial>,
    damped: Option<RealFn>,
}

impl fmt::Debug for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionSpec")
            .field("label", &self.label)
            .field("derivatives", &self.derivatives.len())
            .field("growth_rate", &self.growth_rate)
            .field("kinks", &self.kinks)
            .finish()
    }
}

impl FunctionSpec {
    pub fn new(label: impl Into<String>, evaluator: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            evaluator: Arc::new(evaluator),
            derivatives: Vec::new(),
            growth_rate: 0.0,
            kinks: Vec::new(),
            polynomial: None,
            damped: None,
        }
    }

    pub fn with_derivative(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivatives.push(Arc::new(d));
        self
    }

    pub fn with_growth_rate(mut self, gamma: f64) -> Self {
        self.growth_rate = gamma;
        self
    }

    pub fn with_kinks(mut self, mut kinks: Vec<f64>) -> Self {
        kinks.sort_by(f64::total_cmp);
        kinks.dedup();
        self.kinks = kinks;
        self
    }

    pub fn with_damped(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.damped = Some(Arc::new(d));
        self
    }

    /// `f(t) e^{-γ t}` with `γ` the growth rate, if the function supplies it.
    pub fn eval_damped(&self, t: f64) -> Option<f64> {
        self.damped.as_ref().map(|d| d(t))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn growth_rate(&self) -> f64 {
        self.growth_rate
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    /// Number of derivatives available.
    pub fn derivative_count(&self) -> usize {
        self.derivatives.len()
    }

    /// Polynomial coefficients, when the function is a polynomial.
    pub fn polynomial(&self) -> Option<&Polynomial> {
        self.polynomial.as_ref()
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.evaluator)(t)
    }

    /// `f^{(r)}(t)`; `r = 0` is the function itself.
    pub fn eval_derivative(&self, r: usize, t: f64) -> Result<f64> {
        if r == 0 {
            return Ok(self.eval(t));
        }
        self.derivatives
            .get(r - 1)
            .map(|d| d(t))
            .ok_or_else(|| self.missing(r))
    }

    /// The function `f^{(r)}` as a spec of its own, keeping growth and kinks.
    pub fn derivative(&self, r: usize) -> Result<FunctionSpec> {
        if r == 0 {
            return Ok(self.clone());
        }
        if r > self.derivatives.len() {
            return Err(self.missing(r));
        }
        let polynomial = self.polynomial.as_ref().map(|p| (0..r).fold(p.clone(), |acc, _| acc.derivative()));
        Ok(FunctionSpec {
            label: format!("{}^({})", self.label, r),
            evaluator: self.derivatives[r - 1].clone(),
            derivatives: self.derivatives[r..].to_vec(),
            growth_rate: self.growth_rate,
            kinks: self.kinks.clone(),
            polynomial,
            damped: None,
        })
    }

    fn missing(&self, r: usize) -> Error {
        Error::MissingDerivative {
            label: self.label.clone(),
            available: self.derivatives.len(),
            required: r,
        }
    }

    /// `a f + b g`. Derivatives are kept up to the shorter of the two lists.
    pub fn linear_combination(a: f64, f: &FunctionSpec, b: f64, g: &FunctionSpec) -> FunctionSpec {
        let fe = f.evaluator.clone();
        let ge = g.evaluator.clone();
        let derivatives = f
            .derivatives
            .iter()
            .zip(&g.derivatives)
            .map(|(df, dg)| {
                let (df, dg) = (df.clone(), dg.clone());
                Arc::new(move |t: f64| a * df(t) + b * dg(t)) as RealFn
            })
            .collect();
        let mut kinks = f.kinks.clone();
        kinks.extend_from_slice(&g.kinks);
        let polynomial = match (&f.polynomial, &g.polynomial) {
            (Some(p), Some(q)) => Some(&p.scale(a) + &q.scale(b)),
            _ => None,
        };
        FunctionSpec {
            label: format!("{a}*{}+{b}*{}", f.label, g.label),
            evaluator: Arc::new(move |t| a * fe(t) + b * ge(t)),
            derivatives,
            growth_rate: f.growth_rate.max(g.growth_rate),
            damped: None,
            kinks,
            polynomial,
        }
        .with_kinks_sorted()
    }

    fn with_kinks_sorted(self) -> Self {
        let kinks = self.kinks.clone();
        self.with_kinks(kinks)
    }

    // ---- constructors ---------------------------------------------------

    /// A polynomial with all of its derivatives.
    pub fn polynomial_from(label: impl Into<String>, coeffs: Vec<f64>) -> Self {
        let p = Polynomial::new(coeffs);
        let mut derivatives = Vec::new();
        let mut d = p.derivative();
        for _ in 0..p.degree().max(1) + 2 {
            let dd = d.clone();
            derivatives.push(Arc::new(move |t: f64| dd.eval(t)) as RealFn);
            d = d.derivative();
        }
        let pe = p.clone();
        FunctionSpec {
            label: label.into(),
            evaluator: Arc::new(move |t| pe.eval(t)),
            derivatives,
            growth_rate: 0.0,
            kinks: Vec::new(),
            polynomial: Some(p),
            damped: None,
        }
    }

    /// `t^j`
    pub fn monomial(j: usize) -> Self {
        let mut coeffs = vec![0.0; j + 1];
        coeffs[j] = 1.0;
        Self::polynomial_from(format!("t{j}"), coeffs)
    }

    pub fn constant(v: f64) -> Self {
        Self::polynomial_from(format!("const({v})"), vec![v])
    }

    /// `(t - center)^m`
    pub fn centered_power(center: f64, m: usize) -> Self {
        let p = Polynomial::affine_power(-center, 1.0, m);
        Self::polynomial_from(format!("(t-{center})^{m}"), p.into_coeffs())
    }

    /// `e^{-t}` with eight derivatives.
    pub fn exp_neg() -> Self {
        let mut f = Self::new("exp_neg", |t: f64| (-t).exp());
        for r in 1..=8 {
            let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
            f = f.with_derivative(move |t: f64| sign * (-t).exp());
        }
        f
    }

    /// `e^{θ t}` with eight derivatives; growth rate `max(θ, 0)`.
    pub fn exp_theta(theta: f64) -> Self {
        let mut f = Self::new(format!("exp({theta}t)"), move |t: f64| (theta * t).exp());
        for r in 1..=8 {
            let scale = theta.powi(r);
            f = f.with_derivative(move |t: f64| scale * (theta * t).exp());
        }
        let damped_scale = if theta > 0.0 { 0.0 } else { theta };
        f.with_growth_rate(theta.max(0.0)).with_damped(move |t: f64| (damped_scale * t).exp())
    }

    /// `e^{-t} sin t`; its r-th derivative is `2^{r/2} e^{-t} sin(t + 3πr/4)`.
    pub fn exp_neg_sin() -> Self {
        let mut f = Self::new("exp_neg_sin", |t: f64| (-t).exp() * t.sin());
        for r in 1..=8 {
            let amp = 2f64.powf(0.5 * r as f64);
            let phase = 3.0 * FRAC_PI_4 * r as f64;
            f = f.with_derivative(move |t: f64| amp * (-t).exp() * (t + phase).sin());
        }
        f
    }

    /// `|t - 1|^{3/2} + t`, whose first derivative is Hölder-1/2 at `t = 1`.
    pub fn abs_three_halves() -> Self {
        Self::new("abs32", |t: f64| (t - 1.0).abs().powf(1.5) + t)
            .with_derivative(|t: f64| 1.5 * (t - 1.0).signum() * (t - 1.0).abs().sqrt() + 1.0)
            .with_kinks(vec![1.0])
    }

    /// `|t - 1|`
    pub fn abs_shift() -> Self {
        Self::new("abs1", |t: f64| (t - 1.0).abs())
            .with_derivative(|t: f64| (t - 1.0).signum())
            .with_kinks(vec![1.0])
    }

    /// `1 / (1 + t)` with eight derivatives.
    pub fn inv_one_plus() -> Self {
        let mut f = Self::new("inv1p", |t: f64| 1.0 / (1.0 + t));
        let mut fact = 1.0;
        for r in 1..=8 {
            fact *= r as f64;
            let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
            let scale = sign * fact;
            f = f.with_derivative(move |t: f64| scale / (1.0 + t).powi(r + 1));
        }
        f
    }
}

/// Names accepted by [`bundled`].
pub const BUNDLED_NAMES: &[&str] = &[
    "t0", "t1", "t2", "t3", "t4", "t5", "t6", "exp_neg", "exp_neg_sin", "abs32", "abs1", "inv1p",
];

/// The named test-function suite.
pub fn bundled(name: &str) -> Option<FunctionSpec> {
    match name {
        "exp_neg" => Some(FunctionSpec::exp_neg()),
        "exp_neg_sin" => Some(FunctionSpec::exp_neg_sin()),
        "abs32" => Some(FunctionSpec::abs_three_halves()),
        "abs1" => Some(FunctionSpec::abs_shift()),
        "inv1p" => Some(FunctionSpec::inv_one_plus()),
        _ => {
            let j: usize = name.strip_prefix('t')?.parse().ok()?;
            (j <= 6).then(|| FunctionSpec::monomial(j))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 5-point central difference.
    fn fd(f: impl Fn(f64) -> f64, t: f64) -> f64 {
        let h = 1e-4 * t.abs().max(1.0);
        (-f(t + 2.0 * h) + 8.0 * f(t + h) - 8.0 * f(t - h) + f(t - 2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn listed_derivatives_are_true_derivatives() {
        for name in BUNDLED_NAMES {
            let f = bundled(name).unwrap();
            for r in 0..f.derivative_count() {
                for &t in &[0.3, 0.8, 1.7, 3.2] {
                    let lower = |s: f64| f.eval_derivative(r, s).unwrap();
                    let upper = f.eval_derivative(r + 1, t).unwrap();
                    let approx = fd(lower, t);
                    let scale = upper.abs().max(1e-3);
                    assert!(
                        (approx - upper).abs() <= 1e-6 * scale.max(1.0),
                        "{name}: derivative {} at {t}: {approx} vs {upper}",
                        r + 1
                    );
                }
            }
        }
    }

    #[test]
    fn derivative_spec_shifts_list() {
        let f = FunctionSpec::monomial(3);
        let d2 = f.derivative(2).unwrap();
        assert_eq!(d2.eval(2.0), 12.0);
        assert_eq!(d2.eval_derivative(1, 5.0).unwrap(), 6.0);
        assert_eq!(d2.polynomial().unwrap().coeffs(), &[0.0, 6.0]);
        assert!(matches!(
            FunctionSpec::abs_three_halves().derivative(2),
            Err(Error::MissingDerivative { available: 1, required: 2, .. })
        ));
    }

    #[test]
    fn centered_power_expands() {
        let f = FunctionSpec::centered_power(1.5, 3);
        assert!((f.eval(4.0) - 2.5f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn unknown_names_rejected() {
        assert!(bundled("t7").is_none());
        assert!(bundled("sinh").is_none());
        assert!(bundled("t").is_none());
    }
}
