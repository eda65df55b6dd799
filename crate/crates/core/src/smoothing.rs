//! Finite differences, moduli of smoothness and Steklov means.
//!
//! The Steklov mean of order `s` with step `h` is
//!
//! ```text
//! f_{h,s}(t) = h^{-s} ∫...∫_{[-h/2,h/2]^s} ( f(t) + (-1)^{s-1} Δ^s_u f(t) ) dt_1...dt_s,   u = t_1 + ... + t_s
//! ```
//!
//! with `Δ^s_u` the forward difference of step `u` taken at `t`. Expanding the
//! difference, `f_{h,s}(t) = Σ_{i=1}^{s} (-1)^{i+1} C(s,i) E f(t + i U)` where `U`
//! is a sum of `s` independent uniforms on `[-h/2, h/2]`. Differentiating
//! `E φ(t + V)` for `V` uniform of width `w` gives `(φ(t + w/2) - φ(t - w/2)) / w`,
//! so the `r`-th derivative trades `r` of the integrals for a central difference
//! and needs no derivative of `f`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::FunctionSpec;
use crate::quadrature::GaussLegendre;
use crate::report::{ExperimentReport, ReportRow, Verdict};

/// Number of step sizes sampled in `(0, h]` by [`modulus_of_smoothness`].
pub const MODULUS_LEVELS: usize = 32;
/// Largest Steklov order supported.
pub const MAX_STEKLOV_ORDER: u32 = 3;
/// Default tensor quadrature size per axis.
pub const DEFAULT_QUAD_POINTS: usize = 16;

/// An outer interval `[a, b]` and an inner one `[a1, b1]` strictly inside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalPair {
    a: f64,
    b: f64,
    a1: f64,
    b1: f64,
}

impl IntervalPair {
    pub fn new(outer: (f64, f64), inner: (f64, f64)) -> Result<Self> {
        let (a, b) = outer;
        let (a1, b1) = inner;
        if !(a > 0.0 && a < a1 && a1 < b1 && b1 < b && b.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "intervals",
                value: a1,
                reason: "need 0 < a < a1 < b1 < b < inf",
            });
        }
        Ok(Self { a, b, a1, b1 })
    }

    pub fn outer(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn inner(&self) -> (f64, f64) {
        (self.a1, self.b1)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

fn checked(f: &FunctionSpec, t: f64) -> Result<f64> {
    let v = f.eval(t);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain {
            label: f.label().to_string(),
            t,
        })
    }
}

/// `Δ^s_h f(x) = Σ_{i=0}^{s} (-1)^{s-i} C(s,i) f(x + i h)`.
pub fn forward_difference(f: &FunctionSpec, s: u32, h: f64, x: f64) -> Result<f64> {
    let mut sum = 0.0;
    for i in 0..=s {
        let sign = if (s - i) % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * binomial(s, i) * checked(f, x + f64::from(i) * h)?;
    }
    Ok(sum)
}

/// Grid estimate of `ω_s(f, h, [a, b]) = sup_{0<δ≤h} sup_x |Δ^s_δ f(x)|`.
///
/// Steps `δ = h l / 32`, `l = 1..=32`. For each step the admissible starting
/// points `[a, b - sδ]` are sampled uniformly with `grid_points` nodes, plus the
/// points `κ - iδ` that put a node of the difference on a kink `κ` of `f`. The
/// result is a lower bound of the true modulus.
pub fn modulus_of_smoothness(f: &FunctionSpec, s: u32, h: f64, interval: (f64, f64), grid_points: usize) -> f64 {
    assert!(grid_points >= 64, "modulus grid needs at least 64 points");
    let (a, b) = interval;
    let mut best: f64 = 0.0;
    let mut probe = |x: f64, delta: f64| {
        if let Ok(v) = forward_difference(f, s, delta, x) {
            best = best.max(v.abs());
        }
    };
    for l in 1..=MODULUS_LEVELS {
        let delta = h * l as f64 / MODULUS_LEVELS as f64;
        let span = b - a - f64::from(s) * delta;
        if span < 0.0 {
            break;
        }
        for j in 0..grid_points {
            probe(a + span * j as f64 / (grid_points - 1) as f64, delta);
        }
        for &kink in f.kinks() {
            for i in 0..=s {
                let x = kink - f64::from(i) * delta;
                if x >= a && x <= a + span {
                    probe(x, delta);
                }
            }
        }
    }
    best
}

/// [`modulus_of_smoothness`] at every `h` in `hs`, made nondecreasing in `h`.
///
/// The true modulus is nondecreasing, so replacing each estimate by the largest
/// estimate at any smaller step keeps it a lower bound.
pub fn modulus_profile(
    f: &FunctionSpec,
    s: u32,
    hs: &[f64],
    interval: (f64, f64),
    grid_points: usize,
) -> Vec<f64> {
    let raw: Vec<f64> = hs
        .iter()
        .map(|&h| modulus_of_smoothness(f, s, h, interval, grid_points))
        .collect();
    let mut order: Vec<usize> = (0..hs.len()).collect();
    order.sort_by(|&i, &j| hs[i].total_cmp(&hs[j]));
    let mut out = raw.clone();
    let mut running: f64 = 0.0;
    for i in order {
        running = running.max(raw[i]);
        out[i] = running;
    }
    out
}

/// `f_{h,s}` and its first `s` derivatives on the inner interval.
#[derive(Debug, Clone)]
pub struct SteklovMean {
    source: FunctionSpec,
    h: f64,
    s: u32,
    intervals: IntervalPair,
    rule: Arc<GaussLegendre>,
}

/// Build the Steklov mean of order `s ∈ {1, 2, 3}`.
///
/// Fails with `HTooLarge` when `[a1 - s²h/2, b1 + s²h/2]` leaves `[a, b]`.
pub fn steklov_mean(
    f: &FunctionSpec,
    h: f64,
    s: u32,
    intervals: IntervalPair,
    quad_points_per_axis: usize,
) -> Result<SteklovMean> {
    if !(1..=MAX_STEKLOV_ORDER).contains(&s) {
        return Err(Error::InvalidParameter {
            name: "s",
            value: f64::from(s),
            reason: "Steklov order must be 1, 2 or 3",
        });
    }
    if !(h > 0.0 && h.is_finite()) || quad_points_per_axis == 0 {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            reason: "step must be positive and the rule nonempty",
        });
    }
    let reach = f64::from(s * s) * h / 2.0;
    let (a, b) = intervals.outer();
    let (a1, b1) = intervals.inner();
    if a1 - reach < a || b1 + reach > b {
        return Err(Error::HTooLarge {
            h,
            lo: a1 - reach,
            hi: b1 + reach,
        });
    }
    Ok(SteklovMean {
        source: f.clone(),
        h,
        s,
        intervals,
        rule: GaussLegendre::cached(quad_points_per_axis),
    })
}

impl SteklovMean {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn intervals(&self) -> IntervalPair {
        self.intervals
    }

    /// `f_{h,s}(t)`
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.derivative(0, t)
    }

    /// `f^{(r)}_{h,s}(t)` for `r ≤ s`.
    pub fn derivative(&self, r: u32, t: f64) -> Result<f64> {
        if r > self.s {
            return Err(Error::MissingDerivative {
                label: format!("steklov({})", self.source.label()),
                available: self.s as usize,
                required: r as usize,
            });
        }
        let (a1, b1) = self.intervals.inner();
        let slack = 1e-12 * (b1 - a1);
        if t < a1 - slack || t > b1 + slack {
            return Err(Error::Domain {
                label: format!("steklov({})", self.source.label()),
                t,
            });
        }
        let dims = (self.s - r) as usize;
        let mut total = 0.0;
        for i in 1..=self.s {
            let width = f64::from(i) * self.h;
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            let coef = sign * binomial(self.s, i) / width.powi(r as i32);
            total += coef * self.expect(dims, width, |v| self.central_difference(r, width, t + v))?;
        }
        Ok(total)
    }

    /// `Σ_m (-1)^{r-m} C(r,m) f(y + (m - r/2) w)`
    fn central_difference(&self, r: u32, width: f64, y: f64) -> Result<f64> {
        forward_difference(&self.source, r, width, y - f64::from(r) * width / 2.0)
    }

    /// `E g(w (u_1 + ... + u_d))` for independent uniforms on `[-1/2, 1/2]`.
    fn expect(&self, dims: usize, width: f64, g: impl Fn(f64) -> Result<f64>) -> Result<f64> {
        let nodes = self.rule.nodes();
        let weights = self.rule.weights();
        let q = nodes.len();
        if dims == 0 {
            return g(0.0);
        }
        let mut index = vec![0usize; dims];
        let mut sum = 0.0;
        loop {
            let mut offset = 0.0;
            let mut weight = 1.0;
            for &j in &index {
                offset += 0.5 * nodes[j];
                weight *= 0.5 * weights[j];
            }
            sum += weight * g(width * offset)?;
            let mut axis = 0;
            loop {
                index[axis] += 1;
                if index[axis] < q {
                    break;
                }
                index[axis] = 0;
                axis += 1;
                if axis == dims {
                    return Ok(sum);
                }
            }
        }
    }
}

/// Points used for sup-norms on `[lo, hi]`: 201 uniform nodes plus interior kinks.
pub fn norm_grid(f: &FunctionSpec, lo: f64, hi: f64) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..=200).map(|i| lo + (hi - lo) * i as f64 / 200.0).collect();
    xs.extend(f.kinks().iter().copied().filter(|k| *k > lo && *k < hi));
    xs
}

fn sup_norm(xs: &[f64], g: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    xs.iter().try_fold(0.0f64, |acc, &x| Ok(acc.max(g(x)?.abs())))
}

/// Per-step measurements behind the Steklov property report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteklovStep {
    pub h: f64,
    /// `‖f - f_{h,s}‖` on the inner interval.
    pub distance: f64,
    /// `‖f^{(r)}_{h,s}‖` on the inner interval for `r = 1..=s`.
    pub derivative_norms: Vec<f64>,
    /// `ω_r(f, h, [a, b])` for `r = 1..=s`.
    pub moduli: Vec<f64>,
    /// `‖f_{h,s}‖` on the inner interval.
    pub mean_norm: f64,
    /// `h^r ‖f^{(r)}_{h,s}‖ / ω_r(f, h)` for `r = 1..=s`.
    pub ratio_b: Vec<f64>,
    /// `‖f - f_{h,s}‖ / ω_s(f, h)`
    pub ratio_c: f64,
    /// `‖f_{h,s}‖ / ‖f‖_{[a,b]}`
    pub ratio_d: f64,
    /// `h^s ‖f^{(s)}_{h,s}‖ / ‖f‖_{[a,b]}`
    pub ratio_e: f64,
}

/// Measurements for every step of a decreasing `h` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteklovProperties {
    pub label: String,
    pub s: u32,
    pub outer_norm: f64,
    pub steps: Vec<SteklovStep>,
}

/// Growth allowed between consecutive steps before a constant counts as growing.
pub const GROWTH_SLACK: f64 = 0.10;

fn non_growing(values: &[f64]) -> bool {
    values
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + GROWTH_SLACK) + 1e-9)
}

impl SteklovProperties {
    /// Largest ratio across the grid for each property, as `(name, max)`.
    pub fn empirical_constants(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for r in 0..self.s as usize {
            out.push((format!("b_r{}", r + 1), self.series(|st| st.ratio_b[r]).into_iter().fold(0.0, f64::max)));
        }
        for (name, get) in Self::scalar_series() {
            out.push((name.to_string(), self.series(get).into_iter().fold(0.0, f64::max)));
        }
        out
    }

    fn scalar_series() -> [(&'static str, fn(&SteklovStep) -> f64); 3] {
        [("c", |s| s.ratio_c), ("d", |s| s.ratio_d), ("e", |s| s.ratio_e)]
    }

    fn series(&self, get: impl Fn(&SteklovStep) -> f64) -> Vec<f64> {
        self.steps.iter().map(get).collect()
    }

    /// Whether every constant of properties (b)-(e) is non-growing as `h` shrinks.
    pub fn constants_non_growing(&self) -> bool {
        (0..self.s as usize).all(|r| non_growing(&self.series(|st| st.ratio_b[r])))
            && Self::scalar_series().iter().all(|(_, get)| non_growing(&self.series(get)))
    }

    pub fn report(&self) -> ExperimentReport {
        let mut rows = Vec::new();
        for st in &self.steps {
            let omega_s = st.moduli[self.s as usize - 1];
            rows.push(ReportRow::new(format!("h={};distance_vs_omega", st.h), 0.0, st.distance, omega_s));
            for r in 0..self.s as usize {
                rows.push(ReportRow::new(
                    format!("h={};h^{}*deriv{}_vs_omega{}", st.h, r + 1, r + 1, r + 1),
                    0.0,
                    st.h.powi(r as i32 + 1) * st.derivative_norms[r],
                    st.moduli[r],
                ));
            }
            rows.push(ReportRow::new(format!("h={};mean_norm_vs_norm", st.h), 0.0, st.mean_norm, self.outer_norm));
        }
        let ok = self.constants_non_growing();
        let verdict = if ok { Verdict::Pass } else { Verdict::Fail };
        let consts = self.empirical_constants();
        let summary = format!(
            "steklov s={} on {}: constants {} ({})",
            self.s,
            self.label,
            if ok { "non-growing" } else { "growing" },
            consts
                .iter()
                .map(|(k, v)| format!("{k}={v:.4}"))
                .collect::<Vec<_>>()
                .join(" ")
        );
        let mut report = ExperimentReport::new(rows, verdict, summary)
            .with_meta("function", &self.label)
            .with_meta("s", self.s)
            .with_meta("outer_norm", self.outer_norm);
        for (k, v) in consts {
            report = report.with_meta(format!("C_{k}"), v);
        }
        report
    }
}

const MODULUS_GRID: usize = 512;

/// Measure properties (b)-(e) of the Steklov mean along a decreasing `h` grid.
///
/// Property (b) is measured against `ω_r` for each `r ≤ s`: for `r < s` the
/// bound through `ω_s` cannot hold in general, since `ω_s` vanishes on
/// polynomials of degree below `s` whose lower derivatives do not.
pub fn steklov_properties(
    f: &FunctionSpec,
    s: u32,
    intervals: IntervalPair,
    h_grid: &[f64],
) -> Result<SteklovProperties> {
    if h_grid.is_empty() || h_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter {
            name: "h_grid",
            value: h_grid.first().copied().unwrap_or(f64::NAN),
            reason: "h grid must be nonempty and strictly decreasing",
        });
    }
    let (a, b) = intervals.outer();
    let (a1, b1) = intervals.inner();
    let outer_grid = norm_grid(f, a, b);
    let inner_grid = norm_grid(f, a1, b1);
    let outer_norm = sup_norm(&outer_grid, |t| checked(f, t))?;
    let moduli: Vec<Vec<f64>> = (1..=s)
        .map(|r| modulus_profile(f, r, h_grid, (a, b), MODULUS_GRID))
        .collect();
    let scale = outer_norm.max(f64::MIN_POSITIVE);
    let ratio = |num: f64, den: f64| if num <= 1e-11 * scale { 0.0 } else { num / den };

    let mut steps = Vec::with_capacity(h_grid.len());
    for (idx, &h) in h_grid.iter().enumerate() {
        let mean = steklov_mean(f, h, s, intervals, DEFAULT_QUAD_POINTS)?;
        let distance = sup_norm(&inner_grid, |t| Ok(checked(f, t)? - mean.eval(t)?))?;
        let mean_norm = sup_norm(&inner_grid, |t| mean.eval(t))?;
        let derivative_norms = (1..=s)
            .map(|r| sup_norm(&inner_grid, |t| mean.derivative(r, t)))
            .collect::<Result<Vec<_>>>()?;
        let step_moduli: Vec<f64> = moduli.iter().map(|m| m[idx]).collect();
        let ratio_b = (0..s as usize)
            .map(|r| ratio(h.powi(r as i32 + 1) * derivative_norms[r], step_moduli[r]))
            .collect();
        let ratio_c = ratio(distance, step_moduli[s as usize - 1]);
        let ratio_e = ratio(h.powi(s as i32) * derivative_norms[s as usize - 1], scale);
        steps.push(SteklovStep {
            h,
            distance,
            derivative_norms,
            moduli: step_moduli,
            mean_norm,
            ratio_b,
            ratio_c,
            ratio_d: mean_norm / scale,
            ratio_e,
        });
    }
    Ok(SteklovProperties {
        label: f.label().to_string(),
        s,
        outer_norm,
        steps,
    })
}

/// [`steklov_properties`] rendered as a report.
pub fn steklov_property_report(
    f: &FunctionSpec,
    s: u32,
    intervals: IntervalPair,
    h_grid: &[f64],
) -> Result<ExperimentReport> {
    Ok(steklov_properties(f, s, intervals, h_grid)?.report())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> IntervalPair {
        IntervalPair::new((0.25, 2.25), (0.75, 1.75)).unwrap()
    }

    #[test]
    fn difference_examples() {
        let lin = FunctionSpec::polynomial_from("lin", vec![3.0, -2.0]);
        assert_eq!(forward_difference(&lin, 2, 0.3, 1.1).unwrap().abs() < 1e-14, true);
        let sq = FunctionSpec::monomial(2);
        assert!((forward_difference(&sq, 2, 0.25, 3.0).unwrap() - 0.125).abs() < 1e-14);
        let cube = FunctionSpec::monomial(3);
        assert!((forward_difference(&cube, 3, 0.1, 0.7).unwrap() - 0.006).abs() < 1e-14);
        let inv = FunctionSpec::inv_one_plus();
        assert!(matches!(forward_difference(&inv, 1, 1.0, -2.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn modulus_examples() {
        assert_eq!(modulus_of_smoothness(&FunctionSpec::constant(2.0), 2, 0.1, (0.0, 1.0), 64), 0.0);
        let id = FunctionSpec::monomial(1);
        assert!((modulus_of_smoothness(&id, 1, 0.3, (0.0, 1.0), 64) - 0.3).abs() < 1e-15);
        let w = modulus_of_smoothness(&FunctionSpec::abs_shift(), 2, 0.1, (0.5, 1.5), 64);
        assert!((w - 0.2).abs() < 1e-14, "{w}");
    }

    #[test]
    fn steklov_of_square() {
        let mean = steklov_mean(&FunctionSpec::monomial(2), 0.2, 2, pair(), 16).unwrap();
        for &t in &[0.75, 1.0, 1.6] {
            assert!((mean.eval(t).unwrap() - (t * t - 0.04 / 3.0)).abs() < 1e-13);
            assert!((mean.derivative(1, t).unwrap() - 2.0 * t).abs() < 1e-12);
            assert!((mean.derivative(2, t).unwrap() - 2.0).abs() < 1e-9);
        }
        assert!(mean.eval(0.5).is_err());
        assert!(mean.derivative(3, 1.0).is_err());
    }

    #[test]
    fn steklov_h_too_large() {
        let err = steklov_mean(&FunctionSpec::monomial(2), 0.3, 2, pair(), 16).unwrap_err();
        assert!(matches!(err, Error::HTooLarge { .. }));
        assert!(steklov_mean(&FunctionSpec::monomial(2), 0.1, 4, pair(), 16).is_err());
    }

    #[test]
    fn profile_is_monotone() {
        let hs = [0.2, 0.13, 0.1, 0.07, 0.05];
        let w = modulus_profile(&FunctionSpec::exp_neg_sin(), 2, &hs, (0.25, 2.25), 64);
        for i in 1..hs.len() {
            assert!(w[i] <= w[i - 1]);
        }
    }
}
