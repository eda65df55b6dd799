//! Integration against the Erlang densities `θ_{n,k}`.
//!
//! After the substitution `u = n t` the weight becomes the Poisson-shaped
//! `u^k e^{-u} / k!`, independent of `n`. The core window around the Gamma
//! mean is covered by Gauss-Legendre panels that are bisected until an
//! embedded half-order rule agrees; the right tail is then marched with
//! geometrically widening panels until contributions drop below rounding.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::config::QuadratureConfig;
use crate::error::{Error, Result};
use crate::function::FunctionSpec;
use crate::special::{bd0, stirlerr};

/// Half-width of the core window, in standard deviations of the tilted weight.
const CORE_HALF_WIDTH: f64 = 12.0;
/// Relative size below which a marched tail panel ends the march.
const TAIL_STOP: f64 = 1e-17;
const MAX_TAIL_PANELS: usize = 400;

/// Nodes and weights of an N-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on the Legendre three-term recurrence.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let nf = order as f64;
        for i in 0..(order + 1) / 2 {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, z);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[order - 1 - i] = z;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared rule of the given order; built on first use.
    pub fn cached(order: usize) -> Arc<GaussLegendre> {
        static RULES: OnceLock<RwLock<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let rules = RULES.get_or_init(|| RwLock::new(HashMap::new()));
        if let Some(rule) = rules.read().expect("rule table poisoned").get(&order) {
            return rule.clone();
        }
        let mut table = rules.write().expect("rule table poisoned");
        table
            .entry(order)
            .or_insert_with(|| Arc::new(GaussLegendre::new(order)))
            .clone()
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Returns `(∫_a^b f, ∫_a^b |f|)`.
    pub fn integrate<F>(&self, f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        let mut abs = 0.0;
        for (&z, &w) in self.nodes.iter().zip(&self.weights) {
            let v = w * f(mid + half * z)?;
            sum += v;
            abs += v.abs();
        }
        Ok((sum * half, abs * half.abs()))
    }
}

fn legendre_with_derivative(order: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for j in 2..=order {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = order as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// A quadrature result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
}

struct PanelSum {
    value: f64,
    error: f64,
    abs: f64,
}

/// Adaptive integration of `f` over `[a, b]`, bisecting until the full and
/// half-order rules agree to `tol`.
///
/// Each half gets half the tolerance. At the deepest level a panel is still
/// accepted when the rules agree to `root_tol`; this only happens next to
/// integrable singularities of a derivative, which touch a bounded number of
/// panels.
#[allow(clippy::too_many_arguments)]
fn adaptive_panel<F>(
    f: &mut F,
    a: f64,
    b: f64,
    tol: f64,
    root_tol: f64,
    depth: u32,
    cfg: &QuadratureConfig,
    full: &GaussLegendre,
    half: &GaussLegendre,
) -> Result<std::result::Result<PanelSum, f64>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (fine, abs) = full.integrate(f, a, b)?;
    let (coarse, _) = half.integrate(f, a, b)?;
    let diff = (fine - coarse).abs();
    let rounding = 32.0 * f64::EPSILON * abs;
    if diff <= tol.max(rounding) {
        return Ok(Ok(PanelSum {
            value: fine,
            error: diff.min(tol) + rounding,
            abs,
        }));
    }
    if depth >= cfg.max_refinements {
        if diff <= root_tol {
            return Ok(Ok(PanelSum {
                value: fine,
                error: diff + rounding,
                abs,
            }));
        }
        return Ok(Err(diff));
    }
    let m = 0.5 * (a + b);
    let left = adaptive_panel(f, a, m, 0.5 * tol, root_tol, depth + 1, cfg, full, half)?;
    let right = adaptive_panel(f, m, b, 0.5 * tol, root_tol, depth + 1, cfg, full, half)?;
    Ok(match (left, right) {
        (Ok(l), Ok(r)) => Ok(PanelSum {
            value: l.value + r.value,
            error: l.error + r.error,
            abs: l.abs + r.abs,
        }),
        (Err(e), Ok(_)) | (Ok(_), Err(e)) => Err(e),
        (Err(e1), Err(e2)) => Err(e1 + e2),
    })
}

/// Integrator over a list of breakpoints with a fixed absolute tolerance per panel.
struct Integrator<'a> {
    cfg: &'a QuadratureConfig,
    full: Arc<GaussLegendre>,
    half: Arc<GaussLegendre>,
}

impl<'a> Integrator<'a> {
    fn new(cfg: &'a QuadratureConfig) -> Self {
        Self {
            cfg,
            full: GaussLegendre::cached(cfg.base_order),
            half: GaussLegendre::cached((cfg.base_order / 2).max(4)),
        }
    }

    fn panel<F>(&self, f: &mut F, a: f64, b: f64, tol: f64) -> Result<std::result::Result<PanelSum, f64>>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        adaptive_panel(f, a, b, tol, tol, 0, self.cfg, &self.full, &self.half)
    }

    /// [`Self::panel`], substituting `u = a + (b-a) v²` (or its mirror) when an
    /// end sits on a kink, which turns `sqrt`-type endpoint behaviour smooth.
    fn segment<F>(&self, f: &mut F, a: f64, b: f64, tol: f64, kinks: &[f64]) -> Result<std::result::Result<PanelSum, f64>>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let on_kink = |u: f64| kinks.iter().any(|&k| (k - u).abs() <= 1e-12 * k.abs().max(1.0));
        let width = b - a;
        match (on_kink(a), on_kink(b)) {
            (false, false) => self.panel(f, a, b, tol),
            (true, false) => self.panel(&mut |v: f64| Ok(2.0 * width * v * f(a + width * v * v)?), 0.0, 1.0, tol),
            (false, true) => self.panel(&mut |v: f64| Ok(2.0 * width * v * f(b - width * v * v)?), 0.0, 1.0, tol),
            (true, true) => {
                let m = 0.5 * (a + b);
                let left = self.segment(f, a, m, 0.5 * tol, kinks)?;
                let right = self.segment(f, m, b, 0.5 * tol, kinks)?;
                Ok(match (left, right) {
                    (Ok(l), Ok(r)) => Ok(PanelSum {
                        value: l.value + r.value,
                        error: l.error + r.error,
                        abs: l.abs + r.abs,
                    }),
                    (Err(e), _) | (_, Err(e)) => Err(e),
                })
            }
        }
    }
}

/// Precomputed `ln` of the Poisson-shaped weight `u^k e^{-u} / k!`.
#[derive(Debug, Clone, Copy)]
struct ErlangWeight {
    k: u64,
    kf: f64,
    ln_const: f64,
}

impl ErlangWeight {
    fn new(k: u64) -> Self {
        let kf = k as f64;
        let ln_const = if k == 0 {
            0.0
        } else {
            -stirlerr(kf) - 0.5 * (2.0 * PI * kf).ln()
        };
        Self { k, kf, ln_const }
    }

    #[inline]
    fn eval(&self, u: f64) -> f64 {
        if self.k == 0 {
            return (-u).exp();
        }
        if u <= 0.0 {
            return 0.0;
        }
        (self.ln_const - bd0(self.kf, u)).exp()
    }

    #[inline]
    fn ln_eval(&self, u: f64) -> f64 {
        if self.k == 0 {
            return -u;
        }
        if u <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.ln_const - bd0(self.kf, u)
    }
}

fn check_growth(g: &FunctionSpec, n: f64) -> Result<()> {
    if g.growth_rate() >= n {
        return Err(Error::Growth {
            label: g.label().to_string(),
            growth: g.growth_rate(),
            n,
        });
    }
    Ok(())
}

/// Integrand `u ↦ (u^k e^{-u}/k!) g(u/n)` with a finiteness check.
fn erlang_integrand<'g>(g: &'g FunctionSpec, n: f64, weight: ErlangWeight) -> impl FnMut(f64) -> Result<f64> + 'g {
    move |u: f64| {
        let w = weight.eval(u);
        if w == 0.0 {
            return Ok(0.0);
        }
        let t = u / n;
        let gamma = g.growth_rate();
        if gamma > 0.0 {
            if let Some(d) = g.eval_damped(t) {
                return Ok((weight.ln_eval(u) + gamma * t).exp() * d);
            }
        }
        let v = g.eval(t);
        if !v.is_finite() {
            return Err(Error::Domain {
                label: g.label().to_string(),
                t,
            });
        }
        Ok(w * v)
    }
}

/// Sorted breakpoints of `[a, b]`: the ends, kinks of `g` in `u` units, and
/// uniform cuts no wider than `max_width`.
fn breakpoints(a: f64, b: f64, kinks_u: &[f64], max_width: f64) -> Vec<f64> {
    let mut pts = vec![a, b];
    pts.extend(kinks_u.iter().copied().filter(|&u| u > a && u < b));
    if max_width.is_finite() && max_width > 0.0 {
        let pieces = ((b - a) / max_width).ceil().min(1e4) as usize;
        for i in 1..pieces {
            pts.push(a + (b - a) * i as f64 / pieces as f64);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * y.abs().max(1e-300));
    pts
}

/// `∫_0^∞ θ_{n,k}(t) g(t) dt` together with an error estimate.
pub fn erlang_integral(g: &FunctionSpec, n: f64, k: u64, cfg: &QuadratureConfig) -> Result<Integral> {
    check_growth(g, n)?;
    let integ = Integrator::new(cfg);
    let weight = ErlangWeight::new(k);
    let mut f = erlang_integrand(g, n, weight);

    let rho = 1.0 - g.growth_rate() / n;
    let shape = k as f64 + 1.0;
    let mean = shape / rho;
    let sd = shape.sqrt() / rho;
    let lo = (mean - CORE_HALF_WIDTH * sd).max(0.0);
    let hi = mean + CORE_HALF_WIDTH * sd;
    let kinks_u: Vec<f64> = g.kinks().iter().map(|&t| t * n).collect();

    let nonconvergent = |est: f64| Error::NonConvergent {
        n,
        k,
        error_estimate: est,
    };

    // Scale from a single pass over the core, used to set absolute tolerances.
    let (probe, probe_abs) = integ.full.integrate(&mut f, lo, hi)?;
    let scale = probe_abs.max(probe.abs());
    let tol = cfg.abs_tolerance.max(cfg.rel_tolerance * scale);

    let mut value = 0.0;
    let mut error = 0.0;
    let mut total_abs = 0.0;

    let mut segments = Vec::new();
    if lo > 0.0 {
        segments.extend(breakpoints(0.0, lo, &kinks_u, f64::INFINITY).windows(2).map(|w| (w[0], w[1])));
    }
    segments.extend(breakpoints(lo, hi, &kinks_u, f64::INFINITY).windows(2).map(|w| (w[0], w[1])));
    for (a, b) in segments {
        match integ.segment(&mut f, a, b, tol, &kinks_u)? {
            Ok(p) => {
                value += p.value;
                error += p.error;
                total_abs += p.abs;
            }
            Err(est) => return Err(nonconvergent(est)),
        }
    }

    // March the right tail.
    let mut a = hi;
    let mut width = 4.0 * sd;
    let mut marched = 0;
    loop {
        let b = a + width;
        let mut cuts = breakpoints(a, b, &kinks_u, f64::INFINITY);
        cuts.dedup();
        let mut panel_value = 0.0;
        let mut panel_abs = 0.0;
        for w in cuts.windows(2) {
            match integ.segment(&mut f, w[0], w[1], tol, &kinks_u)? {
                Ok(p) => {
                    panel_value += p.value;
                    panel_abs += p.abs;
                    error += p.error;
                }
                Err(est) => return Err(nonconvergent(est)),
            }
        }
        value += panel_value;
        total_abs += panel_abs;
        marched += 1;
        if panel_abs <= TAIL_STOP * total_abs || panel_abs <= 1e-3 * cfg.abs_tolerance * TAIL_STOP {
            // The next panel is at most comparable to this one for every admissible g.
            error += panel_abs;
            break;
        }
        if marched >= MAX_TAIL_PANELS {
            return Err(nonconvergent(panel_abs));
        }
        a = b;
        width *= 1.5;
    }

    Ok(Integral {
        value,
        error_estimate: error + 16.0 * f64::EPSILON * total_abs,
    })
}

/// `∫_{t_lo}^{t_hi} θ_{n,k}(t) g(t) dt` over a finite range.
pub fn erlang_integral_between(
    g: &FunctionSpec,
    n: f64,
    k: u64,
    t_lo: f64,
    t_hi: f64,
    cfg: &QuadratureConfig,
) -> Result<Integral> {
    check_growth(g, n)?;
    if t_hi <= t_lo {
        return Ok(Integral {
            value: 0.0,
            error_estimate: 0.0,
        });
    }
    let integ = Integrator::new(cfg);
    let weight = ErlangWeight::new(k);
    let mut f = erlang_integrand(g, n, weight);
    let rho = 1.0 - g.growth_rate() / n;
    let shape = k as f64 + 1.0;
    let sd = shape.sqrt() / rho;
    let kinks_u: Vec<f64> = g.kinks().iter().map(|&t| t * n).collect();
    let (a, b) = (n * t_lo.max(0.0), n * t_hi);
    let mut cuts = breakpoints(a, b, &kinks_u, 8.0 * sd);
    let mean = shape / rho;
    if mean > a && mean < b {
        cuts.push(mean);
        cuts.sort_by(f64::total_cmp);
    }

    let mut scale: f64 = 0.0;
    for w in cuts.windows(2) {
        let (v, abs) = integ.full.integrate(&mut f, w[0], w[1])?;
        scale += abs.max(v.abs());
    }
    let tol = (cfg.abs_tolerance * 1e-6).max(cfg.rel_tolerance * scale);

    let mut value = 0.0;
    let mut error = 0.0;
    let mut total_abs = 0.0;
    for w in cuts.windows(2) {
        match integ.segment(&mut f, w[0], w[1], tol, &kinks_u)? {
            Ok(p) => {
                value += p.value;
                error += p.error;
                total_abs += p.abs;
            }
            Err(est) => {
                return Err(Error::NonConvergent {
                    n,
                    k,
                    error_estimate: est,
                })
            }
        }
    }
    Ok(Integral {
        value,
        error_estimate: error + 16.0 * f64::EPSILON * total_abs,
    })
}

/// Chernoff bound on `P(Gamma(shape, rate) > threshold)`.
pub fn gamma_upper_tail_bound(shape: f64, rate: f64, threshold: f64) -> f64 {
    let y = rate * threshold;
    if y <= shape {
        return 1.0;
    }
    (-(y - shape - shape * (y / shape).ln())).exp()
}

/// `∫ θ_{n,k}(t) p(t) dt` for a polynomial `p`, from the Gamma moments
/// `∫ θ_{n,k}(t) t^j dt = (k+1)_j / n^j`.
pub fn polynomial_erlang_integral(coeffs: &[f64], n: f64, k: u64) -> f64 {
    debug_assert!(coeffs.len() <= 31, "degree above 30");
    let mut moment = 1.0;
    let mut sum = 0.0;
    for (j, &c) in coeffs.iter().enumerate() {
        if j > 0 {
            moment *= (k as f64 + j as f64) / n;
        }
        sum += c * moment;
    }
    sum
}
