use hybrid_operator::moments::{
    central_from_raw, central_moment_recurrence, printed_transformed_second_moment, raw_moment_closed,
    transformed_second_central_moment,
};
use hybrid_operator::operator::{apply, derivative_of_operator, operator_mgf, tail_mass};
use hybrid_operator::{EvalConfig, FunctionSpec, OperatorParams};
use proptest::prelude::*;

fn params(n: f64, c: f64) -> OperatorParams {
    OperatorParams::new(n, c).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn operator_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, n in 2.0f64..120.0, c in 0.05f64..=1.0, x in 0.0f64..3.0) {
        let cfg = EvalConfig::default();
        let p = params(n, c);
        let f = FunctionSpec::exp_neg_sin();
        let g = FunctionSpec::inv_one_plus();
        let combo = FunctionSpec::linear_combination(a, &f, b, &g);
        let lc = apply(&combo, x, &p, &cfg).unwrap();
        let lf = apply(&f, x, &p, &cfg).unwrap();
        let lg = apply(&g, x, &p, &cfg).unwrap();
        let budget = lc.error_bound() + a.abs() * lf.error_bound() + b.abs() * lg.error_bound() + 1e-15;
        prop_assert!((lc.value - (a * lf.value + b * lg.value)).abs() <= budget);
    }

    #[test]
    fn operator_is_positive(n in 1.0f64..200.0, c in 0.05f64..=1.0, x in 0.0f64..4.0, which in 0usize..5) {
        let f = match which {
            0 => FunctionSpec::abs_shift(),
            1 => FunctionSpec::monomial(5),
            2 => FunctionSpec::exp_neg(),
            3 => FunctionSpec::inv_one_plus(),
            _ => FunctionSpec::centered_power(1.0, 4),
        };
        let v = apply(&f, x, &params(n, c), &EvalConfig::default()).unwrap();
        prop_assert!(v.value >= -1e-12);
    }

    #[test]
    fn operator_matches_mgf(n in 2.0f64..500.0, c in 0.05f64..=1.0, x in 0.0f64..4.0, frac in -1.0f64..=1.0) {
        let p = params(n, c);
        let theta = frac * 0.5 * n / (1.0 + c * x);
        let v = apply(&FunctionSpec::exp_theta(theta), x, &p, &EvalConfig::default()).unwrap();
        let m = operator_mgf(theta, x, &p).unwrap();
        prop_assert!(rel(v.value, m) <= 1e-8, "{} vs {m}", v.value);
    }

    #[test]
    fn recurrence_agrees_with_binomial_expansion(n in 1.0f64..5000.0, c in 0.01f64..=1.0) {
        let p = params(n, c);
        let rec = central_moment_recurrence(&p, 8);
        for m in 0..=8u32 {
            let bin = central_from_raw(&p, m);
            prop_assert!(bin.degree() <= m as usize);
            prop_assert!(rec[m as usize].degree() <= m as usize);
            for j in 0..=m as usize {
                prop_assert!(rel(rec[m as usize].poly.coeff(j), bin.poly.coeff(j)) <= 1e-10, "m {m} j {j}");
            }
        }
    }
}

fn fd(f: &dyn Fn(f64) -> f64, r: u32, x: f64, h: f64) -> f64 {
    match r {
        1 => (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h),
        _ => (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h),
    }
}

#[test]
fn derivative_transfer_matches_finite_differences() {
    let cfg = EvalConfig::default();
    for f in [FunctionSpec::exp_neg_sin(), FunctionSpec::inv_one_plus(), FunctionSpec::monomial(4)] {
        for &(n, c) in &[(8.0, 0.3), (30.0, 0.5), (100.0, 1.0)] {
            let p = params(n, c);
            for &x in &[0.4, 1.0, 2.5] {
                for r in 1..=2 {
                    let op = |y: f64| apply(&f, y, &p, &cfg).unwrap().value;
                    let reference = fd(&op, r, x, 5e-3);
                    let d = derivative_of_operator(&f, r, x, &p, &cfg).unwrap().value;
                    assert!(rel(d, reference) <= 1e-4, "{} n {n} c {c} x {x} r {r}: {d} vs {reference}", f.label());
                }
            }
        }
    }
}

#[test]
fn second_derivative_of_square() {
    let cfg = EvalConfig::default();
    let v = derivative_of_operator(&FunctionSpec::monomial(2), 2, 1.0, &params(10.0, 0.5), &cfg).unwrap();
    assert!((v.value - 2.1).abs() < 1e-10, "{}", v.value);
}

#[test]
fn tails_do_not_grow_along_doubling_n() {
    let cfg = EvalConfig::default();
    for &c in &[0.25, 1.0] {
        for &(x, delta) in &[(1.0, 0.5), (2.0, 0.5), (0.5, 0.3)] {
            for &gamma in &[0.0, 1.0] {
                let tails: Vec<f64> = [25.0, 50.0, 100.0, 200.0, 400.0]
                    .iter()
                    .map(|&n| tail_mass(&params(n, c), x, delta, gamma, &cfg).unwrap())
                    .collect();
                for w in tails.windows(2) {
                    assert!(w[1] <= w[0], "c {c} x {x} gamma {gamma}: {tails:?}");
                }
            }
        }
    }
}

/// r-th derivative by central differences, Richardson-extrapolated in `h²`.
fn richardson_derivative(f: &dyn Fn(f64) -> f64, r: u32, at: f64, h: f64, levels: usize) -> f64 {
    let central = |h: f64| {
        let mut s = 0.0;
        let mut binom = 1.0;
        for i in 0..=r {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * binom * f(at + (f64::from(r) / 2.0 - f64::from(i)) * h);
            binom *= f64::from(r - i) / f64::from(i + 1);
        }
        s / h.powi(r as i32)
    };
    let mut table: Vec<f64> = (0..levels).map(|j| central(h / 2f64.powi(j as i32))).collect();
    for k in 1..levels {
        let factor = 4f64.powi(k as i32);
        for j in (k..levels).rev() {
            table[j] = (factor * table[j] - table[j - 1]) / (factor - 1.0);
        }
    }
    table[levels - 1]
}

#[test]
fn closed_raw_moments_match_mgf_derivatives() {
    for &(n, c) in &[(5.0, 0.2), (20.0, 0.5), (60.0, 1.0)] {
        let p = params(n, c);
        for &x in &[0.0, 0.7, 2.0] {
            let radius = n / (1.0 + c * x);
            let mgf = |theta: f64| operator_mgf(theta, x, &p).unwrap();
            for r in 1..=4u32 {
                let numeric = richardson_derivative(&mgf, r, 0.0, radius / 8.0, 6);
                let closed = raw_moment_closed(&p, r).eval(x);
                assert!(rel(numeric, closed) <= 1e-6, "n {n} c {c} x {x} r {r}: {numeric} vs {closed}");
            }
        }
    }
}

#[test]
fn operator_reproduces_raw_moments() {
    let cfg = EvalConfig::default();
    for &(n, c) in &[(3.0, 0.1), (17.0, 0.6), (150.0, 1.0)] {
        let p = params(n, c);
        for r in 0..=6 {
            let m = raw_moment_closed(&p, r as u32);
            for &x in &[0.0, 0.5, 1.5, 4.0] {
                let v = apply(&FunctionSpec::monomial(r), x, &p, &cfg).unwrap().value;
                assert!(rel(v, m.eval(x)) <= 1e-8, "n {n} c {c} r {r} x {x}");
            }
        }
    }
}

/// `E[(K+r+1)(K+r+2)]/n² - 2x E[K+r+1]/n + x²` with `K` negative binomial of
/// mean `m = (n+rc)x` and variance `m(1+cx)`.
fn transformed_second_moment_oracle(n: f64, c: f64, r: u32, x: f64) -> f64 {
    let r = f64::from(r);
    let m = (n + r * c) * x;
    let v = m * (1.0 + c * x);
    (v + m * m + (2.0 * r + 3.0) * m + (r + 1.0) * (r + 2.0)) / (n * n) - 2.0 * x * (m + r + 1.0) / n + x * x
}

#[test]
fn transformed_second_moment_against_oracle_and_printed_form() {
    let cfg = EvalConfig::default();
    for &(n, c) in &[(10.0, 0.5), (50.0, 1.0), (200.0, 0.3)] {
        let p = params(n, c);
        for r in 0..=3 {
            for &x in &[0.0, 0.8, 2.0] {
                let got = transformed_second_central_moment(&p, r, x, &cfg).unwrap();
                let oracle = transformed_second_moment_oracle(n, c, r, x);
                assert!(rel(got.numeric, oracle) <= 1e-9, "n {n} c {c} r {r} x {x}");
            }
        }
    }
    // The printed closed form is exact at c = 1 and drifts for c < 1: at
    // r=2, c=0.5, n=50, x=1 the moment is 146.5/2500, the printed form 158/2500.
    let p = params(50.0, 1.0);
    let got = transformed_second_central_moment(&p, 2, 1.0, &cfg).unwrap();
    assert!(got.relative_discrepancy() < 1e-10);
    let p = params(50.0, 0.5);
    assert!((transformed_second_moment_oracle(50.0, 0.5, 2, 1.0) - 146.5 / 2500.0).abs() < 1e-15);
    assert!((printed_transformed_second_moment(&p, 2, 1.0) - 158.0 / 2500.0).abs() < 1e-15);
    let got = transformed_second_central_moment(&p, 2, 1.0, &cfg).unwrap();
    assert!(got.relative_discrepancy() > 0.05);
}
