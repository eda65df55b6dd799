//! Saddle-point forms of the Poisson and binomial log-masses.
//!
//! Plain `k ln(λ) - λ - ln k!` loses most of its significant digits once the
//! terms reach 1e4 or so, which is exactly where the operator windows live for
//! large `n x`. The deviance form below (Loader, 2000) keeps the relative error
//! of the mass at a few ulps for every argument size.

use std::f64::consts::PI;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `stirlerr(n)` at n = 0, 0.5, 1, ..., 15.
const STIRLERR_HALVES: [f64; 31] = [
    0.0,
    0.153_426_409_720_027_345_29,
    0.081_061_466_795_327_258_22,
    0.054_814_121_051_917_653_896,
    0.041_340_695_955_409_294_094,
    0.033_162_873_519_936_287_485,
    0.027_677_925_684_998_339_149,
    0.023_746_163_656_297_495_971,
    0.020_790_672_103_765_093_112,
    0.018_488_450_532_673_185_231,
    0.016_644_691_189_821_192_163,
    0.015_134_973_221_917_378_874,
    0.013_876_128_823_070_747_999,
    0.012_810_465_242_920_226_924,
    0.011_896_709_945_891_770_095,
    0.011_104_559_758_206_917_327,
    0.010_411_265_261_972_096_497,
    0.009_799_416_126_158_803_298_4,
    0.009_255_462_182_712_732_917_7,
    0.008_768_700_134_139_385_463,
    0.008_330_563_433_362_871_256_5,
    0.007_934_114_564_314_020_547_2,
    0.007_573_675_487_951_840_795,
    0.007_244_554_301_320_383_179_5,
    0.006_942_840_107_209_529_865_7,
    0.006_665_247_032_707_682_442_4,
    0.006_408_994_188_004_207_068_4,
    0.006_171_712_263_039_457_647_5,
    0.005_951_370_112_758_847_735_6,
    0.005_746_216_513_010_115_682,
    0.005_554_733_551_962_801_371,
];

/// Natural log of the gamma function.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Error of Stirling's approximation: `ln Γ(n+1) - (n + 1/2) ln n + n - ln √(2π)`.
pub fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;

    if n <= 15.0 {
        let twice = n + n;
        if twice == twice.floor() {
            return STIRLERR_HALVES[twice as usize];
        }
        return ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x / np) + np - x`, evaluated without cancellation near `x = np`.
pub fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        if s.abs() < f64::MIN_POSITIVE {
            return s;
        }
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `ln(λ^k e^{-λ} / k!)`.
pub fn ln_poisson_pmf(k: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if k == 0 {
        return -lambda;
    }
    let kf = k as f64;
    -stirlerr(kf) - bd0(kf, lambda) - 0.5 * (2.0 * PI * kf).ln()
}

/// `ln( C(total, x) p^x q^{total-x} )` for real `x` and `total`, with `p + q = 1`
/// supplied separately so neither is formed by subtraction.
pub fn ln_binomial_raw(x: f64, total: f64, p: f64, q: f64) -> f64 {
    if p == 0.0 {
        return if x == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if x == total { 0.0 } else { f64::NEG_INFINITY };
    }
    if x == 0.0 {
        if total == 0.0 {
            return 0.0;
        }
        return if p < 0.1 {
            -bd0(total, total * q) - total * p
        } else {
            total * q.ln()
        };
    }
    if x == total {
        return if q < 0.1 {
            -bd0(total, total * p) - total * q
        } else {
            total * p.ln()
        };
    }
    if x < 0.0 || x > total {
        return f64::NEG_INFINITY;
    }
    let lc = stirlerr(total) - stirlerr(x) - stirlerr(total - x) - bd0(x, total * p) - bd0(total - x, total * q);
    let lf = 2.0 * LN_SQRT_2PI + x.ln() + (-x / total).ln_1p();
    lc - 0.5 * lf
}

/// `ln( (size)_k / k! · prob^size · (1-prob)^k )`, the negative-binomial log-mass.
///
/// `prob` and `one_minus_prob` are both passed in; callers usually know each in
/// closed form.
pub fn ln_negative_binomial_pmf(k: u64, size: f64, prob: f64, one_minus_prob: f64) -> f64 {
    let kf = k as f64;
    if k == 0 {
        return ln_binomial_raw(size, size, prob, one_minus_prob);
    }
    (size / (size + kf)).ln() + ln_binomial_raw(size, size + kf, prob, one_minus_prob)
}
