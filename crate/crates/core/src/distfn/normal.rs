//! Standard normal density, survival function and inverse survival function.
//!
//! The survival function is evaluated through `erfc` up to x = 30 and through
//! the Laplace continued fraction for the Mills ratio beyond, so that
//! `log_sf` stays finite far past the point where `sf` underflows.
//!
//! Quantiles are seeded with Wichura's AS241 (PPND16) rational approximation
//! and polished by a bracketed Newton iteration on the log scale.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

use super::special::solve_bracketed;

pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Switch point between `erfc` and the Mills-ratio continued fraction.
const CF_SWITCH: f64 = 30.0;

#[inline]
pub(crate) fn pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
pub(crate) fn log_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

#[inline]
pub(crate) fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

#[inline]
pub(crate) fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub(crate) fn log_sf(x: f64) -> f64 {
    if x < 0.0 {
        (-cdf(x)).ln_1p()
    } else if x <= CF_SWITCH {
        sf(x).ln()
    } else {
        log_pdf(x) + mills_ratio(x).ln()
    }
}

/// Φ̄(x)/φ(x) for large positive x.
fn mills_ratio(x: f64) -> f64 {
    let mut t = x;
    for k in (1..=60).rev() {
        t = x + k as f64 / t;
    }
    1.0 / t
}

/// P(a <= Z <= b) for standard normal Z, without cancellation in the tails.
pub(crate) fn interval_prob(a: f64, b: f64) -> f64 {
    if b <= a {
        0.0
    } else if a >= 0.0 {
        sf(a) - sf(b)
    } else if b <= 0.0 {
        cdf(b) - cdf(a)
    } else {
        1.0 - sf(b) - cdf(a)
    }
}

/// Φ⁻¹ from the lower-tail probability, given as `q` together with `log q`.
///
/// AS241: relative accuracy about 1e-16 over the whole range.
#[allow(clippy::excessive_precision)]
pub(crate) fn ppnd16(q: f64, log_q: f64) -> f64 {
    let d = q - 0.5;
    if d.abs() <= 0.425 {
        let r = 0.180625 - d * d;
        let num = (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_813e4) * r
            + 6.726_577_092_700_87e4)
            * r
            + 4.592_195_393_154_987e4)
            * r
            + 1.373_169_376_550_946e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5)
            * d;
        let den = ((((((5.226_495_278_852_854_5e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return num / den;
    }
    // tail: r = sqrt(-log(min(q, 1 - q)))
    let (r, negative) = if d < 0.0 {
        ((-log_q).sqrt(), true)
    } else {
        ((-(1.0 - q).ln()).sqrt(), false)
    };
    let x = if r <= 5.0 {
        let r = r - 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_8e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_758_8)
            * r
            + 1.0;
        num / den
    } else {
        let r = r - 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_445_9e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if negative {
        -x
    } else {
        x
    }
}

/// Fast Φ⁻¹(u) for u in (0, 1), without refinement.
#[inline]
pub(crate) fn ppf_fast(u: f64) -> f64 {
    ppnd16(u, u.ln())
}

/// Solves `log_sf(x) = log_p` for `log_p <= -ln 2` (so x >= 0).
fn upper_root(log_p: f64) -> f64 {
    let seed = -ppnd16(log_p.exp(), log_p);
    let hi = (-2.0 * log_p).sqrt() + 1.0;
    solve_bracketed(
        |x| {
            let ls = log_sf(x);
            (ls - log_p, -(log_pdf(x) - ls).exp())
        },
        seed,
        0.0,
        hi,
        1e-15,
    )
}

/// Φ̄⁻¹ from a log probability `log_p < 0`.
pub(crate) fn isf_log(log_p: f64) -> f64 {
    if log_p <= -LN_2 {
        upper_root(log_p)
    } else {
        // p > 1/2: Φ̄⁻¹(p) = -Φ̄⁻¹(1 - p)
        let log_q = (-log_p.exp_m1()).ln();
        -upper_root(log_q)
    }
}

pub(crate) fn isf(p: f64) -> f64 {
    if p <= 0.5 {
        upper_root(p.ln())
    } else {
        -upper_root((1.0 - p).ln())
    }
}
