//! Regularized incomplete beta and gamma functions.
//!
//! Continued fractions use the modified Lentz algorithm; the incomplete gamma
//! switches between the power series (x < a + 1) and the Legendre continued
//! fraction, the incomplete beta uses the symmetry `I_x(a, b) = 1 - I_{1-x}(b, a)`
//! so that the fraction is always evaluated on its fast side.

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 200_000;

pub(crate) fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `log I_x(a, b)` and `log(1 - I_x(a, b))`.
///
/// `y` must equal `1 - x`; callers pass it separately so that it can be
/// formed without cancellation (e.g. `t^2 / (nu + t^2)` for Student tails).
pub(crate) fn ln_beta_inc(a: f64, b: f64, x: f64, y: f64) -> (f64, f64) {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    if y <= 0.0 {
        return (0.0, f64::NEG_INFINITY);
    }
    let ln_front = a * x.ln() + b * y.ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        let ln_lower = ln_front + beta_cf(a, b, x).ln() - a.ln();
        (ln_lower, ln_1m_exp(ln_lower))
    } else {
        let ln_upper = ln_front + beta_cf(b, a, y).ln() - b.ln();
        (ln_1m_exp(ln_upper), ln_upper)
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized lower and upper incomplete gamma `(P(a, x), Q(a, x))`.
pub(crate) fn gamma_inc(a: f64, x: f64) -> (f64, f64) {
    debug_assert!(a > 0.0);
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    let ln_front = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        // series
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        let p = (ln_front + sum.ln()).exp();
        (p, 1.0 - p)
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < EPS {
                break;
            }
        }
        let q = (ln_front + h.ln()).exp();
        (1.0 - q, q)
    }
}

/// `log(1 - exp(v))` for `v <= 0`.
pub(crate) fn ln_1m_exp(v: f64) -> f64 {
    if v > -std::f64::consts::LN_2 {
        (-v.exp_m1()).ln()
    } else {
        (-v.exp()).ln_1p()
    }
}

/// Safeguarded Newton iteration for a monotone function with a sign change
/// on `[lo, hi]`. `f` returns the value and the derivative.
pub(crate) fn solve_bracketed<F>(f: F, mut x: f64, mut lo: f64, mut hi: f64, xtol: f64) -> f64
where
    F: Fn(f64) -> (f64, f64),
{
    if !(x > lo && x < hi) {
        x = 0.5 * (lo + hi);
    }
    // f is monotone, so the sign of the first derivative fixes the direction
    let mut increasing = None;
    for _ in 0..300 {
        let (fx, dfx) = f(x);
        let increasing = *increasing.get_or_insert(dfx > 0.0);
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == increasing {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - fx / dfx;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= xtol * (1.0 + x.abs()) || hi - lo <= xtol * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}
