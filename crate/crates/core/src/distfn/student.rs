use super::special::{ln_1m_exp, ln_beta_inc};

/// log of the Student-t survival function with `nu` degrees of freedom.
///
/// For t > 0, 1 - F(t) = I_x(nu/2, 1/2) / 2 with x = nu / (nu + t^2).
pub(crate) fn log_sf(t: f64, nu: f64) -> f64 {
    if t == 0.0 {
        return -std::f64::consts::LN_2;
    }
    if t.is_infinite() {
        return if t > 0.0 { f64::NEG_INFINITY } else { 0.0 };
    }
    let t2 = t * t;
    let x = nu / (nu + t2);
    let y = t2 / (nu + t2);
    let (ln_tail, _) = ln_beta_inc(0.5 * nu, 0.5, x, y);
    let ln_upper = ln_tail - std::f64::consts::LN_2;
    if t > 0.0 {
        ln_upper
    } else {
        ln_1m_exp(ln_upper)
    }
}

pub(crate) fn sf(t: f64, nu: f64) -> f64 {
    log_sf(t, nu).exp()
}
