//! Exact power for two predictors.
//!
//! With `R(ρ) = [[1, ρ], [ρ, 1]]`, `t0 = Φ̄⁻¹(α/2)` and `g(w) = Φ̄⁻¹(Φ̄(w)/α)`,
//! the rejection region `{S ≤ α}` is the disjoint union of four convex
//! pieces. The piece selecting the first coordinate with sign + is
//!
//! ```text
//! U1 = w ≥ t0,   ρw − g(w)(1 + ρ) ≤ U2 ≤ ρw + g(w)(1 − ρ),
//! ```
//!
//! the − piece is its mirror image through the origin, and the two pieces
//! selecting the second coordinate swap the roles of `U1` and `U2`.

use serde::Serialize;

use super::quadrature::integrate;
use super::{g_alpha_unchecked, Method, PowerEstimate};
use crate::distfn::normal;
use crate::error::{check_finite, check_level, Error, Result};

/// `|ρ|` at or above `1 − RHO_TOL` is rejected.
pub const RHO_TOL: f64 = 1e-8;
/// Absolute quadrature tolerance per piece.
pub const QUAD_TOL: f64 = 1e-10;
/// Width of the integration range beyond `max(t0, outer mean)`.
pub const TAIL_SPAN: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Piece {
    PlusFirst,
    PlusSecond,
    MinusFirst,
    MinusSecond,
}

impl Piece {
    pub const ALL: [Piece; 4] = [
        Piece::PlusFirst,
        Piece::PlusSecond,
        Piece::MinusFirst,
        Piece::MinusSecond,
    ];

    /// Index of the outer coordinate and its sign.
    fn outer(self) -> (usize, f64) {
        match self {
            Piece::PlusFirst => (0, 1.0),
            Piece::MinusFirst => (0, -1.0),
            Piece::PlusSecond => (1, 1.0),
            Piece::MinusSecond => (1, -1.0),
        }
    }
}

/// The rejection region of the spacing test for `p = 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region2D {
    pub alpha: f64,
    pub rho: f64,
    /// Outer threshold `Φ̄⁻¹(α/2)`.
    pub t0: f64,
}

impl Region2D {
    pub fn new(alpha: f64, rho: f64) -> Result<Self> {
        let alpha = check_level(alpha)?;
        check_finite(rho, "correlation")?;
        if rho.abs() >= 1.0 - RHO_TOL {
            return Err(Error::Domain {
                what: "correlation (need |rho| < 1 - 1e-8)",
                value: rho,
            });
        }
        Ok(Region2D {
            alpha,
            rho,
            t0: normal::isf(alpha / 2.0),
        })
    }

    /// Inner interval of `piece` at outer value `w ≥ t0`, in the inner
    /// coordinate's own sign.
    pub fn inner_bounds(&self, piece: Piece, w: f64) -> (f64, f64) {
        let (_, sign) = piece.outer();
        let g = g_alpha_unchecked(w, self.alpha);
        let rho = self.rho;
        // inner = sign·(ρw + v) with v ∈ [−g(1+ρ), g(1−ρ)]
        let (a, b) = (rho * w - g * (1.0 + rho), rho * w + g * (1.0 - rho));
        if sign > 0.0 {
            (a, b)
        } else {
            (-b, -a)
        }
    }

    /// The piece containing `u`, if any.
    pub fn piece_of(&self, u: [f64; 2]) -> Option<Piece> {
        Piece::ALL.into_iter().find(|&piece| {
            let (k, sign) = piece.outer();
            let w = sign * u[k];
            if w.is_nan() || w < self.t0 {
                return false;
            }
            let (lo, hi) = self.inner_bounds(piece, w);
            let inner = u[1 - k];
            lo <= inner && inner <= hi
        })
    }

    pub fn contains(&self, u: [f64; 2]) -> bool {
        self.piece_of(u).is_some()
    }

    /// `P(N(m, R(ρ)) ∈ piece)`.
    pub fn piece_probability(&self, piece: Piece, m: [f64; 2]) -> f64 {
        let (k, sign) = piece.outer();
        let m_out = m[k];
        let m_in = m[1 - k];
        let rho = self.rho;
        let sd = (1.0 - rho * rho).sqrt();
        let integrand = |w: f64| {
            let u_out = sign * w;
            let dens = normal::pdf(u_out - m_out);
            if dens == 0.0 {
                return 0.0;
            }
            let cm = m_in + rho * (u_out - m_out);
            let (lo, hi) = self.inner_bounds(piece, w);
            dens * normal::interval_prob((lo - cm) / sd, (hi - cm) / sd)
        };
        let upper = self.t0.max(sign * m_out) + TAIL_SPAN;
        integrate(&integrand, self.t0, upper, QUAD_TOL)
    }
}

/// `k_{α,ρ}(β) = P(N(R(ρ)β, R(ρ)) ∈ {S ≤ α})` by quadrature.
pub fn power_2d(beta: [f64; 2], rho: f64, alpha: f64) -> Result<PowerEstimate> {
    let region = Region2D::new(alpha, rho)?;
    check_finite(beta[0], "coefficient")?;
    check_finite(beta[1], "coefficient")?;
    let m = [beta[0] + rho * beta[1], rho * beta[0] + beta[1]];
    let value: f64 = Piece::ALL
        .iter()
        .map(|&piece| region.piece_probability(piece, m))
        .sum();
    Ok(PowerEstimate {
        value: value.clamp(0.0, 1.0),
        stderr: 0.0,
        budget: 0,
        method: Method::Quad2d,
    })
}
