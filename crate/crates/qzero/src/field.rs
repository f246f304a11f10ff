//! External fields Q as piecewise quadratics in the log-q coordinate.
//!
//! Every field in scope is log-quadratic: on each piece
//! Q(x) = u·(log x)² + v·log x + k. Substituting t = log x/log q (so x = q^t
//! and t ≥ 0 sweeps (0,1] from 1 towards 0) turns each piece into
//! Q(x) = |log q| · Q̂(t) with Q̂(t) = c2·t² + c1·t + c0 and *rational*
//! coefficients for all fields generated by the polynomial families. Storing
//! Q̂ exactly keeps breakpoints, slopes, equilibrium masses and constants
//! exact; physical (u, v, k) coefficients are derived views.

use rug::{Float, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qnum::PrecisionContext;

/// One piece of Q̂: valid for t ∈ [t_lo, t_hi) (radii [q^{t_hi}, q^{t_lo}]).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPiece {
    pub t_lo: Rational,
    /// `None` extends the piece to t → ∞, i.e. down to radius 0.
    pub t_hi: Option<Rational>,
    /// Q̂(t) = c2·t² + c1·t + c0 on this piece.
    pub c2: Rational,
    pub c1: Rational,
    pub c0: Rational,
}

impl FieldPiece {
    fn hat(&self, t: &Rational) -> Rational {
        let mut acc = Rational::from(&self.c2 * t);
        acc += &self.c1;
        acc *= t;
        acc += &self.c0;
        acc
    }

    fn hat_f64(&self, t: f64) -> f64 {
        (self.c2.to_f64() * t + self.c1.to_f64()) * t + self.c0.to_f64()
    }

    /// xQ'(x) at x = q^t; equals −Q̂'(t) and is linear with rational coefficients.
    fn xqprime(&self, t: &Rational) -> Rational {
        let mut acc = Rational::from(&self.c2 * t);
        acc *= 2u32;
        acc += &self.c1;
        -acc
    }

    fn contains(&self, t: &Rational) -> bool {
        if *t < self.t_lo {
            return false;
        }
        match &self.t_hi {
            Some(hi) => t < hi,
            None => true,
        }
    }
}

/// Physical view of a piece: Q(x) = u·(log x)² + v·log x + k on [x_lo, x_hi].
#[derive(Debug, Clone, Serialize)]
pub struct PhysicalPiece {
    pub x_lo: f64,
    pub x_hi: f64,
    pub u: f64,
    pub v: f64,
    pub k: f64,
}

/// External field on (0,1]: ordered pieces tiling t ∈ [0, ∞) without gaps,
/// continuous across breakpoints (both checked exactly at construction).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pieces: Vec<FieldPiece>,
}

impl FieldSpec {
    pub fn new(pieces: Vec<FieldPiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Constraint("field needs at least one piece".into()));
        }
        if pieces[0].t_lo != 0u32 {
            return Err(Error::Constraint(
                "field pieces must start at x = 1 (t_lo = 0)".into(),
            ));
        }
        for (i, p) in pieces.iter().enumerate() {
            let last = i + 1 == pieces.len();
            match (&p.t_hi, last) {
                (None, false) => {
                    return Err(Error::Constraint(
                        "only the innermost field piece may be unbounded".into(),
                    ))
                }
                (Some(hi), _) => {
                    if *hi <= p.t_lo {
                        return Err(Error::Constraint("empty field piece".into()));
                    }
                    if last {
                        return Err(Error::Constraint(
                            "field pieces must cover all of (0,1] (last t_hi must be unbounded)"
                                .into(),
                        ));
                    }
                    let next = &pieces[i + 1];
                    if next.t_lo != *hi {
                        return Err(Error::Constraint(format!(
                            "field pieces leave a gap or overlap at t = {hi}"
                        )));
                    }
                    if p.hat(hi) != next.hat(hi) {
                        return Err(Error::Constraint(format!(
                            "field discontinuous at breakpoint t = {hi}"
                        )));
                    }
                }
                (None, true) => {}
            }
        }
        Ok(Self { pieces })
    }

    /// Q ≡ 0.
    pub fn zero() -> Self {
        Self::log_linear(Rational::new())
    }

    /// Q(x) = −alpha·log x, i.e. Q̂(t) = alpha·t.
    pub fn log_linear(alpha: Rational) -> Self {
        Self {
            pieces: vec![FieldPiece {
                t_lo: Rational::new(),
                t_hi: None,
                c2: Rational::new(),
                c1: alpha,
                c0: Rational::new(),
            }],
        }
    }

    pub fn pieces(&self) -> &[FieldPiece] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.pieces
            .iter()
            .all(|p| p.c2 == 0u32 && p.c1 == 0u32 && p.c0 == 0u32)
    }

    fn piece_for(&self, t: &Rational) -> &FieldPiece {
        self.pieces
            .iter()
            .find(|p| p.contains(t))
            .unwrap_or_else(|| self.pieces.last().expect("non-empty by construction"))
    }

    fn piece_for_f64(&self, t: f64) -> &FieldPiece {
        self.pieces
            .iter()
            .find(|p| {
                t >= p.t_lo.to_f64()
                    && p.t_hi.as_ref().map(|hi| t < hi.to_f64()).unwrap_or(true)
            })
            .unwrap_or_else(|| self.pieces.last().expect("non-empty by construction"))
    }

    /// Exact Q̂(t) = Q(q^t)/|log q|.
    pub fn hat(&self, t: &Rational) -> Rational {
        self.piece_for(t).hat(t)
    }

    /// Q̂(t) at an arbitrary f64 coordinate (t < 0 extrapolates the first piece).
    pub fn hat_f64(&self, t: f64) -> f64 {
        if t < self.pieces[0].t_lo.to_f64() {
            return self.pieces[0].hat_f64(t);
        }
        self.piece_for_f64(t).hat_f64(t)
    }

    /// Exact xQ'(x) at x = q^t (dimensionless, rational).
    pub fn xqprime_hat(&self, t: &Rational) -> Rational {
        self.piece_for(t).xqprime(t)
    }

    fn check_domain(x: f64) -> Result<()> {
        if x > 0.0 && x <= 1.0 {
            Ok(())
        } else {
            Err(Error::Constraint(format!("0 < x <= 1 (x = {x})")))
        }
    }

    /// Q(x) in f64, given log q.
    pub fn eval(&self, x: f64, ln_q: f64) -> Result<f64> {
        Self::check_domain(x)?;
        let t = x.ln() / ln_q;
        Ok(-ln_q * self.piece_for_f64(t).hat_f64(t))
    }

    /// xQ'(x) in f64 (2u·log x + v in physical coefficients).
    pub fn slope(&self, x: f64, ln_q: f64) -> Result<f64> {
        Self::check_domain(x)?;
        let t = x.ln() / ln_q;
        let p = self.piece_for_f64(t);
        Ok(-(2.0 * p.c2.to_f64() * t + p.c1.to_f64()))
    }

    /// Q(x) at working precision (for exp(−n²Q) weights).
    pub fn eval_float(&self, x: &Float, ctx: &PrecisionContext) -> Result<Float> {
        let xf = x.to_f64();
        if !(xf > 0.0 && xf <= 1.0000000000000002) {
            return Err(Error::Constraint(format!("0 < x <= 1 (x = {xf})")));
        }
        let t = ctx.float(x).ln() / ctx.ln_q();
        let p = self.piece_for_f64(t.to_f64());
        let mut acc = ctx.float(&p.c2);
        acc *= &t;
        acc += ctx.float(&p.c1);
        acc *= &t;
        acc += ctx.float(&p.c0);
        Ok(-(acc * ctx.ln_q()))
    }

    /// Pieces in physical (x_lo, x_hi, u, v, k) form, outermost first.
    pub fn physical_pieces(&self, ln_q: f64) -> Vec<PhysicalPiece> {
        self.pieces
            .iter()
            .map(|p| PhysicalPiece {
                x_lo: p
                    .t_hi
                    .as_ref()
                    .map(|hi| (hi.to_f64() * ln_q).exp())
                    .unwrap_or(0.0),
                x_hi: (p.t_lo.to_f64() * ln_q).exp(),
                u: -p.c2.to_f64() / ln_q,
                v: -p.c1.to_f64(),
                k: -p.c0.to_f64() * ln_q,
            })
            .collect()
    }
}
