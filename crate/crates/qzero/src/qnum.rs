//! Arbitrary-precision context and q-series primitives.
//!
//! Everything downstream works on the lattice {q^k}; this module owns the
//! exact base q, the mantissa budget, and the truncated q-Pochhammer products
//! from which weights, norms and leading coefficients are assembled.

use rug::ops::{CompleteRound, Pow};
use rug::{Float, Rational};

use crate::error::{Error, Result};

/// Default precision head-room multiplier for [`precision_for`].
pub const DEFAULT_MARGIN: f64 = 1.5;

/// Iteration cap for infinite products; hitting it is a diagnostic error.
const POCH_ITER_CAP: usize = 4_000_000;

/// Immutable arithmetic context: exact base q, mantissa width, tail tolerance.
///
/// All high-precision values are produced at `bits` mantissa bits; `log q` is
/// computed once here so lattice powers q^{k/n} = exp((k/n) log q) do not
/// compound root-extraction error.
#[derive(Debug, Clone)]
pub struct PrecisionContext {
    q: Rational,
    bits: u32,
    tail_tol: Float,
    q_float: Float,
    ln_q: Float,
}

impl PrecisionContext {
    /// Builds a context with the default tail tolerance 10^{−bits/4}.
    pub fn new(q: Rational, bits: u32) -> Result<Self> {
        if !(q > 0u32 && q < 1u32) {
            return Err(Error::Constraint(format!("0 < q < 1 (q = {q})")));
        }
        if bits < 64 {
            return Err(Error::Constraint(format!("bits >= 64 (bits = {bits})")));
        }
        let tail_tol = Float::with_val(bits, 10u32).pow(-((bits / 4) as i32));
        let q_float = Float::with_val(bits, &q);
        let ln_q = q_float.clone().ln();
        Ok(Self {
            q,
            bits,
            tail_tol,
            q_float,
            ln_q,
        })
    }

    /// Same base and bits, explicit tail tolerance.
    pub fn with_tail_tol(mut self, tail_tol: Float) -> Result<Self> {
        if !(tail_tol > 0u32 && tail_tol < 1u32) {
            return Err(Error::Constraint(format!(
                "0 < tail_tol < 1 (tail_tol = {tail_tol})"
            )));
        }
        self.tail_tol = tail_tol;
        Ok(self)
    }

    /// Rebuilds the context at a different mantissa width (tail tolerance re-derived).
    pub fn with_bits(&self, bits: u32) -> Result<Self> {
        Self::new(self.q.clone(), bits)
    }

    pub fn q(&self) -> &Rational {
        &self.q
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn tail_tol(&self) -> &Float {
        &self.tail_tol
    }

    /// q rounded to the working precision.
    pub fn q_float(&self) -> &Float {
        &self.q_float
    }

    /// log q (negative), cached at the working precision.
    pub fn ln_q(&self) -> &Float {
        &self.ln_q
    }

    pub fn ln_q_f64(&self) -> f64 {
        self.ln_q.to_f64()
    }

    /// New value at the working precision.
    pub fn float<T>(&self, val: T) -> Float
    where
        Float: rug::Assign<T>,
    {
        Float::with_val(self.bits, val)
    }

    /// q^k for integer k (correctly rounded, k may be negative).
    pub fn q_pow_int(&self, k: i64) -> Float {
        (&self.q_float).pow(k as i32).complete(self.bits)
    }

    /// q^{num/den} via exp((num/den) log q).
    pub fn q_pow_frac(&self, num: i64, den: u32) -> Float {
        if den == 1 {
            return self.q_pow_int(num);
        }
        let mut t = self.ln_q.clone();
        t *= num;
        t /= den;
        t.exp()
    }

    /// q^e for exact rational e.
    pub fn q_pow_rational(&self, e: &Rational) -> Float {
        let ef = self.float(e);
        (ef * &self.ln_q).exp()
    }

    /// Errors unless `other` uses the same exact base q.
    pub fn ensure_same_base(&self, other: &PrecisionContext) -> Result<()> {
        if self.q == other.q {
            Ok(())
        } else {
            Err(Error::MixedBase)
        }
    }
}

/// Finite q-Pochhammer (z;q)_k = ∏_{i=0}^{k−1}(1 − z q^i); empty product for k = 0.
pub fn poch_finite(z: &Float, k: u32, ctx: &PrecisionContext) -> Float {
    let mut acc = ctx.float(1u32);
    let mut zq = ctx.float(z);
    for _ in 0..k {
        let factor = ctx.float(1u32) - &zq;
        acc *= factor;
        zq *= &ctx.q_float;
    }
    acc
}

/// Infinite q-Pochhammer (z;q)_∞, truncated once |z q^N| < tail_tol and closed
/// with the first-order tail ∏_{i≥N}(1−zq^i) ≈ exp(−z q^N/(1−q)).
///
/// Relative error ≤ tail_tol/(1−q). Exact zero is returned when some factor
/// vanishes (z = q^{−m}). Converges for every z since q < 1; the iteration cap
/// only guards against q so close to 1 that the scan is hopeless.
pub fn poch_infinite(z: &Float, ctx: &PrecisionContext) -> Result<Float> {
    if z.is_zero() {
        return Ok(ctx.float(1u32));
    }
    let mut acc = ctx.float(1u32);
    let mut zq = ctx.float(z);
    let mut iters = 0usize;
    while zq.clone().abs() >= ctx.tail_tol {
        let factor = ctx.float(1u32) - &zq;
        if factor.is_zero() {
            return Ok(ctx.float(0u32));
        }
        acc *= factor;
        zq *= &ctx.q_float;
        iters += 1;
        if iters > POCH_ITER_CAP {
            return Err(Error::TailNotConvergent {
                what: "(z;q)_inf",
                cap: POCH_ITER_CAP,
            });
        }
    }
    let one_minus_q = ctx.float(1u32) - &ctx.q_float;
    let tail = -(zq / one_minus_q);
    acc *= tail.exp();
    Ok(acc)
}

/// Mantissa bits adequate for degree-n work: max(128, ⌈margin · 2 n² log₂(1/q)⌉).
///
/// Leading coefficients grow like q^{−n(n−1)/2}, so the budget scales with n²;
/// `margin ≥ 1` buys head-room for cancellation on top of dynamic range.
pub fn precision_for(n: u32, ctx: &PrecisionContext, margin: f64) -> u32 {
    let log2_inv_q = -ctx.q().to_f64().log2();
    let need = (margin * 2.0 * (n as f64) * (n as f64) * log2_inv_q).ceil();
    need.max(128.0) as u32
}
