//! Scaled lattice windows E_n(ε) = {q^{k/n} ≥ ε}, counting measures, and the
//! discrete weighted L² norms behind the norm-comparison trends.

use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::families::FamilySpec;
use crate::field::FieldSpec;
use crate::qnum::{precision_for, PrecisionContext};

/// Extra precision margin for windowed monic evaluation: monic values decay
/// like q^{cn²} while intermediate ₂φ₁ terms grow like q^{−c'n²}, and the
/// scaled q-Bessel parameters add another q^{−2|α|n²} on top.
const RATIO_MARGIN: f64 = 6.0;

/// The window E_n(ε): all points q^{k/n} ≥ ε, descending (k ascending).
#[derive(Debug, Clone)]
pub struct LatticeWindow {
    n: u32,
    eps: Float,
    points: Vec<Float>,
}

impl LatticeWindow {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn eps(&self) -> &Float {
        &self.eps
    }

    pub fn points(&self) -> &[Float] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// All lattice points q^{k/n} ≥ eps; count = ⌊n·log eps/log q⌋ + 1.
pub fn build_window(n: u32, eps: &Float, ctx: &PrecisionContext) -> Result<LatticeWindow> {
    if n == 0 {
        return Err(Error::Constraint("n >= 1".into()));
    }
    let e = eps.to_f64();
    if !(e > 0.0 && e < 1.0) {
        return Err(Error::Constraint(format!("0 < eps < 1 (eps = {e})")));
    }
    // f64 guess for the deepest k, then fix up against exact comparisons.
    let mut k_max = ((n as f64) * e.ln() / ctx.ln_q_f64()).floor() as i64;
    k_max = k_max.max(0);
    while ctx.q_pow_frac(k_max + 1, n) >= *eps {
        k_max += 1;
    }
    while k_max >= 0 && ctx.q_pow_frac(k_max, n) < *eps {
        k_max -= 1;
    }
    let points = (0..=k_max)
        .map(|k| ctx.q_pow_frac(k, n))
        .collect::<Vec<_>>();
    Ok(LatticeWindow {
        n,
        eps: ctx.float(eps),
        points,
    })
}

/// σ_n([a, b]) = #{k ≥ 0 : a ≤ q^{k/n} ≤ b}/n, exact.
///
/// Requires 0 < a < b ≤ 1 (panics otherwise: precondition, not a data error).
pub fn counting_measure(n: u32, a: &Float, b: &Float, ctx: &PrecisionContext) -> Rational {
    assert!(n >= 1, "n >= 1");
    let (af, bf) = (a.to_f64(), b.to_f64());
    assert!(
        0.0 < af && a < b && bf <= 1.0,
        "0 < a < b <= 1 (a = {af}, b = {bf})"
    );
    // Smallest k with q^{k/n} <= b.
    let mut k_lo = ((n as f64) * bf.ln() / ctx.ln_q_f64()).ceil() as i64;
    k_lo = k_lo.max(0);
    while k_lo > 0 && ctx.q_pow_frac(k_lo - 1, n) <= *b {
        k_lo -= 1;
    }
    while ctx.q_pow_frac(k_lo, n) > *b {
        k_lo += 1;
    }
    // Largest k with q^{k/n} >= a.
    let mut k_hi = ((n as f64) * af.ln() / ctx.ln_q_f64()).floor() as i64;
    k_hi = k_hi.max(0);
    while ctx.q_pow_frac(k_hi + 1, n) >= *a {
        k_hi += 1;
    }
    while k_hi >= 0 && ctx.q_pow_frac(k_hi, n) < *a {
        k_hi -= 1;
    }
    if k_hi < k_lo {
        return Rational::new();
    }
    Rational::from((k_hi - k_lo + 1, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// ((1−q)·Σ_k q^k |f(q^k)|²)^{1/2} over consecutive lattice values from
    /// k = 0, truncated once the summand falls below tail_tol relative to the
    /// accumulated sum.
    FullLattice,
    /// (Σ_i (x_i − x_{i+1}) |f(x_i)|²)^{1/2} over a descending window; the
    /// deepest point is the boundary and carries no cell.
    Window,
}

/// A discrete norm plus the number of summands actually used (the truncation
/// index in full-lattice mode).
#[derive(Debug, Clone)]
pub struct DiscreteNorm {
    pub value: Float,
    pub terms_used: usize,
}

pub fn discrete_l2_norm(
    values: &[(Float, Float)],
    mode: NormMode,
    ctx: &PrecisionContext,
) -> Result<DiscreteNorm> {
    if values.is_empty() {
        return Err(Error::Constraint("non-empty sample list".into()));
    }
    let mut sum = ctx.float(0u32);
    let mut used = 0usize;
    match mode {
        NormMode::FullLattice => {
            let jackson = ctx.float(1u32) - ctx.q_float();
            for (x, f) in values {
                let term = ctx.float(&jackson) * x * f * f;
                used += 1;
                let negligible = sum > 0u32 && term < ctx.float(ctx.tail_tol()) * &sum;
                sum += term;
                if negligible {
                    break;
                }
            }
        }
        NormMode::Window => {
            for pair in values.windows(2) {
                let (x, f) = &pair[0];
                let width = ctx.float(x) - &pair[1].0;
                sum += width * f * f;
                used += 1;
            }
        }
    }
    Ok(DiscreteNorm {
        value: sum.sqrt(),
        terms_used: used,
    })
}

/// sup |f| over the supplied points.
pub fn sup_norm(values: &[(Float, Float)]) -> Result<Float> {
    values
        .iter()
        .map(|(_, f)| f.clone().abs())
        .reduce(|acc, v| if v > acc { v } else { acc })
        .ok_or_else(|| Error::Constraint("non-empty sample list".into()))
}

/// Windowed norm ratio (numerator weight / denominator weight) raised to
/// 1/n², with both weights supplied as log-scale factors per window index.
fn windowed_ratio(
    points: &[Float],
    num_scale: impl Fn(usize) -> Result<Float>,
    den_scale: impl Fn(usize) -> Result<Float>,
    samples: &[Float],
    n: u32,
    ctx: &PrecisionContext,
) -> Result<f64> {
    let mut num = Vec::with_capacity(points.len());
    let mut den = Vec::with_capacity(points.len());
    for (i, x) in points.iter().enumerate() {
        let r = &samples[i];
        num.push((ctx.float(x), num_scale(i)? * r));
        den.push((ctx.float(x), den_scale(i)? * r));
    }
    let num_norm = discrete_l2_norm(&num, NormMode::Window, ctx)?;
    let den_norm = discrete_l2_norm(&den, NormMode::Window, ctx)?;
    if den_norm.value.is_zero() || num_norm.value.is_zero() {
        return Err(Error::Internal(
            "windowed samples vanish identically; ratio undefined".into(),
        ));
    }
    let ratio = num_norm.value / den_norm.value;
    let nn = (n as u32) * n;
    Ok((ratio.ln() / nn).exp().to_f64())
}

/// (‖w^{1/2}(xⁿ) R_n(xⁿ)‖_{2,E_n(ε)} / ‖D R_n(xⁿ)‖_{2,E_n(ε)})^{1/n²} per n,
/// where R_n is the family's monic polynomial and D is 1 (field absent) or
/// exp(−n²Q(x)) (field given). Both trends approach 1.
pub fn norm_ratio_trend(
    fam: &FamilySpec,
    field: Option<&FieldSpec>,
    eps: f64,
    n_list: &[u32],
    ctx: &PrecisionContext,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let bits = precision_for(n, ctx, RATIO_MARGIN).max(ctx.bits());
        let cn = ctx.with_bits(bits)?;
        let window = build_window(n, &cn.float(eps), &cn)?;
        // xⁿ = q^k exactly for x = q^{k/n}: evaluate on integer powers.
        let samples = window
            .points()
            .iter()
            .enumerate()
            .map(|(k, _)| fam.monic_eval(n, &cn.q_pow_int(k as i64), &cn))
            .collect::<Result<Vec<_>>>()?;
        let half = cn.float(Rational::from((1, 2)));
        let num_scale = |k: usize| -> Result<Float> {
            let xn = cn.q_pow_int(k as i64);
            Ok((fam.log_weight(&xn, n, &cn)? * &half).exp())
        };
        let den_scale = |k: usize| -> Result<Float> {
            match field {
                None => Ok(cn.float(1u32)),
                // exp(−n²Q(q^{k/n})) = q^{n²·Q̂(k/n)}, exact in the exponent.
                Some(f) => {
                    let t = Rational::from((k as u32, n));
                    let e = f.hat(&t) * Rational::from(n * n);
                    Ok(cn.q_pow_rational(&e))
                }
            }
        };
        out.push(windowed_ratio(
            window.points(),
            num_scale,
            den_scale,
            &samples,
            n,
            &cn,
        )?);
    }
    Ok(out)
}
