//! The three orthogonal polynomial families on the q-lattice.
//!
//! Each family is a terminating ₂φ₁ basic hypergeometric sum; together with
//! its lattice weights w_k, continuous weight extension w(x), closed-form
//! leading coefficients and L² norms, and — for n-dependent parameters
//! a = q^{2nα}, b = ±q^{2nβ} — the external field Q generated by the weight
//! decay −(1/2n²)·log w(xⁿ).

use rug::ops::Pow;
use rug::{Float, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{FieldPiece, FieldSpec};
use crate::qnum::{poch_finite, poch_infinite, precision_for, PrecisionContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FamilyKind {
    LittleQLaguerre,
    QBessel,
    LittleQJacobi,
}

/// Fixed numeric parameters, or exponents for the n-dependent regime
/// a = q^{2nα} (and b = ±q^{2nβ} for little q-Jacobi).
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyParams {
    Fixed {
        a: Rational,
        b: Option<Rational>,
    },
    Scaled {
        alpha: Rational,
        beta: Option<Rational>,
        negative_b: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    kind: FamilyKind,
    params: FamilyParams,
}

impl FamilySpec {
    /// Little q-Laguerre with fixed a; requires 0 < aq < 1.
    pub fn little_q_laguerre(a: Rational, q: &Rational) -> Result<Self> {
        let aq = Rational::from(&a * q);
        if !(a > 0u32 && aq < 1u32) {
            return Err(Error::Constraint(format!("0 < aq < 1 (a = {a}, q = {q})")));
        }
        Ok(Self {
            kind: FamilyKind::LittleQLaguerre,
            params: FamilyParams::Fixed { a, b: None },
        })
    }

    /// q-Bessel with fixed a > 0.
    pub fn q_bessel(a: Rational) -> Result<Self> {
        if !(a > 0u32) {
            return Err(Error::Constraint(format!("a > 0 (a = {a})")));
        }
        Ok(Self {
            kind: FamilyKind::QBessel,
            params: FamilyParams::Fixed { a, b: None },
        })
    }

    /// Little q-Jacobi with fixed a, b; requires 0 < aq < 1 and bq < 1.
    pub fn little_q_jacobi(a: Rational, b: Rational, q: &Rational) -> Result<Self> {
        let aq = Rational::from(&a * q);
        if !(a > 0u32 && aq < 1u32) {
            return Err(Error::Constraint(format!("0 < aq < 1 (a = {a}, q = {q})")));
        }
        let bq = Rational::from(&b * q);
        if !(bq < 1u32) {
            return Err(Error::Constraint(format!("bq < 1 (b = {b}, q = {q})")));
        }
        Ok(Self {
            kind: FamilyKind::LittleQJacobi,
            params: FamilyParams::Fixed { a, b: Some(b) },
        })
    }

    /// Little q-Laguerre with a = q^{2nα}; α ≥ 0 keeps 0 < aq < 1 for all n.
    pub fn little_q_laguerre_scaled(alpha: Rational) -> Result<Self> {
        if alpha < 0u32 {
            return Err(Error::Constraint(format!("alpha >= 0 (alpha = {alpha})")));
        }
        Ok(Self {
            kind: FamilyKind::LittleQLaguerre,
            params: FamilyParams::Scaled {
                alpha,
                beta: None,
                negative_b: false,
            },
        })
    }

    /// q-Bessel with a = q^{2nα}; any real α keeps a > 0.
    pub fn q_bessel_scaled(alpha: Rational) -> Self {
        Self {
            kind: FamilyKind::QBessel,
            params: FamilyParams::Scaled {
                alpha,
                beta: None,
                negative_b: false,
            },
        }
    }

    /// Little q-Jacobi with a = q^{2nα}, b = ±q^{2nβ}.
    ///
    /// α ≥ 0 is forced by 0 < aq < 1; β ≥ 0 is additionally forced for
    /// positive b by bq < 1 (negative b satisfies bq < 1 for every β).
    pub fn little_q_jacobi_scaled(
        alpha: Rational,
        beta: Rational,
        negative_b: bool,
    ) -> Result<Self> {
        if alpha < 0u32 {
            return Err(Error::Constraint(format!("alpha >= 0 (alpha = {alpha})")));
        }
        if !negative_b && beta < 0u32 {
            return Err(Error::Constraint(format!(
                "beta >= 0 for b = +q^(2n beta) (beta = {beta})"
            )));
        }
        Ok(Self {
            kind: FamilyKind::LittleQJacobi,
            params: FamilyParams::Scaled {
                alpha,
                beta: Some(beta),
                negative_b,
            },
        })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn params(&self) -> &FamilyParams {
        &self.params
    }

    pub fn is_scaled(&self) -> bool {
        matches!(self.params, FamilyParams::Scaled { .. })
    }

    /// Parameter a instantiated at degree n.
    pub fn a_value(&self, n: u32, ctx: &PrecisionContext) -> Float {
        match &self.params {
            FamilyParams::Fixed { a, .. } => ctx.float(a),
            FamilyParams::Scaled { alpha, .. } => {
                let e = Rational::from(alpha * &Rational::from(2 * n));
                ctx.q_pow_rational(&e)
            }
        }
    }

    /// Parameter b instantiated at degree n (little q-Jacobi only).
    pub fn b_value(&self, n: u32, ctx: &PrecisionContext) -> Option<Float> {
        match (&self.kind, &self.params) {
            (FamilyKind::LittleQJacobi, FamilyParams::Fixed { b, .. }) => {
                b.as_ref().map(|b| ctx.float(b))
            }
            (
                FamilyKind::LittleQJacobi,
                FamilyParams::Scaled {
                    beta, negative_b, ..
                },
            ) => beta.as_ref().map(|beta| {
                let e = Rational::from(beta * &Rational::from(2 * n));
                let v = ctx.q_pow_rational(&e);
                if *negative_b {
                    -v
                } else {
                    v
                }
            }),
            _ => None,
        }
    }

    /// Weight exponent α̃ with q^{α̃} = a, at degree n.
    fn alpha_tilde(&self, n: u32, ctx: &PrecisionContext) -> Float {
        match &self.params {
            FamilyParams::Fixed { a, .. } => ctx.float(a).ln() / ctx.ln_q(),
            FamilyParams::Scaled { alpha, .. } => {
                ctx.float(Rational::from(alpha * &Rational::from(2 * n)))
            }
        }
    }

    fn require_precision(&self, n: u32, ctx: &PrecisionContext) -> Result<()> {
        let need = precision_for(n, ctx, 1.0);
        if ctx.bits() < need {
            return Err(Error::Precision {
                have: ctx.bits(),
                need,
                degree: n,
            });
        }
        Ok(())
    }

    /// The family's defining ₂φ₁ sum at x (n + 1 terms, exact termination).
    pub fn eval(&self, n: u32, x: &Float, ctx: &PrecisionContext) -> Result<Float> {
        self.require_precision(n, ctx)?;
        let (upper2, lower) = self.phi_params(n, ctx);
        Ok(phi21_terminating(n, upper2.as_ref(), lower.as_ref(), x, ctx))
    }

    /// Second upper parameter and lower parameter of the defining ₂φ₁.
    fn phi_params(&self, n: u32, ctx: &PrecisionContext) -> (Option<Float>, Option<Float>) {
        let a = self.a_value(n, ctx);
        match self.kind {
            FamilyKind::LittleQLaguerre => {
                let aq = a * ctx.q_float();
                (None, Some(aq))
            }
            FamilyKind::QBessel => {
                let b_up = -(a * ctx.q_pow_int(n as i64));
                (Some(b_up), None)
            }
            FamilyKind::LittleQJacobi => {
                let b = self.b_value(n, ctx).expect("Jacobi carries b");
                let upper = ctx.float(&a) * b * ctx.q_pow_int(n as i64 + 1);
                let aq = a * ctx.q_float();
                (Some(upper), Some(aq))
            }
        }
    }

    /// Leading coefficient κ_n of the ₂φ₁ form (signed; sign is (−1)^n).
    pub fn phi_leading_coeff(&self, n: u32, ctx: &PrecisionContext) -> Float {
        let a = self.a_value(n, ctx);
        let tri = (n as i64) * (n as i64 - 1) / 2;
        let base = ctx.q_pow_int(-tri);
        let signed = if n % 2 == 0 { base } else { -base };
        match self.kind {
            FamilyKind::LittleQLaguerre => {
                let aq = a * ctx.q_float();
                signed / poch_finite(&aq, n, ctx)
            }
            FamilyKind::QBessel => {
                let z = -(a * ctx.q_pow_int(n as i64));
                signed * poch_finite(&z, n, ctx)
            }
            FamilyKind::LittleQJacobi => {
                let b = self.b_value(n, ctx).expect("Jacobi carries b");
                let upper = ctx.float(&a) * b * ctx.q_pow_int(n as i64 + 1);
                let aq = a * ctx.q_float();
                signed * poch_finite(&upper, n, ctx) / poch_finite(&aq, n, ctx)
            }
        }
    }

    /// Monic value P_n(x) = (₂φ₁ form)/κ_n.
    pub fn monic_eval(&self, n: u32, x: &Float, ctx: &PrecisionContext) -> Result<Float> {
        Ok(self.eval(n, x, ctx)? / self.phi_leading_coeff(n, ctx))
    }

    /// Squared L² norm h_n of the ₂φ₁-normalized polynomial
    /// (the orthogonality relation's right-hand side).
    pub fn l2_norm_sq(&self, n: u32, ctx: &PrecisionContext) -> Result<Float> {
        let a = self.a_value(n, ctx);
        let qq_n = poch_finite(ctx.q_float(), n, ctx);
        let aq = ctx.float(&a) * ctx.q_float();
        let aq_pow_n = aq.clone().pow(n);
        match self.kind {
            FamilyKind::LittleQLaguerre => {
                let num = aq_pow_n * qq_n;
                let den = poch_infinite(&aq, ctx)? * poch_finite(&aq, n, ctx);
                Ok(num / den)
            }
            FamilyKind::QBessel => {
                let z = -(ctx.float(&a) * ctx.q_pow_int(n as i64));
                let tri = (n as i64) * (n as i64 - 1) / 2;
                let num = qq_n * poch_infinite(&z, ctx)? * aq_pow_n * ctx.q_pow_int(tri);
                let den = ctx.float(1u32) + ctx.float(&a) * ctx.q_pow_int(2 * n as i64);
                Ok(num / den)
            }
            FamilyKind::LittleQJacobi => {
                let b = self.b_value(n, ctx).expect("Jacobi carries b");
                let ab = ctx.float(&a) * &b;
                let abq = ctx.float(&ab) * ctx.q_float();
                let abq2 = ctx.float(&abq) * ctx.q_float();
                let bq = b * ctx.q_float();
                let num = poch_infinite(&abq2, ctx)?
                    * (ctx.float(1u32) - &abq)
                    * aq_pow_n
                    * qq_n
                    * poch_finite(&bq, n, ctx);
                let den = poch_infinite(&aq, ctx)?
                    * (ctx.float(1u32) - ab * ctx.q_pow_int(2 * n as i64 + 1))
                    * poch_finite(&aq, n, ctx)
                    * poch_finite(&abq, n, ctx);
                Ok(num / den)
            }
        }
    }

    /// Leading coefficient γ_n > 0 of the orthonormal polynomial, from the
    /// family's standalone closed form (so γ_n·√h_n = |κ_n| is a genuine
    /// cross-check, not a tautology).
    pub fn leading_coeff(&self, n: u32, ctx: &PrecisionContext) -> Result<Float> {
        let a = self.a_value(n, ctx);
        let qq_n = poch_finite(ctx.q_float(), n, ctx);
        let aq = ctx.float(&a) * ctx.q_float();
        let aq_pow_n = aq.clone().pow(n);
        let tri = (n as i64) * (n as i64 - 1) / 2;
        match self.kind {
            FamilyKind::LittleQLaguerre => {
                let num = poch_infinite(&aq, ctx)?.sqrt();
                let den = (poch_finite(&aq, n, ctx) * aq_pow_n * qq_n).sqrt();
                Ok(ctx.q_pow_int(-tri) * num / den)
            }
            FamilyKind::QBessel => {
                let ma = -ctx.float(&a);
                let scale = ctx.q_pow_frac(-3 * tri, 2);
                let num = poch_finite(&ma, 2 * n, ctx)
                    * (ctx.float(1u32) + ctx.float(&a) * ctx.q_pow_int(2 * n as i64)).sqrt();
                let den =
                    (qq_n * poch_infinite(&ma, ctx)? * aq_pow_n * poch_finite(&ma, n, ctx)).sqrt();
                Ok(scale * num / den)
            }
            FamilyKind::LittleQJacobi => {
                let b = self.b_value(n, ctx).expect("Jacobi carries b");
                let ab = ctx.float(&a) * &b;
                let abq = ctx.float(&ab) * ctx.q_float();
                let abq2 = ctx.float(&abq) * ctx.q_float();
                let bq = b * ctx.q_float();
                let front = ctx.q_pow_int(-tri) * poch_finite(&abq, 2 * n, ctx)
                    / (poch_finite(&abq, n, ctx) * poch_finite(&aq, n, ctx)).sqrt();
                let num = poch_infinite(&aq, ctx)?
                    * (ctx.float(1u32) - ab * ctx.q_pow_int(2 * n as i64 + 1));
                let den = poch_infinite(&abq2, ctx)?
                    * (ctx.float(1u32) - &abq)
                    * aq_pow_n
                    * qq_n
                    * poch_finite(&bq, n, ctx);
                Ok(front * (num / den).sqrt())
            }
        }
    }

    /// log of the continuous weight w(x) at degree n (Scaled parameters are
    /// instantiated at n; Fixed parameters ignore n). Computed in log space so
    /// the n-dependent regimes stay in range.
    pub fn log_weight(&self, x: &Float, n: u32, ctx: &PrecisionContext) -> Result<Float> {
        let xf = x.to_f64();
        if !(xf > 0.0 && xf <= 1.0000000000000002) {
            return Err(Error::Constraint(format!("0 < x <= 1 (x = {xf})")));
        }
        let ln_x = ctx.float(x).ln();
        let qx = ctx.float(x) * ctx.q_float();
        let at = self.alpha_tilde(n, ctx);
        match self.kind {
            FamilyKind::LittleQLaguerre => {
                let tail = poch_infinite(&qx, ctx)?.ln();
                Ok(at * &ln_x + tail)
            }
            FamilyKind::QBessel => {
                let quad = ctx.float(&ln_x).square() / (ctx.float(2u32) * ctx.ln_q());
                let lin = (at + ctx.float(Rational::from((1, 2)))) * &ln_x;
                let tail = poch_infinite(&qx, ctx)?.ln();
                let norm = poch_infinite(ctx.q_float(), ctx)?.ln();
                Ok(quad + lin + tail - norm)
            }
            FamilyKind::LittleQJacobi => {
                let b = self.b_value(n, ctx).expect("Jacobi carries b");
                let bqx = b * ctx.q_float() * ctx.float(x);
                let tail = poch_infinite(&qx, ctx)?.ln();
                let den = poch_infinite(&bqx, ctx)?.ln();
                Ok(at * &ln_x + tail - den)
            }
        }
    }

    /// Continuous weight w(x), the closed-form extension off the lattice.
    pub fn weight(&self, x: &Float, n: u32, ctx: &PrecisionContext) -> Result<Float> {
        Ok(self.log_weight(x, n, ctx)?.exp())
    }

    /// Discrete lattice weight w_k.
    pub fn lattice_weight(&self, k: u32, n: u32, ctx: &PrecisionContext) -> Result<Float> {
        let a = self.a_value(n, ctx);
        let qq_k = poch_finite(ctx.q_float(), k, ctx);
        match self.kind {
            FamilyKind::LittleQLaguerre => {
                let a_pow_k = a.pow(k);
                Ok(a_pow_k / qq_k)
            }
            FamilyKind::QBessel => {
                let tri = (k as i64) * (k as i64 - 1) / 2;
                let aq_pow_k = (a * ctx.q_float()).pow(k);
                Ok(ctx.q_pow_int(tri) * aq_pow_k / qq_k)
            }
            FamilyKind::LittleQJacobi => {
                let b = self.b_value(n, ctx).expect("Jacobi carries b");
                let bq = b * ctx.q_float();
                let a_pow_k = a.pow(k);
                Ok(poch_finite(&bq, k, ctx) * a_pow_k / qq_k)
            }
        }
    }

    /// Constant ratio w(q^k)/w_k between the continuous extension and the
    /// lattice weights (1 for q-Bessel, (q;q)_∞-type constants otherwise).
    pub fn weight_ratio_const(&self, n: u32, ctx: &PrecisionContext) -> Result<Float> {
        match self.kind {
            FamilyKind::LittleQLaguerre => poch_infinite(ctx.q_float(), ctx),
            FamilyKind::QBessel => Ok(ctx.float(1u32)),
            FamilyKind::LittleQJacobi => {
                let b = self.b_value(n, ctx).expect("Jacobi carries b");
                let bq = b * ctx.q_float();
                Ok(poch_infinite(ctx.q_float(), ctx)? / poch_infinite(&bq, ctx)?)
            }
        }
    }

    /// Orthogonality weight W_k, the summand in Σ_k W_k p_n p_m = h_n δ_{nm}.
    /// For little q-Laguerre and q-Jacobi this is q^k·w_k (explicit Jackson
    /// factor); the q-Bessel w_k = a^k q^{k(k+1)/2}/(q;q)_k already carries it.
    pub fn orth_weight(&self, k: u32, n: u32, ctx: &PrecisionContext) -> Result<Float> {
        match self.kind {
            FamilyKind::QBessel => self.lattice_weight(k, n, ctx),
            _ => Ok(ctx.q_pow_int(k as i64) * self.lattice_weight(k, n, ctx)?),
        }
    }

    /// External field Q with 2Q(x) = lim −(1/n²) log w(xⁿ), for Scaled
    /// parameter regimes.
    pub fn external_field(&self) -> Result<FieldSpec> {
        let (alpha, beta, negative_b) = match &self.params {
            FamilyParams::Scaled {
                alpha,
                beta,
                negative_b,
            } => (alpha, beta, *negative_b),
            FamilyParams::Fixed { .. } => {
                return Err(Error::UnsupportedField(
                    "fixed parameters generate no external field".into(),
                ))
            }
        };
        match self.kind {
            FamilyKind::LittleQLaguerre => Ok(FieldSpec::log_linear(alpha.clone())),
            FamilyKind::QBessel => {
                // Q̂(t) = t²/4 + αt, one piece.
                FieldSpec::new(vec![FieldPiece {
                    t_lo: Rational::new(),
                    t_hi: None,
                    c2: Rational::from((1, 4)),
                    c1: alpha.clone(),
                    c0: Rational::new(),
                }])
            }
            FamilyKind::LittleQJacobi => {
                if *alpha < 0u32 {
                    return Err(Error::UnsupportedField(
                        "little q-Jacobi field requires alpha >= 0".into(),
                    ));
                }
                let beta = beta.as_ref().expect("Jacobi carries beta");
                if !negative_b || *beta >= 0u32 {
                    // b does not reach the field: Q̂ = αt.
                    return Ok(FieldSpec::log_linear(alpha.clone()));
                }
                // b = −q^{2nβ}, β < 0: quadratic piece t < −2β, linear beyond.
                let brk = Rational::from(beta * &Rational::from(-2));
                FieldSpec::new(vec![
                    FieldPiece {
                        t_lo: Rational::new(),
                        t_hi: Some(brk.clone()),
                        c2: Rational::from((1, 4)),
                        c1: Rational::from(alpha + beta),
                        c0: Rational::from(beta * beta),
                    },
                    FieldPiece {
                        t_lo: brk,
                        t_hi: None,
                        c2: Rational::new(),
                        c1: alpha.clone(),
                        c0: Rational::new(),
                    },
                ])
            }
        }
    }
}

/// Terminating ₂φ₁(q^{−n}, B; C | q, qx) via the term-ratio recurrence;
/// `None` parameters stand for the 0 slot (their Pochhammer factors are 1).
fn phi21_terminating(
    n: u32,
    upper2: Option<&Float>,
    lower: Option<&Float>,
    x: &Float,
    ctx: &PrecisionContext,
) -> Float {
    let mut sum = ctx.float(1u32);
    let mut term = ctx.float(1u32);
    let qx = ctx.float(x) * ctx.q_float();
    let mut q_pow_k = ctx.float(1u32);
    let mut q_neg = ctx.q_pow_int(-(n as i64));
    for _ in 0..n {
        let mut factor = (ctx.float(1u32) - &q_neg) * &qx;
        if let Some(b) = upper2 {
            factor *= ctx.float(1u32) - ctx.float(b) * &q_pow_k;
        }
        let mut denom = ctx.float(1u32) - ctx.float(&q_pow_k) * ctx.q_float();
        if let Some(c) = lower {
            denom *= ctx.float(1u32) - ctx.float(c) * &q_pow_k;
        }
        factor /= denom;
        term *= factor;
        sum += &term;
        q_pow_k *= ctx.q_float();
        q_neg *= ctx.q_float();
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qnum::DEFAULT_MARGIN;

    fn ctx(num: u32, den: u32, bits: u32) -> PrecisionContext {
        PrecisionContext::new(Rational::from((num, den)), bits).unwrap()
    }

    fn rat(n: i32, d: u32) -> Rational {
        Rational::from((n, d))
    }

    fn rel_err(got: &Float, want: &Float) -> f64 {
        if want.is_zero() {
            return got.clone().abs().to_f64();
        }
        ((got.clone() - want) / want).abs().to_f64()
    }

    fn all_fixed_specs(q: &Rational) -> Vec<FamilySpec> {
        vec![
            FamilySpec::little_q_laguerre(rat(1, 2), q).unwrap(),
            FamilySpec::q_bessel(rat(1, 1)).unwrap(),
            FamilySpec::little_q_jacobi(rat(1, 2), rat(1, 3), q).unwrap(),
            // Negative fixed b is allowed (bq < 1).
            FamilySpec::little_q_jacobi(rat(1, 2), rat(-2, 1), q).unwrap(),
        ]
    }

    #[test]
    fn constructors_enforce_parameter_constraints() {
        let q = rat(1, 2);
        assert!(FamilySpec::little_q_laguerre(rat(3, 1), &q).is_err()); // aq = 3/2
        assert!(FamilySpec::little_q_laguerre(rat(-1, 2), &q).is_err());
        assert!(FamilySpec::q_bessel(rat(0, 1)).is_err());
        assert!(FamilySpec::little_q_jacobi(rat(1, 2), rat(5, 2), &q).is_err()); // bq = 5/4
        assert!(FamilySpec::little_q_laguerre_scaled(rat(-1, 4)).is_err());
        assert!(FamilySpec::little_q_jacobi_scaled(rat(-1, 2), rat(0, 1), true).is_err());
        assert!(FamilySpec::little_q_jacobi_scaled(rat(1, 2), rat(-1, 2), false).is_err());
        assert!(FamilySpec::little_q_jacobi_scaled(rat(0, 1), rat(-3, 4), true).is_ok());
    }

    #[test]
    fn eval_degree_zero_is_one() {
        let c = ctx(1, 2, 256);
        for fam in all_fixed_specs(c.q()) {
            let v = fam.eval(0, &c.float(rat(1, 3)), &c).unwrap();
            assert_eq!(v, 1u32);
        }
    }

    #[test]
    fn eval_refuses_insufficient_precision() {
        let c = ctx(1, 4, 128);
        let fam = FamilySpec::little_q_laguerre(rat(1, 2), c.q()).unwrap();
        // precision_for(20, q=1/4, margin 1) = 1600 > 128.
        let err = fam.eval(20, &c.float(1u32), &c).unwrap_err();
        assert!(matches!(err, Error::Precision { .. }));
    }

    #[test]
    fn laguerre_degree_one_closed_form() {
        // p_1(x) = 1 − x/(1 − aq); root at 1 − aq.
        let c = ctx(1, 2, 256);
        let fam = FamilySpec::little_q_laguerre(rat(1, 2), c.q()).unwrap();
        for xr in [rat(1, 5), rat(2, 3), rat(1, 1)] {
            let x = c.float(&xr);
            let got = fam.eval(1, &x, &c).unwrap();
            let want = c.float(1u32) - c.float(&xr) / c.float(rat(3, 4));
            assert!(rel_err(&got, &want) < 1e-60);
        }
        let root = fam.eval(1, &c.float(rat(3, 4)), &c).unwrap();
        assert!(root.to_f64().abs() < 1e-60);
    }

    #[test]
    fn bessel_degree_one_closed_form() {
        // y_1(x) = 1 − (1+aq)x under the plain ₂φ₁ term convention; the
        // orthogonality sum Σ_k W_k y_1(q^k) vanishing pins the convention.
        let c = ctx(1, 2, 320);
        let fam = FamilySpec::q_bessel(rat(1, 1)).unwrap();
        let x = c.float(rat(1, 3));
        let got = fam.eval(1, &x, &c).unwrap();
        let want = c.float(1u32) - c.float(rat(3, 2)) * &x;
        assert!(rel_err(&got, &want) < 1e-60);
        let mut sum = c.float(0u32);
        for k in 0..400u32 {
            let pk = fam.eval(1, &c.q_pow_int(k as i64), &c).unwrap();
            sum += fam.orth_weight(k, 1, &c).unwrap() * pk;
        }
        assert!(sum.to_f64().abs() < 1e-60, "sum = {}", sum.to_f64());
    }

    #[test]
    fn eval_at_one_stable_under_precision_doubling() {
        let c = ctx(1, 2, 1024);
        let c2 = c.with_bits(2048).unwrap();
        let budget = 2f64.powi(-(1024 / 2));
        for fam in [
            FamilySpec::little_q_laguerre(rat(1, 2), c.q()).unwrap(),
            FamilySpec::little_q_jacobi(rat(1, 2), rat(1, 3), c.q()).unwrap(),
        ] {
            for n in [5u32, 12] {
                let v1 = fam.eval(n, &c.float(1u32), &c).unwrap();
                let v2 = fam.eval(n, &c2.float(1u32), &c2).unwrap();
                assert!(v1.is_finite());
                assert!(rel_err(&v1, &v2) < budget, "n={n}");
            }
        }
    }

    #[test]
    fn monic_normalization() {
        let c = ctx(1, 2, 512);
        // Degree-1 little q-Laguerre monic form is x − (1 − aq).
        let fam = FamilySpec::little_q_laguerre(rat(1, 2), c.q()).unwrap();
        let x = c.float(rat(1, 7));
        let got = fam.monic_eval(1, &x, &c).unwrap();
        let want = c.float(&x) - c.float(rat(3, 4));
        assert!(rel_err(&got, &want) < 1e-60);
        // Monic value at 0 has sign (−1)^n: all n zeros lie in (0,1].
        let c = c.with_bits(1024).unwrap();
        for fam in all_fixed_specs(c.q()) {
            for n in 0..=20u32 {
                let v = fam.monic_eval(n, &c.float(0u32), &c).unwrap();
                let expect_neg = n % 2 == 1;
                assert_eq!(
                    v < 0u32,
                    expect_neg,
                    "kind {:?} n {n} value {}",
                    fam.kind(),
                    v.to_f64()
                );
            }
        }
    }

    #[test]
    fn weight_agrees_with_lattice_weights() {
        let c = ctx(1, 2, 320);
        for fam in all_fixed_specs(c.q()) {
            let ratio = fam.weight_ratio_const(7, &c).unwrap();
            for k in 0..12u32 {
                let x = c.q_pow_int(k as i64);
                let cont = fam.weight(&x, 7, &c).unwrap();
                let disc = fam.lattice_weight(k, 7, &c).unwrap() * c.float(&ratio);
                assert!(
                    rel_err(&cont, &disc) < 1e-55,
                    "kind {:?} k {k}: {} vs {}",
                    fam.kind(),
                    cont.to_f64(),
                    disc.to_f64()
                );
            }
        }
    }

    #[test]
    fn weight_rejects_out_of_domain() {
        let c = ctx(1, 2, 256);
        let fam = FamilySpec::little_q_laguerre(rat(1, 2), c.q()).unwrap();
        assert!(fam.weight(&c.float(0u32), 3, &c).is_err());
        assert!(fam.weight(&c.float(2u32), 3, &c).is_err());
    }

    #[test]
    fn orthogonality_sums_vanish_off_diagonal() {
        // Σ_k W_k p_n p_m = h_n δ_{nm}, truncated by the geometric decay of W_k.
        let c = ctx(1, 2, 320);
        for fam in all_fixed_specs(c.q()) {
            for n in 0..=4u32 {
                for m in 0..=n {
                    let mut sum = c.float(0u32);
                    for k in 0..400u32 {
                        let x = c.q_pow_int(k as i64);
                        let pn = fam.eval(n, &x, &c).unwrap();
                        let pm = fam.eval(m, &x, &c).unwrap();
                        sum += fam.orth_weight(k, n, &c).unwrap() * pn * pm;
                    }
                    if n == m {
                        let h = fam.l2_norm_sq(n, &c).unwrap();
                        assert!(
                            rel_err(&sum, &h) < 1e-50,
                            "kind {:?} n {n}: sum {} vs h {}",
                            fam.kind(),
                            sum.to_f64(),
                            h.to_f64()
                        );
                    } else {
                        assert!(
                            sum.clone().abs().to_f64() < 1e-50,
                            "kind {:?} ({n},{m}): {}",
                            fam.kind(),
                            sum.to_f64()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn norm_identity_ties_gamma_h_and_kappa() {
        // γ_n·√h_n = |κ_n| across all families, including scaled parameters.
        let c = ctx(3, 4, 640);
        let mut specs = all_fixed_specs(c.q());
        specs.push(FamilySpec::little_q_laguerre_scaled(rat(1, 1)).unwrap());
        specs.push(FamilySpec::q_bessel_scaled(rat(-3, 4)));
        specs.push(FamilySpec::q_bessel_scaled(rat(-2, 1)));
        specs.push(FamilySpec::little_q_jacobi_scaled(rat(0, 1), rat(-3, 4), true).unwrap());
        for fam in specs {
            for n in 0..=10u32 {
                let gamma = fam.leading_coeff(n, &c).unwrap();
                let h = fam.l2_norm_sq(n, &c).unwrap();
                let kappa = fam.phi_leading_coeff(n, &c).abs();
                let lhs = gamma * h.sqrt();
                assert!(
                    rel_err(&lhs, &kappa) < 1e-40,
                    "kind {:?} n {n}: {} vs {}",
                    fam.kind(),
                    lhs.to_f64(),
                    kappa.to_f64()
                );
            }
        }
    }

    #[test]
    fn gamma_zero_matches_norm_of_one() {
        // γ_0 = 1/√h_0; for little q-Laguerre √((aq;q)_∞).
        let c = ctx(1, 4, 256);
        let fam = FamilySpec::little_q_laguerre(rat(1, 2), c.q()).unwrap();
        let gamma0 = fam.leading_coeff(0, &c).unwrap();
        let aq = c.float(rat(1, 8));
        let want = poch_infinite(&aq, &c).unwrap().sqrt();
        assert!(rel_err(&gamma0, &want) < 1e-55);
        let h0 = fam.l2_norm_sq(0, &c).unwrap();
        let recip = c.float(1u32) / h0.sqrt();
        assert!(rel_err(&gamma0, &recip) < 1e-55);
    }

    #[test]
    fn jacobi_b_zero_reduces_to_laguerre() {
        let c = ctx(1, 2, 512);
        let jac = FamilySpec::little_q_jacobi(rat(1, 2), rat(0, 1), c.q()).unwrap();
        let lag = FamilySpec::little_q_laguerre(rat(1, 2), c.q()).unwrap();
        let x = c.float(rat(2, 7));
        for n in 0..=10u32 {
            let vj = jac.eval(n, &x, &c).unwrap();
            let vl = lag.eval(n, &x, &c).unwrap();
            assert!(rel_err(&vj, &vl) < 1e-70, "n={n}");
            let gj = jac.leading_coeff(n, &c).unwrap();
            let gl = lag.leading_coeff(n, &c).unwrap();
            assert!(rel_err(&gj, &gl) < 1e-40, "n={n}");
        }
        let wj = jac.weight(&c.float(rat(1, 3)), 0, &c).unwrap();
        let wl = lag.weight(&c.float(rat(1, 3)), 0, &c).unwrap();
        assert!(rel_err(&wj, &wl) < 1e-60);
    }

    #[test]
    fn jacobi_a_to_zero_limit_is_bessel() {
        // lim_{a→0} p_n(x; a, −b/(aq) | q) = y_n(x; b; q): the difference
        // shrinks as a = 10^{−4}, 10^{−8}, 10^{−12}.
        let c = ctx(1, 2, 512);
        let bessel = FamilySpec::q_bessel(rat(1, 2)).unwrap();
        let x = c.float(rat(1, 3));
        for n in [1u32, 3, 6] {
            let want = bessel.eval(n, &x, &c).unwrap();
            let mut last = f64::INFINITY;
            for m in [4i32, 8, 12] {
                let a = Rational::from((1, 10u32)).pow(m as u32);
                let b = Rational::from(&(-rat(1, 2)) / &(Rational::from(&a * c.q())));
                let jac = FamilySpec::little_q_jacobi(a, b, c.q()).unwrap();
                let got = jac.eval(n, &x, &c).unwrap();
                let diff = rel_err(&got, &want);
                assert!(diff < last, "n={n} m={m}: {diff} !< {last}");
                last = diff;
            }
            assert!(last < 1e-10, "n={n}");
        }
    }

    #[test]
    fn external_field_shapes() {
        // Little q-Laguerre: single piece, xQ' ≡ −α.
        let f = FamilySpec::little_q_laguerre_scaled(rat(1, 1))
            .unwrap()
            .external_field()
            .unwrap();
        assert_eq!(f.pieces().len(), 1);
        assert_eq!(f.xqprime_hat(&rat(3, 1)), rat(-1, 1));
        // q-Bessel α = 0: pure quadratic, u = −1/(4 log q), v = 0.
        let f = FamilySpec::q_bessel_scaled(rat(0, 1)).external_field().unwrap();
        let ln_q = 0.75f64.ln();
        let phys = f.physical_pieces(ln_q);
        assert!((phys[0].u - (-1.0 / (4.0 * ln_q))).abs() < 1e-15);
        assert_eq!(phys[0].v, 0.0);
        // Little q-Jacobi α = 0, β = −1/2, b negative: breakpoint at q^{−2β} = q,
        // quadratic on x > q, linear (here zero) below; continuous at the break.
        let f = FamilySpec::little_q_jacobi_scaled(rat(0, 1), rat(-1, 2), true)
            .unwrap()
            .external_field()
            .unwrap();
        assert_eq!(f.pieces().len(), 2);
        assert_eq!(f.pieces()[0].t_hi.as_ref().unwrap(), &rat(1, 1));
        assert_eq!(f.pieces()[0].c2, rat(1, 4));
        assert_eq!(f.pieces()[0].c1, rat(-1, 2));
        assert_eq!(f.pieces()[0].c0, rat(1, 4));
        // Positive b never reaches the field.
        let f = FamilySpec::little_q_jacobi_scaled(rat(1, 2), rat(3, 4), false)
            .unwrap()
            .external_field()
            .unwrap();
        assert_eq!(f.pieces().len(), 1);
        assert_eq!(f.xqprime_hat(&rat(0, 1)), rat(-1, 2));
        // Fixed parameters have no field.
        let fam = FamilySpec::q_bessel(rat(1, 1)).unwrap();
        assert!(matches!(
            fam.external_field(),
            Err(Error::UnsupportedField(_))
        ));
    }

    #[test]
    fn weight_decay_premise_approaches_field() {
        // max over x ∈ [0.2, 1] of |(−1/n²) log w(xⁿ) − 2Q(x)| shrinks with n.
        let c = ctx(3, 4, 320);
        let specs = vec![
            FamilySpec::little_q_laguerre_scaled(rat(1, 1)).unwrap(),
            FamilySpec::q_bessel_scaled(rat(-3, 4)),
            FamilySpec::little_q_jacobi_scaled(rat(0, 1), rat(-3, 4), true).unwrap(),
        ];
        for fam in specs {
            let field = fam.external_field().unwrap();
            let mut last = f64::INFINITY;
            for n in [20u32, 40, 80] {
                let mut worst = 0f64;
                for i in 0..=16 {
                    let x = 0.2 + 0.05 * i as f64;
                    let xf = c.float(x);
                    let xn = xf.pow(n);
                    let lw = fam.log_weight(&xn, n, &c).unwrap().to_f64();
                    let q2 = 2.0 * field.eval(x, c.ln_q_f64()).unwrap();
                    worst = worst.max((-lw / (n as f64 * n as f64) - q2).abs());
                }
                assert!(
                    worst < last,
                    "kind {:?} n {n}: {worst} !< {last}",
                    fam.kind()
                );
                last = worst;
            }
        }
    }

    #[test]
    fn scaled_gamma_trend_toward_stated_limits() {
        // log γ_n/n² approaches −(½+α) log q (little q-Laguerre, α = 1) and the
        // three-regime q-Bessel exponents; small-n smoke version of the
        // acceptance trends.
        let c4 = ctx(1, 4, 640);
        let lag = FamilySpec::little_q_laguerre_scaled(rat(1, 1)).unwrap();
        let target = -1.5 * c4.ln_q_f64();
        let mut last = f64::INFINITY;
        for n in [4u32, 8, 16] {
            let g = lag.leading_coeff(n, &c4).unwrap().ln().to_f64();
            let e = (g / (n as f64 * n as f64) - target).abs();
            assert!(e < last, "n={n}");
            last = e;
        }
        let c34 = ctx(3, 4, 640);
        // α = −2 converges fast but not monotonically; only closeness there.
        for (alpha, limit_hat, monotone) in [
            (rat(1, 1), -7.0 / 4.0, true),   // −¾ − α
            (rat(-3, 4), -1.0 / 16.0, true), // −(α+1)²
            (rat(-2, 1), 1.0, false),        // +(α+1)²
        ] {
            let fam = FamilySpec::q_bessel_scaled(alpha.clone());
            let target = limit_hat * c34.ln_q_f64();
            let mut last = f64::INFINITY;
            for n in [4u32, 8, 16] {
                let g = fam.leading_coeff(n, &c34).unwrap().ln().to_f64();
                let e = (g / (n as f64 * n as f64) - target).abs();
                if monotone {
                    assert!(e < last, "alpha={alpha} n={n}: {e} !< {last}");
                }
                last = e;
            }
            assert!(last < 0.1, "alpha={alpha}: {last}");
        }
    }

    #[test]
    fn precision_gate_uses_margin_one() {
        let c = ctx(1, 2, 128);
        let fam = FamilySpec::little_q_laguerre(rat(1, 2), c.q()).unwrap();
        // margin-1 need at n=8, q=1/2 is 128: exactly at the floor, allowed.
        assert_eq!(precision_for(8, &c, 1.0), 128);
        assert!(fam.eval(8, &c.float(1u32), &c).is_ok());
        assert_eq!(precision_for(8, &c, DEFAULT_MARGIN), 192);
    }
}
