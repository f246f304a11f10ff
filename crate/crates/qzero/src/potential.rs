//! Radial measures on (0,1], closed-form constrained equilibrium measures,
//! their logarithmic potentials, and variational-inequality verification.
//!
//! Everything is carried in log-q coordinates t = log x/log q ∈ [0, ∞): the
//! constraint measure becomes Lebesgue density exactly 1, every density in
//! scope becomes piecewise constant with rational breakpoints, and potentials
//! of such pieces are piecewise quadratic — so the whole construction stays in
//! exact rational arithmetic until a caller asks for physical values.

use rug::Rational;
use serde::Serialize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::FieldSpec;

/// Uniform density `rel` (relative to the constraint) on t ∈ [lo, hi].
/// Physically: density rel·(−1/log q)/r on radii [q^hi, q^lo].
#[derive(Debug, Clone, PartialEq)]
pub struct HatPiece {
    pub lo: Rational,
    pub hi: Rational,
    pub rel: Rational,
}

/// Point mass at radius q^depth.
#[derive(Debug, Clone, PartialEq)]
pub struct HatAtom {
    pub depth: Rational,
    pub mass: Rational,
}

/// A finite sum of c/r density pieces plus atoms, normalized to disjoint
/// sorted pieces (overlapping inputs add; equal-density neighbors merge).
#[derive(Debug, Clone, PartialEq)]
pub struct RadialMeasure {
    q: Rational,
    pieces: Vec<HatPiece>,
    atoms: Vec<HatAtom>,
}

fn validate_q(q: &Rational) -> Result<()> {
    if !(*q > 0u32 && *q < 1u32) {
        return Err(Error::Constraint(format!("0 < q < 1 (q = {q})")));
    }
    Ok(())
}

impl RadialMeasure {
    /// Builds from raw (possibly overlapping) pieces and atoms in log-q
    /// coordinates; overlaps are resolved by summing densities.
    pub fn from_hat(q: Rational, pieces: Vec<HatPiece>, atoms: Vec<HatAtom>) -> Result<Self> {
        validate_q(&q)?;
        for p in &pieces {
            if p.lo < 0u32 || p.hi <= p.lo {
                return Err(Error::Constraint(format!(
                    "piece needs 0 <= lo < hi (lo = {}, hi = {})",
                    p.lo, p.hi
                )));
            }
            if p.rel < 0u32 {
                return Err(Error::Constraint(format!("density >= 0 (rel = {})", p.rel)));
            }
        }
        for a in &atoms {
            if a.depth < 0u32 || a.mass < 0u32 {
                return Err(Error::Constraint(
                    "atom needs depth >= 0 and mass >= 0".into(),
                ));
            }
        }
        // Sweep distinct breakpoints and sum overlapping densities exactly.
        let mut cuts: Vec<Rational> = pieces
            .iter()
            .flat_map(|p| [p.lo.clone(), p.hi.clone()])
            .collect();
        cuts.sort();
        cuts.dedup();
        let mut normalized: Vec<HatPiece> = Vec::new();
        for pair in cuts.windows(2) {
            let (lo, hi) = (&pair[0], &pair[1]);
            let mut rel = Rational::new();
            for p in &pieces {
                if p.lo <= *lo && p.hi >= *hi {
                    rel += &p.rel;
                }
            }
            if rel == 0u32 {
                continue;
            }
            match normalized.last_mut() {
                Some(last) if last.hi == *lo && last.rel == rel => last.hi = hi.clone(),
                _ => normalized.push(HatPiece {
                    lo: lo.clone(),
                    hi: hi.clone(),
                    rel,
                }),
            }
        }
        let mut atoms: Vec<HatAtom> = atoms.into_iter().filter(|a| a.mass > 0u32).collect();
        atoms.sort_by(|a, b| a.depth.cmp(&b.depth));
        Ok(Self {
            q,
            pieces: normalized,
            atoms,
        })
    }

    pub fn q(&self) -> &Rational {
        &self.q
    }

    pub fn ln_q(&self) -> f64 {
        self.q.to_f64().ln()
    }

    /// Normalized disjoint pieces, ascending in t (descending in radius).
    pub fn hat_pieces(&self) -> &[HatPiece] {
        &self.pieces
    }

    pub fn atoms(&self) -> &[HatAtom] {
        &self.atoms
    }

    /// Physical view: (c, A, B) per piece meaning density c/r on [A, B].
    pub fn physical_pieces(&self) -> Vec<(f64, f64, f64)> {
        let ln_q = self.ln_q();
        self.pieces
            .iter()
            .map(|p| {
                let c = p.rel.to_f64() * (-1.0 / ln_q);
                let a = (p.hi.to_f64() * ln_q).exp();
                let b = (p.lo.to_f64() * ln_q).exp();
                (c, a, b)
            })
            .collect()
    }

    /// Total mass, exact.
    pub fn mass(&self) -> Rational {
        let mut m = Rational::new();
        for p in &self.pieces {
            m += Rational::from(&p.rel * &Rational::from(&p.hi - &p.lo));
        }
        for a in &self.atoms {
            m += &a.mass;
        }
        m
    }

    /// Density never exceeds the constraint and no atoms are present.
    pub fn is_constraint_admissible(&self) -> bool {
        self.atoms.is_empty() && self.pieces.iter().all(|p| p.rel <= 1u32)
    }

    /// Exact potential in hat units: U(q^d)/|log q| for rational depth d
    /// (d < 0 reaches radii above 1).
    pub fn potential_hat(&self, d: &Rational) -> Rational {
        let mut u = Rational::new();
        for p in &self.pieces {
            // ∫_lo^hi min(d, u) du, piecewise quadratic in d.
            let seg = if *d <= p.lo {
                Rational::from(d * &Rational::from(&p.hi - &p.lo))
            } else if *d >= p.hi {
                (Rational::from(&p.hi * &p.hi) - Rational::from(&p.lo * &p.lo))
                    / Rational::from(2u32)
            } else {
                Rational::from(d * &p.hi)
                    - Rational::from(d * d) / Rational::from(2u32)
                    - Rational::from(&p.lo * &p.lo) / Rational::from(2u32)
            };
            u += seg * &p.rel;
        }
        for a in &self.atoms {
            let depth = if *d < a.depth { d.clone() } else { a.depth.clone() };
            u += depth * &a.mass;
        }
        u
    }

    /// Same three-branch closed form at an arbitrary f64 depth.
    pub fn potential_hat_f64(&self, d: f64) -> f64 {
        let mut u = 0f64;
        for p in &self.pieces {
            let (lo, hi, rel) = (p.lo.to_f64(), p.hi.to_f64(), p.rel.to_f64());
            let seg = if d <= lo {
                d * (hi - lo)
            } else if d >= hi {
                (hi * hi - lo * lo) / 2.0
            } else {
                d * hi - d * d / 2.0 - lo * lo / 2.0
            };
            u += rel * seg;
        }
        for a in &self.atoms {
            u += a.mass.to_f64() * d.min(a.depth.to_f64());
        }
        u
    }

    /// U(r) = ∫ −log max(r, s) dμ(s), natural units.
    pub fn potential(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Constraint(format!("r > 0 (r = {r})")));
        }
        let ln_q = self.ln_q();
        let d = r.ln() / ln_q;
        Ok(-ln_q * self.potential_hat_f64(d))
    }

    /// Density relative to the constraint at depth d (piece endpoints count
    /// as inside).
    pub fn density_rel_at(&self, d: f64) -> f64 {
        const FUZZ: f64 = 1e-9;
        for p in &self.pieces {
            if d >= p.lo.to_f64() - FUZZ && d <= p.hi.to_f64() + FUZZ {
                return p.rel.to_f64();
            }
        }
        0.0
    }
}

/// σ' coefficient: the constraint density is c_σ/t with c_σ = −1/log q.
pub fn sigma_coefficient(ln_q: f64) -> f64 {
    -1.0 / ln_q
}

/// σ([a, b]) = (log b − log a)/(−log q).
pub fn sigma_mass(a: f64, b: f64, ln_q: f64) -> f64 {
    (b.ln() - a.ln()) / (-ln_q)
}

/// Mass of μ on (0, t] — the empirical-CDF comparator.
pub fn radial_cdf(mu: &RadialMeasure, t: f64) -> f64 {
    let d = t.ln() / mu.ln_q();
    let mut mass = 0f64;
    for p in mu.hat_pieces() {
        let (lo, hi, rel) = (p.lo.to_f64(), p.hi.to_f64(), p.rel.to_f64());
        // Radii ≤ t are depths ≥ d.
        let covered = (hi - lo.max(d)).max(0.0);
        mass += rel * covered;
    }
    for a in mu.atoms() {
        if a.depth.to_f64() >= d {
            mass += a.mass.to_f64();
        }
    }
    mass.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SupportKind {
    NoField,
    DecreasingQ,
    Band,
    BandPlusSweep,
    FullConstraint,
}

impl SupportKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SupportKind::NoField => "no-field",
            SupportKind::DecreasingQ => "decreasing-Q",
            SupportKind::Band => "band",
            SupportKind::BandPlusSweep => "band-plus-sweep",
            SupportKind::FullConstraint => "full-constraint",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    pub measure: RadialMeasure,
    /// Equilibrium constant in hat units: w = w_hat·(−log q).
    pub w_hat: Rational,
    pub field: FieldSpec,
    pub support_kind: SupportKind,
}

impl EquilibriumSolution {
    pub fn w(&self) -> f64 {
        -self.measure.ln_q() * self.w_hat.to_f64()
    }
}

/// The constrained equilibrium measure without external field: the constraint
/// restricted to [q, 1], with w = −½ log q.
pub fn equilibrium_no_field(q: &Rational) -> Result<EquilibriumSolution> {
    let measure = RadialMeasure::from_hat(
        q.clone(),
        vec![HatPiece {
            lo: Rational::new(),
            hi: Rational::from(1u32),
            rel: Rational::from(1u32),
        }],
        Vec::new(),
    )?;
    Ok(EquilibriumSolution {
        measure,
        w_hat: Rational::from((1u32, 2u32)),
        field: FieldSpec::zero(),
        support_kind: SupportKind::FullConstraint,
    })
}

/// Smallest t ≥ 0 with slope(t) ≤ target, where slope(t) = xQ'(x) at x = q^t.
/// None when the slope never reaches the target (mass cannot balance).
fn first_depth_with_slope_leq(field: &FieldSpec, target: &Rational) -> Option<Rational> {
    for p in field.pieces() {
        let s_lo = -(Rational::from(2u32 * &p.c2) * &p.t_lo + &p.c1);
        if s_lo <= *target {
            return Some(p.t_lo.clone());
        }
        if p.c2 > 0u32 {
            // Solve −(2c₂t + c₁) = target.
            let t = -Rational::from(target + &p.c1) / Rational::from(2u32 * &p.c2);
            match &p.t_hi {
                Some(hi) if t > *hi => continue,
                _ => return Some(t),
            }
        }
    }
    None
}

/// Field pieces intersected with [lo, hi], as measure pieces of density 2c₂.
fn band_pieces(field: &FieldSpec, lo: &Rational, hi: &Rational) -> Vec<HatPiece> {
    let mut out = Vec::new();
    for p in field.pieces() {
        let seg_lo = if p.t_lo > *lo { p.t_lo.clone() } else { lo.clone() };
        let seg_hi = match &p.t_hi {
            Some(h) if h < hi => h.clone(),
            _ => hi.clone(),
        };
        if seg_hi > seg_lo && p.c2 > 0u32 {
            out.push(HatPiece {
                lo: seg_lo,
                hi: seg_hi,
                rel: Rational::from(2u32 * &p.c2),
            });
        }
    }
    out
}

fn field_class_check(field: &FieldSpec) -> Result<()> {
    for p in field.pieces() {
        if p.c2 < 0u32 {
            return Err(Error::UnsupportedField(
                "xQ'(x) must be non-decreasing (negative quadratic coefficient)".into(),
            ));
        }
        if Rational::from(2u32 * &p.c2) > 1u32 {
            return Err(Error::UnsupportedField(
                "field curvature exceeds the constraint density".into(),
            ));
        }
    }
    // The band construction needs xQ'(x) continuous across breakpoints.
    for pair in field.pieces().windows(2) {
        let brk = &pair[1].t_lo;
        let left = -(Rational::from(2u32 * &pair[0].c2) * brk + &pair[0].c1);
        let right = -(Rational::from(2u32 * &pair[1].c2) * brk + &pair[1].c1);
        if left != right {
            return Err(Error::UnsupportedField(
                "xQ'(x) jumps at a field breakpoint".into(),
            ));
        }
    }
    Ok(())
}

/// Closed-form constrained equilibrium in an external field, by case on the
/// slope s(t) = xQ'(x):
///   s(0) ≤ 0          → the no-field measure, w picked up at the support edge;
///   s(0) ≥ 1          → free band [t_R, t₀] with s(t_R) = 1, s(t₀) = 0;
///   0 < s(0) < 1      → band [0, t₀] of mass s(0) plus the leftover 1 − s(0)
///                        swept under the constraint from t = 0 downward;
///                        when t₀ ≤ 1 the sweep saturates everything and the
///                        result collapses to the no-field measure.
pub fn equilibrium_with_field(field: &FieldSpec, q: &Rational) -> Result<EquilibriumSolution> {
    validate_q(q)?;
    field_class_check(field)?;

    let nu_sigma = || -> Result<RadialMeasure> {
        Ok(equilibrium_no_field(q)?.measure)
    };
    let edge_w = |measure: &RadialMeasure| -> Rational {
        // Fully saturated: equality of U + Q with w holds at the deep support
        // edge, where supp μ meets supp(σ̂ − μ).
        let edge = measure.pieces.last().expect("nonempty support").hi.clone();
        measure.potential_hat(&edge) + field.hat(&edge)
    };

    if field.is_zero() {
        let measure = nu_sigma()?;
        let w_hat = edge_w(&measure);
        return Ok(EquilibriumSolution {
            measure,
            w_hat,
            field: field.clone(),
            support_kind: SupportKind::NoField,
        });
    }

    let s0 = -field.pieces()[0].c1.clone();
    if s0 <= 0u32 {
        let measure = nu_sigma()?;
        let w_hat = edge_w(&measure);
        return Ok(EquilibriumSolution {
            measure,
            w_hat,
            field: field.clone(),
            support_kind: SupportKind::DecreasingQ,
        });
    }

    let one = Rational::from(1u32);
    let zero = Rational::new();
    let t0 = first_depth_with_slope_leq(field, &zero).ok_or_else(|| {
        Error::UnsupportedField("xQ'(x) stays positive; no equilibrium support edge".into())
    })?;

    if s0 >= 1u32 {
        let t_r = first_depth_with_slope_leq(field, &one).expect("reached 0, so reaches 1");
        let pieces = band_pieces(field, &t_r, &t0);
        let measure = RadialMeasure::from_hat(q.clone(), pieces, Vec::new())?;
        if measure.mass() != 1u32 {
            return Err(Error::Internal(format!(
                "band mass {} != 1; slope telescoping failed",
                measure.mass()
            )));
        }
        let w_hat = interior_w(&measure, field, &t_r, &t0);
        return Ok(EquilibriumSolution {
            measure,
            w_hat,
            field: field.clone(),
            support_kind: SupportKind::Band,
        });
    }

    // 0 < s(0) < 1: truncated band plus constraint sweep.
    let band = band_pieces(field, &zero, &t0);
    let band_mass: Rational = band
        .iter()
        .map(|p| Rational::from(&p.rel * &Rational::from(&p.hi - &p.lo)))
        .sum();
    if band_mass != s0 {
        return Err(Error::Internal(format!(
            "truncated band mass {band_mass} != slope at 1 ({s0})"
        )));
    }
    if t0 <= 1u32 {
        // Headroom t₀ − s(0) cannot absorb 1 − s(0): everything saturates.
        let measure = nu_sigma()?;
        let w_hat = edge_w(&measure);
        return Ok(EquilibriumSolution {
            measure,
            w_hat,
            field: field.clone(),
            support_kind: SupportKind::FullConstraint,
        });
    }
    // Find t* with ∫₀^{t*} (1 − rel) du = 1 − s(0), scanning band segments.
    let mut need = Rational::from(&one - &s0);
    let mut t_star = zero.clone();
    for p in &band {
        // Gap before this segment has headroom 1 per unit length.
        if p.lo > t_star {
            let gap = Rational::from(&p.lo - &t_star);
            if need <= gap {
                t_star += need;
                need = Rational::new();
                break;
            }
            need -= gap;
        }
        let head_rate = Rational::from(&one - &p.rel);
        let seg_head = Rational::from(&head_rate * &Rational::from(&p.hi - &p.lo));
        if head_rate > 0u32 && need <= seg_head {
            t_star = p.lo.clone() + Rational::from(&need / &head_rate);
            need = Rational::new();
            break;
        }
        need -= seg_head;
        t_star = p.hi.clone();
    }
    if need != 0u32 {
        return Err(Error::Internal(
            "sweep overran the band despite t0 > 1".into(),
        ));
    }
    let mut pieces = vec![HatPiece {
        lo: zero,
        hi: t_star.clone(),
        rel: one,
    }];
    for p in &band {
        if p.hi > t_star {
            pieces.push(HatPiece {
                lo: if p.lo > t_star { p.lo.clone() } else { t_star.clone() },
                hi: p.hi.clone(),
                rel: p.rel.clone(),
            });
        }
    }
    let measure = RadialMeasure::from_hat(q.clone(), pieces, Vec::new())?;
    if measure.mass() != 1u32 {
        return Err(Error::Internal(format!(
            "swept measure mass {} != 1",
            measure.mass()
        )));
    }
    let w_hat = interior_w(&measure, field, &t_star, &t0);
    Ok(EquilibriumSolution {
        measure,
        w_hat,
        field: field.clone(),
        support_kind: SupportKind::BandPlusSweep,
    })
}

/// w from U + Q at an interior point of an unsaturated band segment within
/// [band_lo, band_hi], where both variational inequalities bind.
fn interior_w(
    measure: &RadialMeasure,
    field: &FieldSpec,
    band_lo: &Rational,
    band_hi: &Rational,
) -> Rational {
    let unsaturated = measure
        .hat_pieces()
        .iter()
        .filter(|p| p.rel < 1u32 && p.lo >= *band_lo && p.hi <= *band_hi)
        .max_by(|a, b| {
            Rational::from(&a.hi - &a.lo).cmp(&Rational::from(&b.hi - &b.lo))
        });
    let point = match unsaturated {
        Some(p) => (p.lo.clone() + &p.hi) / Rational::from(2u32),
        // Saturated throughout: equality holds at the deep edge instead.
        None => band_hi.clone(),
    };
    measure.potential_hat(&point) + field.hat(&point)
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationalEntry {
    pub r: f64,
    pub u: f64,
    pub u_plus_q: f64,
    pub density_rel: f64,
    pub in_support: bool,
    pub below_constraint: bool,
    /// Signed margin: min over the applicable inequalities of slack − 0;
    /// negative means violated by that amount.
    pub slack: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationalReport {
    pub w: f64,
    pub tol: f64,
    pub entries: Vec<VariationalEntry>,
    pub violations: usize,
    pub worst_slack: f64,
    pub ok: bool,
}

/// Checks U + Q ≤ w on supp μ and U + Q ≥ w wherever the density sits
/// strictly below the constraint, radius by radius.
pub fn variational_check(
    sol: &EquilibriumSolution,
    grid: &[f64],
    tol: f64,
) -> VariationalReport {
    let ln_q = sol.measure.ln_q();
    let w = sol.w();
    let classify = |r: &f64| -> VariationalEntry {
        let r = *r;
        let d = r.ln() / ln_q;
        let u = -ln_q * sol.measure.potential_hat_f64(d);
        let qv = -ln_q * sol.field.hat_f64(d);
        let upq = u + qv;
        let rel = sol.measure.density_rel_at(d);
        let in_support = rel > 0.0;
        let below_constraint = rel < 1.0 - 1e-9;
        let mut slack = f64::INFINITY;
        if in_support {
            slack = slack.min(w - upq + tol);
        }
        if below_constraint {
            slack = slack.min(upq - w + tol);
        }
        VariationalEntry {
            r,
            u,
            u_plus_q: upq,
            density_rel: rel,
            in_support,
            below_constraint,
            slack,
            ok: slack >= 0.0,
        }
    };

    #[cfg(feature = "parallel")]
    let entries: Vec<VariationalEntry> = grid.par_iter().map(classify).collect();
    #[cfg(not(feature = "parallel"))]
    let entries: Vec<VariationalEntry> = grid.iter().map(classify).collect();

    let violations = entries.iter().filter(|e| !e.ok).count();
    let worst_slack = entries.iter().map(|e| e.slack).fold(f64::INFINITY, f64::min);
    VariationalReport {
        w,
        tol,
        entries,
        violations,
        worst_slack,
        ok: violations == 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::FamilySpec;

    fn rat(n: i32, d: u32) -> Rational {
        Rational::from((n, d))
    }

    fn piece(lo: Rational, hi: Rational, rel: Rational) -> HatPiece {
        HatPiece { lo, hi, rel }
    }

    fn nu_sigma(q: Rational) -> RadialMeasure {
        equilibrium_no_field(&q).unwrap().measure
    }

    fn bessel_solution(alpha: Rational, q: Rational) -> EquilibriumSolution {
        let field = FamilySpec::q_bessel_scaled(alpha).external_field().unwrap();
        equilibrium_with_field(&field, &q).unwrap()
    }

    #[test]
    fn sigma_reference_masses() {
        let ln_q = 0.25f64.ln();
        assert!((sigma_coefficient(ln_q) - 1.0 / 1.25f64.ln().max(1.3862943611198906)).abs() < 1e-12);
        assert!((sigma_mass(0.25, 1.0, ln_q) - 1.0).abs() < 1e-14);
        assert!((sigma_mass(0.0625, 1.0, ln_q) - 2.0).abs() < 1e-14);
        let a = 0.37f64;
        assert!((sigma_mass(a, 1.0, ln_q) - a.ln() / ln_q).abs() < 1e-14);
    }

    #[test]
    fn normalization_resolves_overlaps() {
        // ½ on [0, 3/2] plus ½ on [0, ½]: saturated down to ½, then ½ deeper —
        // the two-piece representation of the middle-regime measure.
        let m = RadialMeasure::from_hat(
            rat(3, 4),
            vec![
                piece(rat(0, 1), rat(3, 2), rat(1, 2)),
                piece(rat(0, 1), rat(1, 2), rat(1, 2)),
            ],
            Vec::new(),
        )
        .unwrap();
        assert_eq!(
            m.hat_pieces(),
            &[
                piece(rat(0, 1), rat(1, 2), rat(1, 1)),
                piece(rat(1, 2), rat(3, 2), rat(1, 2)),
            ]
        );
        assert_eq!(m.mass(), 1u32);
        assert!(m.is_constraint_admissible());
    }

    #[test]
    fn normalization_merges_touching_equal_density() {
        let m = RadialMeasure::from_hat(
            rat(1, 2),
            vec![
                piece(rat(0, 1), rat(1, 3), rat(1, 2)),
                piece(rat(1, 3), rat(1, 1), rat(1, 2)),
            ],
            Vec::new(),
        )
        .unwrap();
        assert_eq!(m.hat_pieces(), &[piece(rat(0, 1), rat(1, 1), rat(1, 2))]);
    }

    #[test]
    fn construction_rejections() {
        assert!(RadialMeasure::from_hat(rat(5, 4), vec![], vec![]).is_err());
        assert!(RadialMeasure::from_hat(
            rat(1, 2),
            vec![piece(rat(1, 1), rat(1, 2), rat(1, 1))],
            vec![]
        )
        .is_err());
        assert!(RadialMeasure::from_hat(
            rat(1, 2),
            vec![piece(rat(0, 1), rat(1, 1), rat(-1, 2))],
            vec![]
        )
        .is_err());
    }

    #[test]
    fn no_field_solution_reference() {
        let sol = equilibrium_no_field(&rat(1, 4)).unwrap();
        assert_eq!(sol.measure.mass(), 1u32);
        assert_eq!(sol.support_kind, SupportKind::FullConstraint);
        assert_eq!(sol.w_hat, rat(1, 2));
        assert!((sol.w() - 2f64.ln()).abs() < 1e-15);
        // Density saturates the constraint: rel = 1 on [q, 1].
        assert_eq!(sol.measure.hat_pieces(), &[piece(rat(0, 1), rat(1, 1), rat(1, 1))]);
        let phys = sol.measure.physical_pieces();
        assert!((phys[0].0 - sigma_coefficient(sol.measure.ln_q())).abs() < 1e-14);
        assert!((phys[0].1 - 0.25).abs() < 1e-15 && (phys[0].2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn potential_closed_form_branches() {
        let m = nu_sigma(rat(1, 4));
        // Deep branch: U = −log q/2 for r ≤ q.
        assert!((m.potential(0.1).unwrap() - 2f64.ln()).abs() < 1e-14);
        assert_eq!(m.potential_hat(&rat(3, 2)), rat(1, 2));
        // r = 1 → 0; r ≥ 1 → −log r.
        assert!((m.potential(1.0).unwrap()).abs() < 1e-15);
        assert!((m.potential(2.0).unwrap() + 2f64.ln()).abs() < 1e-14);
        // Interior: Û(d) = d − d²/2.
        assert_eq!(m.potential_hat(&rat(1, 2)), rat(3, 8));
        let ln_q = 0.25f64.ln();
        let r = 0.25f64.sqrt();
        let want = -ln_q * (0.5 - 0.125);
        assert!((m.potential(r).unwrap() - want).abs() < 1e-14);
        // Atom potential: mass at depth 1, evaluated above and below.
        let atom = RadialMeasure::from_hat(
            rat(1, 4),
            vec![],
            vec![HatAtom {
                depth: rat(1, 1),
                mass: rat(1, 1),
            }],
        )
        .unwrap();
        assert_eq!(atom.potential_hat(&rat(2, 1)), rat(1, 1));
        assert_eq!(atom.potential_hat(&rat(1, 2)), rat(1, 2));
        assert!(m.potential(0.0).is_err());
    }

    /// Midpoint-rule quadrature of −log max(r, s) against the density, the
    /// brute-force oracle for the closed forms.
    fn quadrature_potential(m: &RadialMeasure, r: f64, nodes_per_piece: usize) -> f64 {
        let ln_q = m.ln_q();
        let d = r.ln() / ln_q;
        let mut u = 0f64;
        for p in m.hat_pieces() {
            let (lo, hi, rel) = (p.lo.to_f64(), p.hi.to_f64(), p.rel.to_f64());
            let h = (hi - lo) / nodes_per_piece as f64;
            for j in 0..nodes_per_piece {
                let t = lo + (j as f64 + 0.5) * h;
                u += rel * h * d.min(t);
            }
        }
        for a in m.atoms() {
            u += a.mass.to_f64() * d.min(a.depth.to_f64());
        }
        -ln_q * u
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let measures = vec![
            nu_sigma(rat(1, 4)),
            bessel_solution(rat(-2, 1), rat(3, 4)).measure,
            bessel_solution(rat(-3, 4), rat(3, 4)).measure,
        ];
        // Deterministic pseudo-random radii covering all branches.
        let mut x = 0.341f64;
        for m in &measures {
            for _ in 0..50 {
                x = (x * 9301.0 + 49297.0) % 233280.0 / 233280.0;
                let r = 0.005 + 1.15 * x;
                let closed = m.potential(r).unwrap();
                let quad = quadrature_potential(m, r, 10_000);
                assert!(
                    (closed - quad).abs() <= 1e-8,
                    "r = {r}: {closed} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn circle_kernel_identity() {
        // −(1/2π)∫ log|r − s·e^{iθ}| dθ = −log max(r, s), checked by
        // trapezoidal quadrature (periodic smooth integrand for r ≠ s).
        let n = 1 << 13;
        for (r, s) in [
            (0.3f64, 0.9f64),
            (0.9, 0.3),
            (0.5, 0.55),
            (1.2, 0.4),
            (0.4, 1.2),
            (0.25, 0.26),
            (1.0, 0.5),
            (0.5, 1.0),
            (0.07, 0.8),
            (0.8, 0.07),
            (0.99, 0.5),
            (2.0, 1.9),
        ] {
            let mut sum = 0f64;
            for k in 0..n {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let re = r - s * theta.cos();
                let im = s * theta.sin();
                sum += 0.5 * (re * re + im * im).ln();
            }
            let quad = -sum / n as f64;
            let closed = -r.max(s).ln();
            assert!(
                (quad - closed).abs() <= 1e-6,
                "(r, s) = ({r}, {s}): {quad} vs {closed}"
            );
        }
    }

    #[test]
    fn bessel_band_case() {
        let sol = bessel_solution(rat(-2, 1), rat(3, 4));
        assert_eq!(sol.support_kind, SupportKind::Band);
        assert_eq!(
            sol.measure.hat_pieces(),
            &[piece(rat(2, 1), rat(4, 1), rat(1, 2))]
        );
        assert_eq!(sol.measure.mass(), 1u32);
        assert_eq!(sol.w_hat, rat(-1, 1));
        assert!((sol.w() - 0.75f64.ln()).abs() < 1e-15);
        // Physical: density −1/(2 log q)/r on [q⁴, q²].
        let phys = sol.measure.physical_pieces();
        let ln_q = 0.75f64.ln();
        assert!((phys[0].0 - (-1.0 / (2.0 * ln_q))).abs() < 1e-14);
        assert!((phys[0].1 - 0.75f64.powi(4)).abs() < 1e-14);
        assert!((phys[0].2 - 0.75f64.powi(2)).abs() < 1e-14);
    }

    #[test]
    fn bessel_band_plus_sweep_case() {
        let sol = bessel_solution(rat(-3, 4), rat(3, 4));
        assert_eq!(sol.support_kind, SupportKind::BandPlusSweep);
        assert_eq!(
            sol.measure.hat_pieces(),
            &[
                piece(rat(0, 1), rat(1, 2), rat(1, 1)),
                piece(rat(1, 2), rat(3, 2), rat(1, 2)),
            ]
        );
        assert_eq!(sol.measure.mass(), 1u32);
        // w = −(α+1)² log q, i.e. ŵ = (α+1)² = 1/16.
        assert_eq!(sol.w_hat, rat(1, 16));
        assert!(sol.measure.is_constraint_admissible());
    }

    #[test]
    fn decreasing_field_cases() {
        // Little q-Laguerre field αt, α = 1: ν^σ with w = −(½ + α) log q.
        let field = FamilySpec::little_q_laguerre_scaled(rat(1, 1))
            .unwrap()
            .external_field()
            .unwrap();
        let sol = equilibrium_with_field(&field, &rat(1, 4)).unwrap();
        assert_eq!(sol.support_kind, SupportKind::DecreasingQ);
        assert_eq!(sol.measure, nu_sigma(rat(1, 4)));
        assert_eq!(sol.w_hat, rat(3, 2));
        assert!((sol.w() - (-1.5 * 0.25f64.ln())).abs() < 1e-14);
        // q-Bessel α = 1 (first regime): also ν^σ; ŵ = ½ + Q̂(1) = 7/4.
        let sol = bessel_solution(rat(1, 1), rat(3, 4));
        assert_eq!(sol.support_kind, SupportKind::DecreasingQ);
        assert_eq!(sol.w_hat, rat(7, 4));
        // Zero field: same measure, labeled no-field, ŵ = ½.
        let sol = equilibrium_with_field(&FieldSpec::zero(), &rat(1, 4)).unwrap();
        assert_eq!(sol.support_kind, SupportKind::NoField);
        assert_eq!(sol.w_hat, rat(1, 2));
    }

    #[test]
    fn sweep_collapse_at_half() {
        // α = −½ sits exactly on the collapse boundary: t₀ = 1.
        let sol = bessel_solution(rat(-1, 2), rat(3, 4));
        assert_eq!(sol.support_kind, SupportKind::FullConstraint);
        assert_eq!(sol.measure, nu_sigma(rat(3, 4)));
        // Just above: still full constraint.
        let sol = bessel_solution(rat(-2, 5), rat(3, 4));
        assert_eq!(sol.support_kind, SupportKind::FullConstraint);
        // Just below: a genuine two-piece measure appears continuously.
        let eps = rat(1, 1000);
        let sol = bessel_solution(rat(-1, 2) - &eps, rat(3, 4));
        assert_eq!(sol.support_kind, SupportKind::BandPlusSweep);
        let p = sol.measure.hat_pieces();
        assert_eq!(p.len(), 2);
        // t* = 2(1 + α) = 1 − 2ε, t₀ = −2α = 1 + 2ε.
        assert_eq!(p[0].hi, rat(1, 1) - Rational::from(2u32 * &eps));
        assert_eq!(p[1].hi, rat(1, 1) + Rational::from(2u32 * &eps));
    }

    #[test]
    fn band_meets_sweep_at_minus_one() {
        // α = −1: the sweep degenerates (t* = 0) and the band case takes over
        // with the same measure [0, 2] at half density.
        let sol = bessel_solution(rat(-1, 1), rat(3, 4));
        assert_eq!(sol.support_kind, SupportKind::Band);
        assert_eq!(sol.measure.hat_pieces(), &[piece(rat(0, 1), rat(2, 1), rat(1, 2))]);
        let eps = rat(1, 1000);
        let below = bessel_solution(rat(-1, 1) - &eps, rat(3, 4));
        let above = bessel_solution(rat(-1, 1) + &eps, rat(3, 4));
        assert_eq!(below.support_kind, SupportKind::Band);
        assert_eq!(above.support_kind, SupportKind::BandPlusSweep);
        // Endpoints converge from both sides.
        assert_eq!(below.measure.hat_pieces()[0].lo, Rational::from(2u32 * &eps));
        assert_eq!(above.measure.hat_pieces()[0].hi, Rational::from(2u32 * &eps));
        // γ-exponent continuity: −¾ − α = −(α+1)² at α = −½; both zero at −1.
        let a = rat(-1, 2);
        assert_eq!(
            rat(-3, 4) - &a,
            -Rational::from(&(rat(1, 1) + &a) * &(rat(1, 1) + &a))
        );
    }

    #[test]
    fn jacobi_field_reproduces_bessel_measure() {
        // Same construction with α replaced by α+β; the measures agree
        // structurally while the fields (and hence w) differ.
        let q = rat(3, 4);
        let bess = bessel_solution(rat(-3, 4), q.clone());
        for (alpha, beta) in [(rat(0, 1), rat(-3, 4)), (rat(1, 4), rat(-1, 1))] {
            let fam = FamilySpec::little_q_jacobi_scaled(alpha, beta, true).unwrap();
            let field = fam.external_field().unwrap();
            let sol = equilibrium_with_field(&field, &q).unwrap();
            assert_eq!(sol.support_kind, SupportKind::BandPlusSweep);
            assert_eq!(sol.measure, bess.measure);
        }
        // The α = 0, β = −¾ equilibrium constant, exact.
        let fam = FamilySpec::little_q_jacobi_scaled(rat(0, 1), rat(-3, 4), true).unwrap();
        let sol = equilibrium_with_field(&fam.external_field().unwrap(), &q).unwrap();
        assert_eq!(sol.w_hat, rat(5, 8));
    }

    #[test]
    fn unsupported_fields_rejected() {
        use crate::field::FieldPiece;
        let q = rat(1, 2);
        // Curvature above the constraint: 2c₂ = 3/2 > 1.
        let f = FieldSpec::new(vec![FieldPiece {
            t_lo: rat(0, 1),
            t_hi: None,
            c2: rat(3, 4),
            c1: rat(0, 1),
            c0: rat(0, 1),
        }])
        .unwrap();
        assert!(matches!(
            equilibrium_with_field(&f, &q),
            Err(Error::UnsupportedField(_))
        ));
        // Slope that never comes down: Q̂ = −t (s ≡ 1) is fine, but s ≡ ½
        // constant never reaches 0 with positive slope... use c1 = −1/2, c2 = 0.
        let f = FieldSpec::new(vec![FieldPiece {
            t_lo: rat(0, 1),
            t_hi: None,
            c2: rat(0, 1),
            c1: rat(-1, 2),
            c0: rat(0, 1),
        }])
        .unwrap();
        assert!(matches!(
            equilibrium_with_field(&f, &q),
            Err(Error::UnsupportedField(_))
        ));
    }

    #[test]
    fn cdf_reference_values() {
        let m = nu_sigma(rat(1, 4));
        assert!((radial_cdf(&m, 0.25) - 0.0).abs() < 1e-12);
        assert!((radial_cdf(&m, 1.0) - 1.0).abs() < 1e-12);
        assert!((radial_cdf(&m, 0.5) - 0.5).abs() < 1e-12);
        assert!((radial_cdf(&m, 0.1) - 0.0).abs() < 1e-12);
        // Middle-regime slope change at q^{2(α+1)}: density doubles across it.
        let sol = bessel_solution(rat(-3, 4), rat(3, 4));
        let q = 0.75f64;
        let brk = q.powf(0.5);
        let h = 0.01;
        let upper_slope = radial_cdf(&sol.measure, brk * (1.0 + h)) - radial_cdf(&sol.measure, brk);
        let lower_slope = radial_cdf(&sol.measure, brk) - radial_cdf(&sol.measure, brk * (1.0 - h));
        assert!(upper_slope > 1.5 * lower_slope, "{upper_slope} vs {lower_slope}");
    }

    #[test]
    fn variational_no_field_profile() {
        let sol = equilibrium_no_field(&rat(1, 4)).unwrap();
        let grid: Vec<f64> = (1..=200).map(|i| i as f64 / 200.0 * 1.0).collect();
        let report = variational_check(&sol, &grid, 1e-9);
        assert!(report.ok, "worst slack {}", report.worst_slack);
        let w = sol.w();
        for e in &report.entries {
            if e.r <= 0.25 {
                // Exactly w below the support.
                assert!((e.u_plus_q - w).abs() < 1e-12, "r = {}", e.r);
            } else if e.r < 0.999 {
                assert!(e.u_plus_q < w, "r = {}", e.r);
            }
        }
    }

    #[test]
    fn variational_band_profiles() {
        let q = 0.75f64;
        for alpha in [rat(-2, 1), rat(-3, 4)] {
            let sol = bessel_solution(alpha, rat(3, 4));
            let grid: Vec<f64> = (1..=400)
                .map(|i| q.powf(5.0) * q.powf(-5.0 * i as f64 / 400.0) * 1.0)
                .map(|r| r.min(1.0))
                .collect();
            let report = variational_check(&sol, &grid, 1e-9);
            assert!(report.ok, "alpha case: worst slack {}", report.worst_slack);
            // Constant on the unsaturated band.
            let w = sol.w();
            for e in &report.entries {
                if e.density_rel > 0.0 && e.density_rel < 1.0 {
                    assert!((e.u_plus_q - w).abs() < 1e-10, "r = {}", e.r);
                }
            }
        }
        // A genuinely violated claim produces a detailed failure entry.
        let mut sol = bessel_solution(rat(-2, 1), rat(3, 4));
        sol.w_hat += rat(1, 10);
        let report = variational_check(&sol, &[0.5], 1e-6);
        assert!(!report.ok);
        assert_eq!(report.violations, 1);
        assert!(report.worst_slack < 0.0);
    }
}
