//! Verification suites: trend checks for the leading-coefficient limits,
//! Kolmogorov–Smirnov convergence of scaled zeros, variational-inequality
//! profiles, solver-vs-closed-form comparisons, and the supporting series
//! limits. Each suite returns a serializable report with measured values and
//! an explicit pass flag; the CLI and the acceptance tests share these
//! drivers.

use std::time::Instant;

use rug::Rational;
use serde::Serialize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eqsolver::{
    compare_to_closed_form, solve, DiscreteMeasure, RadialGrid, SolverConfig,
};
use crate::families::{FamilyKind, FamilyParams, FamilySpec};
use crate::field::FieldSpec;
use crate::lattice::norm_ratio_trend;
use crate::potential::{
    equilibrium_no_field, equilibrium_with_field, radial_cdf, variational_check,
    EquilibriumSolution, SupportKind,
};
use crate::qnum::{poch_infinite, precision_for, PrecisionContext, DEFAULT_MARGIN};
use crate::zeros::{compute_zeros, ks_distance, scaled_zeros};

/// The limiting measure of scaled zeros for a family: the no-field
/// equilibrium for fixed parameters, the field equilibrium for scaled ones.
pub fn limiting_equilibrium(fam: &FamilySpec, q: &Rational) -> Result<EquilibriumSolution> {
    if fam.is_scaled() {
        equilibrium_with_field(&fam.external_field()?, q)
    } else {
        equilibrium_no_field(q)
    }
}

/// Stated limit of log γ_n/n² in units of −log q, when a closed form exists.
pub fn stated_gamma_limit_hat(fam: &FamilySpec) -> Option<Rational> {
    let half = Rational::from((1u32, 2u32));
    match (fam.kind(), fam.params()) {
        (FamilyKind::LittleQLaguerre, FamilyParams::Fixed { .. }) => Some(half),
        (FamilyKind::LittleQLaguerre, FamilyParams::Scaled { alpha, .. }) => {
            Some(half + alpha)
        }
        (FamilyKind::QBessel, FamilyParams::Fixed { .. }) => Some(Rational::from((3u32, 4u32))),
        (FamilyKind::QBessel, FamilyParams::Scaled { alpha, .. }) => {
            let one = Rational::from(1u32);
            if *alpha >= Rational::from((-1, 2)) {
                Some(Rational::from((3u32, 4u32)) + alpha)
            } else {
                let sq = Rational::from(&(alpha.clone() + &one) * &(alpha.clone() + &one));
                if *alpha > -one {
                    Some(sq)
                } else {
                    Some(-sq)
                }
            }
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrendEntry {
    pub n: u32,
    pub measured: f64,
    pub error: f64,
    pub bits: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct SignCheck {
    /// Limit exponent as stated (negative: γ_n decays in this regime).
    pub stated_hat: f64,
    /// The sign-flipped alternative.
    pub flipped_hat: f64,
    pub err_stated: f64,
    pub err_flipped: f64,
    pub verdict: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaReport {
    pub label: String,
    pub q: String,
    /// Limit of log γ_n/n², natural log units.
    pub target: f64,
    pub target_hat: f64,
    pub entries: Vec<TrendEntry>,
    pub strictly_decreasing: bool,
    pub final_error: f64,
    /// Present when the stated exponent is negative, to settle its sign.
    pub sign_check: Option<SignCheck>,
    pub pass: bool,
    pub elapsed_ms: u128,
}

/// Measures log γ_n/n² against the stated limit over a degree ladder.
/// `require_monotone` demands strictly decreasing errors; otherwise a small
/// final error forgives oscillation around the limit.
pub fn gamma_suite(
    label: &str,
    fam: &FamilySpec,
    q: &Rational,
    ns: &[u32],
    require_monotone: bool,
    final_tol: f64,
) -> Result<GammaReport> {
    let start = Instant::now();
    let target_hat = stated_gamma_limit_hat(fam).ok_or_else(|| {
        Error::Constraint("no stated leading-coefficient limit for this family".into())
    })?;
    let base = PrecisionContext::new(q.clone(), 192)?;
    let abs_ln_q = -base.ln_q_f64();
    let target = target_hat.to_f64() * abs_ln_q;
    let mut entries = Vec::with_capacity(ns.len());
    for &n in ns {
        let bits = precision_for(n, &base, DEFAULT_MARGIN).max(base.bits());
        let ctx = base.with_bits(bits)?;
        let gamma = fam.leading_coeff(n, &ctx)?;
        let measured = gamma.ln().to_f64() / (n as f64 * n as f64);
        entries.push(TrendEntry {
            n,
            measured,
            error: (measured - target).abs(),
            bits,
        });
    }
    let strictly_decreasing = entries.windows(2).all(|w| w[1].error < w[0].error);
    let final_error = entries.last().map(|e| e.error).unwrap_or(f64::INFINITY);
    let sign_check = if target_hat < 0u32 {
        let last_hat = entries.last().map(|e| e.measured / abs_ln_q).unwrap_or(0.0);
        let stated = target_hat.to_f64();
        let flipped = -stated;
        Some(SignCheck {
            stated_hat: stated,
            flipped_hat: flipped,
            err_stated: (last_hat - stated).abs(),
            err_flipped: (last_hat - flipped).abs(),
            verdict: if (last_hat - stated).abs() < (last_hat - flipped).abs() {
                "matches stated exponent"
            } else {
                "matches sign-flipped exponent"
            },
        })
    } else {
        None
    };
    let trend_ok = if require_monotone {
        strictly_decreasing
    } else {
        strictly_decreasing || final_error <= final_tol / 3.0
    };
    Ok(GammaReport {
        label: label.to_string(),
        q: q.to_string(),
        target,
        target_hat: target_hat.to_f64(),
        entries,
        strictly_decreasing,
        final_error,
        sign_check,
        pass: trend_ok && final_error <= final_tol,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct KsEntry {
    pub n: u32,
    pub ks: f64,
    pub bits: u32,
    pub zeros: usize,
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct KsReport {
    pub label: String,
    pub q: String,
    pub entries: Vec<KsEntry>,
    pub final_vs_first_improved: bool,
    pub final_ks: f64,
    pub final_tol: f64,
    pub pass: bool,
}

/// KS distance of scaled zeros against the limiting radial CDF over a degree
/// ladder; passes when the last distance beats the first and the threshold.
pub fn ks_suite(
    label: &str,
    fam: &FamilySpec,
    q: &Rational,
    ns: &[u32],
    final_tol: f64,
) -> Result<KsReport> {
    let limit = limiting_equilibrium(fam, q)?;
    let cdf = move |t: f64| radial_cdf(&limit.measure, t);
    let base = PrecisionContext::new(q.clone(), 192)?;
    let mut entries = Vec::with_capacity(ns.len());
    for &n in ns {
        let t0 = Instant::now();
        let zs = compute_zeros(fam, n, &base)?;
        let emp = scaled_zeros(&zs);
        entries.push(KsEntry {
            n,
            ks: ks_distance(&emp, &cdf),
            bits: zs.certified_bits(),
            zeros: emp.len(),
            elapsed_ms: t0.elapsed().as_millis(),
        });
    }
    let improved = match (entries.first(), entries.last()) {
        (Some(a), Some(b)) if entries.len() > 1 => b.ks < a.ks,
        _ => false,
    };
    let final_ks = entries.last().map(|e| e.ks).unwrap_or(f64::INFINITY);
    Ok(KsReport {
        label: label.to_string(),
        q: q.to_string(),
        entries,
        final_vs_first_improved: improved,
        final_ks,
        final_tol,
        pass: improved && final_ks <= final_tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Shape {
    Constant,
    DecreasingInR,
    IncreasingInR,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileRegion {
    pub r_lo: f64,
    pub r_hi: f64,
    pub expect: Shape,
    pub max_deviation: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationalCaseReport {
    pub label: String,
    pub support_kind: SupportKind,
    pub w: f64,
    pub grid_points: usize,
    pub violations: usize,
    pub worst_slack: f64,
    pub inequalities_ok: bool,
    pub regions: Vec<ProfileRegion>,
    pub profile_ok: bool,
    pub pass: bool,
}

/// Expected monotonicity of U + Q per region, from the case structure:
/// deep of the support the field term dominates (constant only without a
/// field); unsaturated band pieces are flat at w; the saturated shallow part
/// falls toward r = 1; a gap above a free band rises back off the plateau.
fn expected_regions(sol: &EquilibriumSolution) -> Vec<(f64, f64, Shape)> {
    let ln_q = sol.measure.ln_q();
    let r_of = |t: f64| (t * ln_q).exp();
    let mut out = Vec::new();
    let pieces = sol.measure.hat_pieces();
    let deepest = pieces.last().map(|p| p.hi.to_f64()).unwrap_or(0.0);
    let shallowest = pieces.first().map(|p| p.lo.to_f64()).unwrap_or(0.0);
    // Two extra q-powers below the support.
    out.push((
        r_of(deepest + 2.0),
        r_of(deepest),
        if sol.field.is_zero() {
            Shape::Constant
        } else {
            Shape::DecreasingInR
        },
    ));
    for p in pieces {
        let shape = if p.rel.to_f64() < 1.0 - 1e-12 {
            Shape::Constant
        } else {
            Shape::DecreasingInR
        };
        out.push((r_of(p.hi.to_f64()), r_of(p.lo.to_f64()), shape));
    }
    if shallowest > 1e-12 {
        out.push((r_of(shallowest), 1.0, Shape::IncreasingInR));
    }
    out
}

/// Runs the variational inequalities on a log-uniform grid and checks the
/// qualitative U + Q profile region by region.
pub fn variational_case(
    label: &str,
    sol: &EquilibriumSolution,
    grid_size: usize,
    tol: f64,
) -> VariationalCaseReport {
    let ln_q = sol.measure.ln_q();
    let deepest = sol
        .measure
        .hat_pieces()
        .last()
        .map(|p| p.hi.to_f64())
        .unwrap_or(1.0);
    let t_max = deepest + 2.0;
    let grid: Vec<f64> = (1..=grid_size)
        .map(|i| (t_max * (1.0 - i as f64 / grid_size as f64) * ln_q).exp())
        .collect();
    let report = variational_check(sol, &grid, tol);

    let w = sol.w();
    let mut regions = Vec::new();
    let mut profile_ok = true;
    for (r_lo, r_hi, expect) in expected_regions(sol) {
        // Sample strictly inside the region to dodge the kink cells.
        let t_hi = r_lo.ln() / ln_q;
        let t_lo = r_hi.ln() / ln_q;
        let margin = 0.02 * (t_hi - t_lo);
        let samples = 64;
        let vals: Vec<f64> = (0..=samples)
            .map(|i| {
                let t = t_hi - margin - (t_hi - t_lo - 2.0 * margin) * i as f64 / samples as f64;
                -ln_q * (sol.measure.potential_hat_f64(t) + sol.field.hat_f64(t))
            })
            .collect();
        // vals run in increasing r.
        let mut dev = 0f64;
        let ok = match expect {
            Shape::Constant => {
                for v in &vals {
                    dev = dev.max((v - w).abs());
                }
                dev <= 1e-9
            }
            Shape::DecreasingInR => {
                for pair in vals.windows(2) {
                    dev = dev.max(pair[1] - pair[0]);
                }
                dev <= 1e-12
            }
            Shape::IncreasingInR => {
                for pair in vals.windows(2) {
                    dev = dev.max(pair[0] - pair[1]);
                }
                dev <= 1e-12
            }
        };
        profile_ok &= ok;
        regions.push(ProfileRegion {
            r_lo,
            r_hi,
            expect,
            max_deviation: dev,
            ok,
        });
    }
    VariationalCaseReport {
        label: label.to_string(),
        support_kind: sol.support_kind,
        w,
        grid_points: grid_size,
        violations: report.violations,
        worst_slack: report.worst_slack,
        inequalities_ok: report.ok,
        regions,
        profile_ok,
        pass: report.ok && profile_ok,
    }
}

/// The closed-form equilibria exercised throughout: the no-field measure and
/// the three field cases with known support structures.
pub fn reference_equilibria() -> Result<Vec<(String, EquilibriumSolution)>> {
    let q14 = Rational::from((1u32, 4u32));
    let q34 = Rational::from((3u32, 4u32));
    let mut out = Vec::new();
    out.push(("no-field q=1/4".to_string(), equilibrium_no_field(&q14)?));
    let bessel = |alpha: Rational| -> Result<EquilibriumSolution> {
        let field = FamilySpec::q_bessel_scaled(alpha).external_field()?;
        equilibrium_with_field(&field, &q34)
    };
    out.push(("q-bessel alpha=-2 q=3/4".to_string(), bessel(Rational::from((-2, 1)))?));
    out.push(("q-bessel alpha=-3/4 q=3/4".to_string(), bessel(Rational::from((-3, 4)))?));
    let fam = FamilySpec::little_q_jacobi_scaled(
        Rational::new(),
        Rational::from((-3, 4)),
        true,
    )?;
    out.push((
        "q-jacobi alpha=0 beta=-3/4 q=3/4".to_string(),
        equilibrium_with_field(&fam.external_field()?, &q34)?,
    ));
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationalSuiteReport {
    pub cases: Vec<VariationalCaseReport>,
    pub pass: bool,
}

pub fn variational_suite(grid_size: usize, tol: f64) -> Result<VariationalSuiteReport> {
    let cases: Vec<VariationalCaseReport> = reference_equilibria()?
        .iter()
        .map(|(label, sol)| variational_case(label, sol, grid_size, tol))
        .collect();
    let pass = cases.iter().all(|c| c.pass);
    Ok(VariationalSuiteReport { cases, pass })
}

#[derive(Debug, Clone)]
pub struct SolverCase {
    pub label: String,
    pub q: Rational,
    pub field: Option<FieldSpec>,
    /// Grid window [r_lo, 1].
    pub r_lo: f64,
    pub sizes: (usize, usize),
}

/// The solver cases with closed-form targets.
pub fn solver_reference_cases() -> Result<Vec<SolverCase>> {
    let q14 = Rational::from((1u32, 4u32));
    let q34 = Rational::from((3u32, 4u32));
    let qf = 0.75f64;
    let bessel_field = |alpha: Rational| FamilySpec::q_bessel_scaled(alpha).external_field();
    let jacobi = FamilySpec::little_q_jacobi_scaled(
        Rational::new(),
        Rational::from((-3, 4)),
        true,
    )?;
    Ok(vec![
        SolverCase {
            label: "no-field q=1/4".to_string(),
            q: q14,
            field: None,
            r_lo: 0.25f64.powi(3),
            sizes: (400, 800),
        },
        SolverCase {
            label: "q-bessel alpha=-2 q=3/4".to_string(),
            q: q34.clone(),
            field: Some(bessel_field(Rational::from((-2, 1)))?),
            r_lo: qf.powi(6),
            sizes: (400, 800),
        },
        SolverCase {
            label: "q-bessel alpha=-3/4 q=3/4".to_string(),
            q: q34.clone(),
            field: Some(bessel_field(Rational::from((-3, 4)))?),
            r_lo: qf.powi(3),
            sizes: (400, 800),
        },
        SolverCase {
            label: "q-jacobi alpha=0 beta=-3/4 q=3/4".to_string(),
            q: q34,
            field: Some(jacobi.external_field()?),
            r_lo: qf.powi(3),
            sizes: (400, 800),
        },
    ])
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverCaseReport {
    pub label: String,
    pub coarse_nodes: usize,
    pub fine_nodes: usize,
    pub l1_coarse: f64,
    pub l1_fine: f64,
    /// Fine solution aggregated to coarse cells: comparable to `l1_coarse`.
    pub l1_fine_on_coarse: f64,
    pub w_gap_coarse: f64,
    pub w_gap_fine: f64,
    pub iterations: (usize, usize),
    pub kkt_residuals: (f64, f64),
    pub elapsed_ms: u128,
    /// Refinement must reduce the error unless it already sits at the float
    /// floor (the no-field measure discretizes exactly at any resolution).
    pub refinement_ok: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSuiteReport {
    pub cases: Vec<SolverCaseReport>,
    pub l1_tol: f64,
    pub w_tol: f64,
    pub total_elapsed_ms: u128,
    pub pass: bool,
}

fn run_solver_case(case: &SolverCase, l1_tol: f64, w_tol: f64) -> Result<SolverCaseReport> {
    let t0 = Instant::now();
    let field = case.field.clone().unwrap_or_else(FieldSpec::zero);
    let target = match &case.field {
        Some(f) => equilibrium_with_field(f, &case.q)?,
        None => equilibrium_no_field(&case.q)?,
    };
    let base = SolverConfig::default();
    let mut outs = Vec::new();
    let mut cmps = Vec::new();
    for &m in [case.sizes.0, case.sizes.1].iter() {
        let grid = RadialGrid::log_uniform(&case.q, case.r_lo, 1.0, m)?;
        // A fixed dual residual hides O(residual·m) of misplaced mass, so
        // refinement only helps when the tolerance tightens with the grid.
        let mut cfg = base.clone();
        cfg.kkt_tol = base.kkt_tol * (case.sizes.0 as f64 / m as f64).powi(2);
        let out = solve(&field, &grid, &cfg)?;
        cmps.push(compare_to_closed_form(&out.measure, out.w_estimate, &target, &grid));
        outs.push(out);
    }
    // Cell-mass L¹ on a grid's own cells is a stricter metric the finer the
    // grid, so refinement is judged on the shared coarse partition: the fine
    // masses aggregate onto coarse cells when the sizes nest.
    let (m0, m1) = case.sizes;
    let l1_fine_on_coarse = if m0 > 0 && m1 % m0 == 0 && m1 > m0 {
        let coarse = RadialGrid::log_uniform(&case.q, case.r_lo, 1.0, m0)?;
        let agg = DiscreteMeasure {
            masses: outs[1]
                .measure
                .masses
                .chunks(m1 / m0)
                .map(|c| c.iter().sum())
                .collect(),
        };
        compare_to_closed_form(&agg, outs[1].w_estimate, &target, &coarse).l1_error
    } else {
        cmps[1].l1_error
    };
    let refinement_ok = l1_fine_on_coarse < cmps[0].l1_error || l1_fine_on_coarse <= 1e-10;
    let pass = cmps[0].l1_error <= l1_tol && cmps[0].w_gap <= w_tol && refinement_ok;
    Ok(SolverCaseReport {
        label: case.label.clone(),
        coarse_nodes: m0,
        fine_nodes: m1,
        l1_coarse: cmps[0].l1_error,
        l1_fine: cmps[1].l1_error,
        l1_fine_on_coarse,
        w_gap_coarse: cmps[0].w_gap,
        w_gap_fine: cmps[1].w_gap,
        iterations: (outs[0].iterations, outs[1].iterations),
        kkt_residuals: (outs[0].kkt_residual, outs[1].kkt_residual),
        elapsed_ms: t0.elapsed().as_millis(),
        refinement_ok,
        pass,
    })
}

pub fn solver_suite(cases: &[SolverCase], l1_tol: f64, w_tol: f64) -> Result<SolverSuiteReport> {
    let t0 = Instant::now();
    #[cfg(feature = "parallel")]
    let reports: Result<Vec<SolverCaseReport>> = cases
        .par_iter()
        .map(|c| run_solver_case(c, l1_tol, w_tol))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let reports: Result<Vec<SolverCaseReport>> = cases
        .iter()
        .map(|c| run_solver_case(c, l1_tol, w_tol))
        .collect();
    let cases = reports?;
    let pass = cases.iter().all(|c| c.pass);
    Ok(SolverSuiteReport {
        cases,
        l1_tol,
        w_tol,
        total_elapsed_ms: t0.elapsed().as_millis(),
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PochLimitEntry {
    pub c: String,
    pub measured: f64,
    pub limit: f64,
    pub error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PochLimitReport {
    pub q: String,
    pub n: u32,
    pub tol: f64,
    pub entries: Vec<PochLimitEntry>,
    pub pass: bool,
}

/// (1/n²)·log(−q^{nc}; q)_∞ against its limit: 0 for c ≥ 0, −c²/2·log q for
/// c < 0 (the shifted-factor tail that controls scaled q-Bessel norms).
pub fn poch_limit_suite(
    q: &Rational,
    n: u32,
    cs: &[Rational],
    tol: f64,
) -> Result<PochLimitReport> {
    let ctx = PrecisionContext::new(q.clone(), 768)?;
    let ln_q = ctx.ln_q_f64();
    let mut entries = Vec::with_capacity(cs.len());
    for c in cs {
        let exponent = Rational::from(c * &Rational::from(n));
        let z = -ctx.q_pow_rational(&exponent);
        let poch = poch_infinite(&z, &ctx)?;
        let measured = poch.ln().to_f64() / (n as f64 * n as f64);
        let cf = c.to_f64();
        let limit = if cf >= 0.0 { 0.0 } else { -cf * cf / 2.0 * ln_q };
        let error = (measured - limit).abs();
        entries.push(PochLimitEntry {
            c: c.to_string(),
            measured,
            limit,
            error,
            pass: error <= tol,
        });
    }
    let pass = entries.iter().all(|e| e.pass);
    Ok(PochLimitReport {
        q: q.to_string(),
        n,
        tol,
        entries,
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NormRatioReport {
    pub label: String,
    pub q: String,
    pub eps: f64,
    pub with_field: bool,
    pub n_values: Vec<u32>,
    pub ratios: Vec<f64>,
    pub deviations: Vec<f64>,
    pub decreasing: bool,
    pub final_tol: f64,
    pub pass: bool,
    pub elapsed_ms: u128,
}

/// Windowed weighted-vs-plain norm ratios raised to 1/n²: the deviation from
/// 1 must shrink along the ladder.
pub fn norm_ratio_suite(
    label: &str,
    fam: &FamilySpec,
    field: Option<&FieldSpec>,
    q: &Rational,
    eps: f64,
    ns: &[u32],
    final_tol: f64,
) -> Result<NormRatioReport> {
    let t0 = Instant::now();
    let ctx = PrecisionContext::new(q.clone(), 192)?;
    let ratios = norm_ratio_trend(fam, field, eps, ns, &ctx)?;
    let deviations: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    let decreasing = deviations.windows(2).all(|w| w[1] < w[0]);
    let final_dev = deviations.last().copied().unwrap_or(f64::INFINITY);
    Ok(NormRatioReport {
        label: label.to_string(),
        q: q.to_string(),
        eps,
        with_field: field.is_some(),
        n_values: ns.to_vec(),
        ratios,
        deviations,
        decreasing,
        final_tol,
        pass: decreasing && final_dev <= final_tol,
        elapsed_ms: t0.elapsed().as_millis(),
    })
}
