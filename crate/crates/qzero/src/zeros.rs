//! Zero computation by lattice-interlacing bracketing, scaled-zero empirical
//! measures, the complex zero cloud, and an independent Jacobi-matrix oracle.
//!
//! Each lattice gap (q^{k+1}, q^k] holds at most one zero of p_n, so scanning
//! signs down the lattice is a complete root-isolation certificate.

use rug::Float;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::families::FamilySpec;
use crate::qnum::{precision_for, PrecisionContext, DEFAULT_MARGIN};

/// All n zeros of p_n, ascending, each certified by a sign change.
#[derive(Debug, Clone)]
pub struct ZeroSet {
    n: u32,
    zeros: Vec<Float>,
    certified_bits: u32,
}

impl ZeroSet {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn zeros(&self) -> &[Float] {
        &self.zeros
    }

    pub fn certified_bits(&self) -> u32 {
        self.certified_bits
    }

    /// Number of zeros ≥ a; bounded by ⌈log a/log q⌉ for a ∈ (0,1). Compared
    /// at full precision: deep zeros hug lattice points from below by less
    /// than an f64 ulp.
    pub fn count_at_least(&self, a: f64) -> usize {
        self.zeros.iter().filter(|z| **z >= a).count()
    }
}

/// Unit-mass atoms at the listed support points, each carrying 1/n.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure {
    support: Vec<Float>,
}

impl EmpiricalMeasure {
    pub fn new(support: Vec<Float>) -> Self {
        Self { support }
    }

    /// Ascending support points.
    pub fn support(&self) -> &[Float] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn mass_per_point(&self) -> f64 {
        1.0 / self.support.len() as f64
    }
}

/// Sign-change brackets in scan order (descending x), plus scan diagnostics.
#[derive(Debug, Clone)]
pub struct BracketScan {
    /// (lo, hi) = (q^{k+1}, q^k) lattice gaps, one sign change each.
    pub brackets: Vec<(Float, Float)>,
    /// Precision the successful scan ran at (≥ the input context's bits).
    pub bits_used: u32,
    /// Scan attempts consumed (> 1 means escalation was triggered).
    pub attempts: u32,
    /// Deepest lattice exponent visited.
    pub deepest_k: i64,
}

/// Initial scan depth: the smallest zero empirically sits near q^{cn} with
/// c ≤ 4 for every supported field regime; the slack absorbs constants. The
/// cap doubles on escalation, so this is a starting point, not a bound claim.
fn initial_scan_cap(n: u32, ctx: &PrecisionContext) -> i64 {
    let per_n = (-ctx.ln_q_f64()).max(1.0);
    32.max(((4 * n + 16) as f64 * per_n).ceil() as i64)
}

const MAX_SCAN_ATTEMPTS: u32 = 4;

fn sign_negative(f: &Float) -> bool {
    *f < 0u32
}

fn scan_once(
    fam: &FamilySpec,
    n: u32,
    cap: i64,
    ctx: &PrecisionContext,
) -> Result<(Vec<(Float, Float)>, i64)> {
    let mut brackets = Vec::with_capacity(n as usize);
    let mut prev = fam.eval(n, &ctx.float(1u32), ctx)?;
    let mut k = 0i64;
    while (brackets.len() as u32) < n && k < cap {
        let x = ctx.q_pow_int(k + 1);
        let cur = fam.eval(n, &x, ctx)?;
        if sign_negative(&cur) != sign_negative(&prev) {
            brackets.push((ctx.float(&x), ctx.q_pow_int(k)));
        }
        prev = cur;
        k += 1;
    }
    Ok((brackets, k))
}

/// Scans p_n down the lattice until n sign changes are found, escalating
/// precision and depth together when the count comes up short.
pub fn bracket_zeros(fam: &FamilySpec, n: u32, ctx: &PrecisionContext) -> Result<BracketScan> {
    if n == 0 {
        return Ok(BracketScan {
            brackets: Vec::new(),
            bits_used: ctx.bits(),
            attempts: 1,
            deepest_k: 0,
        });
    }
    let mut bits = ctx.bits().max(precision_for(n, ctx, DEFAULT_MARGIN));
    let mut cap = initial_scan_cap(n, ctx);
    let mut found = 0usize;
    for attempt in 1..=MAX_SCAN_ATTEMPTS {
        let cx = ctx.with_bits(bits)?;
        let (brackets, deepest_k) = scan_once(fam, n, cap, &cx)?;
        found = brackets.len();
        if found == n as usize {
            return Ok(BracketScan {
                brackets,
                bits_used: bits,
                attempts: attempt,
                deepest_k,
            });
        }
        bits *= 2;
        cap *= 2;
    }
    Err(Error::MissingZeros {
        found,
        expected: n as usize,
        attempts: MAX_SCAN_ATTEMPTS,
    })
}

/// Default refinement tolerance 2^{−bits/4}: far above roundoff at working
/// precision, far below anything the trend tests compare.
pub fn default_rel_tol(ctx: &PrecisionContext) -> Float {
    ctx.float(1u32) >> (ctx.bits() / 4)
}

/// Bisection to isolate, then bracket-safeguarded secant to polish; the
/// returned z keeps a sign change inside (z−δ, z+δ), δ = rel_tol·z.
pub fn refine_zero(
    fam: &FamilySpec,
    n: u32,
    bracket: &(Float, Float),
    rel_tol: &Float,
    ctx: &PrecisionContext,
) -> Result<Float> {
    let (mut a, mut b) = (ctx.float(&bracket.0), ctx.float(&bracket.1));
    let mut fa = fam.eval(n, &a, ctx)?;
    let fb = fam.eval(n, &b, ctx)?;
    if fa.is_zero() {
        return Ok(a);
    }
    if fb.is_zero() {
        return Ok(b);
    }
    if sign_negative(&fa) == sign_negative(&fb) {
        return Err(Error::EmptyBracket {
            lo: a.to_f64(),
            hi: b.to_f64(),
        });
    }
    // tol is relative to the bracket floor; a > 0 always (lattice gap).
    let tol = ctx.float(rel_tol) * &a;
    let (mut x0, mut f0) = (ctx.float(&a), ctx.float(&fa));
    let (mut x1, mut f1) = (ctx.float(&b), ctx.float(&fb));
    let max_steps = 5 * (ctx.bits() as usize / 4 + 64);
    let mut since_halve = 0usize;
    let mut last_width = ctx.float(&b) - &a;
    for _ in 0..max_steps {
        let width = ctx.float(&b) - &a;
        if width <= tol {
            break;
        }
        // Force a bisection step whenever secant stops making progress.
        let halved = ctx.float(2u32) * &width <= last_width;
        if halved {
            since_halve = 0;
            last_width = width;
        } else {
            since_halve += 1;
        }
        let denom = ctx.float(&f1) - &f0;
        let mut c = if denom.is_zero() || since_halve >= 4 {
            since_halve = 0;
            last_width = ctx.float(&b) - &a;
            (ctx.float(&a) + &b) >> 1
        } else {
            ctx.float(&x1) - ctx.float(&f1) * (ctx.float(&x1) - &x0) / denom
        };
        if !(c > a && c < b) {
            c = (ctx.float(&a) + &b) >> 1;
        }
        let fc = fam.eval(n, &c, ctx)?;
        if fc.is_zero() {
            return Ok(c);
        }
        if sign_negative(&fc) == sign_negative(&fa) {
            a = ctx.float(&c);
            fa = ctx.float(&fc);
        } else {
            b = ctx.float(&c);
        }
        x0 = x1;
        f0 = f1;
        x1 = c;
        f1 = fc;
    }
    if ctx.float(&b) - &a > tol {
        return Err(Error::Internal(format!(
            "zero refinement stalled in ({}, {})",
            a.to_f64(),
            b.to_f64()
        )));
    }
    Ok((a + b) >> 1)
}

/// Brackets, refines (in parallel across brackets when enabled), and packages
/// all n zeros ascending.
pub fn compute_zeros(fam: &FamilySpec, n: u32, ctx: &PrecisionContext) -> Result<ZeroSet> {
    let scan = bracket_zeros(fam, n, ctx)?;
    let cx = ctx.with_bits(scan.bits_used)?;
    let rel_tol = default_rel_tol(&cx);

    #[cfg(feature = "parallel")]
    let refined: Result<Vec<Float>> = scan
        .brackets
        .par_iter()
        .map(|br| refine_zero(fam, n, br, &rel_tol, &cx))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let refined: Result<Vec<Float>> = scan
        .brackets
        .iter()
        .map(|br| refine_zero(fam, n, br, &rel_tol, &cx))
        .collect();

    let mut zeros = refined?;
    zeros.reverse(); // scan order is descending x
    for pair in zeros.windows(2) {
        if pair[0] >= pair[1] {
            return Err(Error::Internal("refined zeros out of order".into()));
        }
    }
    if let Some(last) = zeros.last() {
        if *last > 1u32 {
            return Err(Error::Internal("zero above 1".into()));
        }
    }
    Ok(ZeroSet {
        n,
        zeros,
        certified_bits: scan.bits_used,
    })
}

/// ν_n: the empirical measure of the scaled zeros x_{j,n}^{1/n}.
pub fn scaled_zeros(zs: &ZeroSet) -> EmpiricalMeasure {
    let n = zs.n.max(1);
    let support = zs
        .zeros
        .iter()
        .map(|z| (z.clone().ln() / n).exp())
        .collect();
    EmpiricalMeasure { support }
}

/// The n-th roots of unity with exact conjugate symmetry: entry n−k is the
/// bitwise mirror of entry k, and the half-turn entry (even n) is exactly −1.
pub fn unit_roots(n: u32) -> Vec<(f64, f64)> {
    let n = n.max(1) as usize;
    let mut table = vec![(0.0f64, 0.0f64); n];
    table[0] = (1.0, 0.0);
    if n % 2 == 0 {
        table[n / 2] = (-1.0, 0.0);
    }
    for k in 1..=(n - 1) / 2 {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        table[k] = (theta.cos(), theta.sin());
        table[n - k] = (table[k].0, -table[k].1);
    }
    table
}

/// The n² points {x_{j,n}^{1/n}·ω_n^k}: the zeros of p_n(xⁿ). Emitted j-major
/// (n consecutive points per scaled zero, k ascending); the shared root-of-
/// unity table makes mirror symmetry exact and rotation an index shift.
pub fn zero_cloud(zs: &ZeroSet) -> Vec<(f64, f64)> {
    let scaled = scaled_zeros(zs);
    let roots = unit_roots(zs.n);
    let mut out = Vec::with_capacity((zs.n as usize).pow(2));
    for s in scaled.support() {
        let r = s.to_f64();
        for (re, im) in &roots {
            out.push((r * re, r * im));
        }
    }
    out
}

/// Kolmogorov–Smirnov distance of the empirical measure against a CDF:
/// sup_i max(|F(x_i) − i/n|, |F(x_i) − (i−1)/n|) over ascending support.
pub fn ks_distance(emp: &EmpiricalMeasure, cdf: impl Fn(f64) -> f64) -> f64 {
    let n = emp.len() as f64;
    let mut worst = 0f64;
    for (i, x) in emp.support().iter().enumerate() {
        let f = cdf(x.to_f64());
        let above = (f - (i as f64 + 1.0) / n).abs();
        let below = (f - i as f64 / n).abs();
        worst = worst.max(above).max(below);
    }
    worst
}

const ORACLE_DEGREE_CAP: u32 = 16;
const ORACLE_MOMENT_CAP: u32 = 100_000;

/// Moments m_j = Σ_k W_k q^{kj}, j < 2n, at the given context's precision.
fn orth_moments(fam: &FamilySpec, n: u32, ctx: &PrecisionContext) -> Result<Vec<Float>> {
    let count = (2 * n) as usize;
    let mut moments = vec![ctx.float(0u32); count];
    // Scaled parameters can push the weight's peak out to k ≈ log_q(1/a).
    let a0 = fam.a_value(n, ctx).to_f64();
    let k_floor = if a0 > 1.0 {
        (a0.ln() / -ctx.ln_q_f64()).ceil() as u32 + 20
    } else {
        20
    };
    let floor_bits = ctx.float(1u32) >> (2 * ctx.bits());
    let mut k = 0u32;
    loop {
        let w = fam.orth_weight(k, n, ctx)?;
        let qk = ctx.q_pow_int(k as i64);
        let mut pow = ctx.float(1u32);
        for m in moments.iter_mut() {
            *m += ctx.float(&w) * &pow;
            pow *= &qk;
        }
        let negligible = !moments[0].is_zero()
            && w.clone().abs() < ctx.float(&floor_bits) * moments[0].clone().abs();
        k += 1;
        if k > k_floor && negligible {
            break;
        }
        if k >= ORACLE_MOMENT_CAP {
            return Err(Error::TailNotConvergent {
                what: "orthogonality moments",
                cap: ORACLE_MOMENT_CAP as usize,
            });
        }
    }
    Ok(moments)
}

/// Chebyshev moment-to-recurrence: monic three-term coefficients (α_j, β_j)
/// from the first 2n moments. β_j ≤ 0 signals a numerically singular moment
/// map at this precision.
fn chebyshev_recurrence(moments: &[Float], n: u32, ctx: &PrecisionContext) -> Option<(Vec<Float>, Vec<Float>)> {
    let n = n as usize;
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    alpha.push(ctx.float(&moments[1]) / &moments[0]);
    beta.push(ctx.float(&moments[0]));
    let mut prev: Vec<Float> = Vec::new();
    let mut cur: Vec<Float> = moments.iter().map(|m| ctx.float(m)).collect();
    for j in 1..n {
        // σ_{j,l} = σ_{j−1,l+1} − α_{j−1} σ_{j−1,l} − β_{j−1} σ_{j−2,l}
        let hi = 2 * n - j;
        let mut next: Vec<Float> = Vec::with_capacity(hi - j);
        for l in j..hi {
            let mut v = ctx.float(&cur[l + 1 - (j - 1)]) - ctx.float(&alpha[j - 1]) * &cur[l - (j - 1)];
            if j >= 2 {
                v -= ctx.float(&beta[j - 1]) * &prev[l - (j - 2)];
            }
            next.push(v);
        }
        let sjj = &next[0];
        let sj1 = &next[1];
        let prev_jj = &cur[0];
        if sjj.is_zero() || prev_jj.is_zero() {
            return None;
        }
        let b = ctx.float(sjj) / prev_jj;
        if b <= 0u32 {
            return None;
        }
        let a = ctx.float(sj1) / sjj - ctx.float(&cur[1]) / prev_jj;
        alpha.push(a);
        beta.push(b);
        prev = cur;
        cur = next;
    }
    Some((alpha, beta))
}

/// Sturm count for a symmetric tridiagonal matrix: number of eigenvalues < x,
/// via the LDLᵀ pivot signs.
fn eigen_count_below(alpha: &[Float], beta: &[Float], x: &Float, ctx: &PrecisionContext) -> usize {
    let mut count = 0usize;
    let mut d = ctx.float(&alpha[0]) - x;
    if sign_negative(&d) {
        count += 1;
    }
    for i in 1..alpha.len() {
        if d.is_zero() {
            // Shift off the exact-singularity measure-zero case.
            d = ctx.float(1u32) >> (2 * ctx.bits());
        }
        d = ctx.float(&alpha[i]) - x - ctx.float(&beta[i]) / d;
        if sign_negative(&d) {
            count += 1;
        }
    }
    count
}

/// Independent zero oracle: orthogonality moments at 4× precision feed the
/// Chebyshev algorithm; eigenvalues of the resulting Jacobi matrix come from
/// Sturm bisection. Capped at small n — the moment map is exponentially
/// ill-conditioned, which the precision elevation only defers.
pub fn jacobi_oracle(fam: &FamilySpec, n: u32, ctx: &PrecisionContext) -> Result<Vec<Float>> {
    if n > ORACLE_DEGREE_CAP {
        return Err(Error::Constraint(format!(
            "oracle degree cap {ORACLE_DEGREE_CAP} (requested {n})"
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut bits = 4 * ctx.bits().max(precision_for(n, ctx, DEFAULT_MARGIN));
    for attempt in 0..2 {
        let cx = ctx.with_bits(bits)?;
        let moments = orth_moments(fam, n, &cx)?;
        let Some((alpha, beta)) = chebyshev_recurrence(&moments, n, &cx) else {
            if attempt == 0 {
                bits *= 2;
                continue;
            }
            return Err(Error::Internal(format!(
                "moment matrix singular for degree {n} at {bits} bits"
            )));
        };
        let mut eigs = Vec::with_capacity(n as usize);
        for i in 0..n as usize {
            let mut lo = cx.float(0u32);
            let mut hi = cx.float(1u32) + (cx.float(1u32) >> 10);
            let max_iter = 6 * bits as usize;
            let mut iter = 0usize;
            loop {
                let mid = (cx.float(&lo) + &hi) >> 1;
                if eigen_count_below(&alpha, &beta, &mid, &cx) <= i {
                    lo = mid;
                } else {
                    hi = mid;
                }
                iter += 1;
                let width = cx.float(&hi) - &lo;
                let fine = !lo.is_zero() && width <= cx.float(&lo) >> (bits / 2);
                if fine || iter >= max_iter {
                    break;
                }
            }
            eigs.push((lo + hi) >> 1);
        }
        return Ok(eigs);
    }
    unreachable!("loop returns on success or second failure")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Rational;

    fn ctx(num: u32, den: u32, bits: u32) -> PrecisionContext {
        PrecisionContext::new(Rational::from((num, den)), bits).unwrap()
    }

    fn rat(n: i32, d: u32) -> Rational {
        Rational::from((n, d))
    }

    fn laguerre(c: &PrecisionContext) -> FamilySpec {
        FamilySpec::little_q_laguerre(rat(1, 2), c.q()).unwrap()
    }

    #[test]
    fn bracket_degree_one_is_top_gap() {
        let c = ctx(1, 2, 256);
        let scan = bracket_zeros(&laguerre(&c), 1, &c).unwrap();
        assert_eq!(scan.brackets.len(), 1);
        assert_eq!(scan.attempts, 1);
        let (lo, hi) = &scan.brackets[0];
        // Zero at 1 − aq = 3/4 lies in the gap (q, 1].
        assert_eq!(lo.to_f64(), 0.5);
        assert_eq!(hi.to_f64(), 1.0);
    }

    #[test]
    fn bracket_degree_zero_is_empty() {
        let c = ctx(1, 2, 256);
        let scan = bracket_zeros(&laguerre(&c), 0, &c).unwrap();
        assert!(scan.brackets.is_empty());
    }

    #[test]
    fn brackets_are_disjoint_lattice_gaps() {
        let c = ctx(1, 2, 512);
        let scan = bracket_zeros(&laguerre(&c), 8, &c).unwrap();
        assert_eq!(scan.brackets.len(), 8);
        let cx = c.with_bits(scan.bits_used).unwrap();
        for (lo, hi) in &scan.brackets {
            // Each bracket is one exact lattice gap (q^{k+1}, q^k).
            let k = (hi.clone().ln() / cx.ln_q()).to_f64().round() as i64;
            assert_eq!(hi, &cx.q_pow_int(k));
            assert_eq!(lo, &cx.q_pow_int(k + 1));
        }
        for pair in scan.brackets.windows(2) {
            assert!(pair[1].1 <= pair[0].0, "gaps overlap");
        }
    }

    #[test]
    fn refine_degree_one_hits_closed_form() {
        let c = ctx(1, 2, 512);
        let fam = laguerre(&c);
        let scan = bracket_zeros(&fam, 1, &c).unwrap();
        let cx = c.with_bits(scan.bits_used).unwrap();
        let tol = default_rel_tol(&cx);
        let z = refine_zero(&fam, 1, &scan.brackets[0], &tol, &cx).unwrap();
        let err = (z.clone() - rat(3, 4)).abs();
        assert!(err <= cx.float(&tol) * &z, "err = {}", err.to_f64());
        // Idempotence: refining a converged bracket returns the same point.
        let tight = (
            cx.float(&z) - cx.float(&tol) * &z,
            cx.float(&z) + cx.float(&tol) * &z,
        );
        let z2 = refine_zero(&fam, 1, &tight, &tol, &cx).unwrap();
        let drift = (z2 - &z).abs();
        assert!(drift <= cx.float(&tol) * &z);
    }

    #[test]
    fn refine_rejects_signless_bracket() {
        let c = ctx(1, 2, 512);
        let fam = laguerre(&c);
        let bad = (c.float(rat(1, 10)), c.float(rat(2, 10)));
        let tol = default_rel_tol(&c);
        assert!(matches!(
            refine_zero(&fam, 1, &bad, &tol, &c),
            Err(Error::EmptyBracket { .. })
        ));
    }

    #[test]
    fn zero_set_invariants_degree_twelve() {
        let c = ctx(1, 2, 1024);
        let fam = laguerre(&c);
        let zs = compute_zeros(&fam, 12, &c).unwrap();
        assert_eq!(zs.zeros().len(), 12);
        let cx = c.with_bits(zs.certified_bits()).unwrap();
        for pair in zs.zeros().windows(2) {
            assert!(pair[0] < pair[1]);
        }
        for z in zs.zeros() {
            assert!(*z > 0u32 && *z <= 1u32);
            // Certificate: sign change across (z−δ, z+δ), δ = rel_tol·z.
            let tol = default_rel_tol(&cx);
            let lo = cx.float(z) - cx.float(&tol) * z;
            let hi = cx.float(z) + cx.float(&tol) * z;
            let flo = fam.eval(12, &lo, &cx).unwrap();
            let fhi = fam.eval(12, &hi, &cx).unwrap();
            assert_ne!(sign_negative(&flo), sign_negative(&fhi));
        }
        // At most one zero per lattice gap (q^{k+1}, q^k].
        let mut gaps = std::collections::HashSet::new();
        for z in zs.zeros() {
            let k = (z.clone().ln() / cx.ln_q()).to_f64().floor() as i64;
            // z ∈ (q^{k+1}, q^k]: floor of log_q z is k.
            assert!(gaps.insert(k), "two zeros share gap {k}");
        }
        // Zero-count bound: #{z ≥ a} ≤ ⌈log a/log q⌉.
        for a in [0.9f64, 0.5, 0.3, 0.1, 0.01] {
            let bound = (a.ln() / c.ln_q_f64()).ceil() as usize;
            assert!(zs.count_at_least(a) <= bound, "a = {a}");
        }
    }

    #[test]
    fn unscaled_zeros_degenerate_to_origin() {
        // Mass of the unscaled empirical measure in [a, 1] is ≤ ⌈log_q a⌉/n.
        let c = ctx(1, 2, 1024);
        let zs = compute_zeros(&laguerre(&c), 24, &c).unwrap();
        let a = 0.1f64;
        let bound = (a.ln() / c.ln_q_f64()).ceil();
        let frac = zs.count_at_least(a) as f64 / 24.0;
        assert!(frac <= bound / 24.0);
        assert!(frac < 0.2);
    }

    #[test]
    fn scaled_zeros_order_and_powers() {
        let c = ctx(1, 2, 256);
        let zs = ZeroSet {
            n: 2,
            zeros: vec![c.q_pow_int(6), c.q_pow_int(3)],
            certified_bits: 256,
        };
        let emp = scaled_zeros(&zs);
        assert_eq!(emp.len(), 2);
        assert!(emp.support()[0] < emp.support()[1]);
        let want0 = c.q_pow_frac(6, 2);
        let want1 = c.q_pow_frac(3, 2);
        let e0 = (emp.support()[0].clone() - want0).abs().to_f64();
        let e1 = (emp.support()[1].clone() - want1).abs().to_f64();
        assert!(e0 < 1e-70 && e1 < 1e-70);
        assert!((emp.mass_per_point() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cloud_structure() {
        let c = ctx(1, 2, 768);
        let fam = laguerre(&c);
        // n = 1: single real point.
        let zs1 = compute_zeros(&fam, 1, &c).unwrap();
        let cloud1 = zero_cloud(&zs1);
        assert_eq!(cloud1.len(), 1);
        assert_eq!(cloud1[0].1, 0.0);
        // n = 6: 36 points, exact mirror closure, near-zero sum, n-fold angles.
        let zs = compute_zeros(&fam, 6, &c).unwrap();
        let cloud = zero_cloud(&zs);
        assert_eq!(cloud.len(), 36);
        // +0.0 and −0.0 coincide numerically; normalize before bit-comparing.
        let key = |re: f64, im: f64| (re.to_bits(), (im + 0.0).to_bits());
        let set: std::collections::HashSet<(u64, u64)> =
            cloud.iter().map(|(re, im)| key(*re, *im)).collect();
        for (re, im) in &cloud {
            assert!(set.contains(&key(*re, -im)), "mirror missing");
        }
        let (sum_re, sum_im) = cloud
            .iter()
            .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
        assert!(sum_re.abs() < 1e-12 && sum_im.abs() < 1e-12);
        for row in cloud.chunks(6) {
            for (k, (re, im)) in row.iter().enumerate() {
                let theta = im.atan2(*re);
                let want = 2.0 * std::f64::consts::PI * k as f64 / 6.0;
                let delta = (theta - want).rem_euclid(2.0 * std::f64::consts::PI);
                let delta = delta.min(2.0 * std::f64::consts::PI - delta);
                assert!(delta < 1e-12, "k={k}: delta={delta}");
            }
        }
    }

    #[test]
    fn ks_distance_reference_values() {
        let c = ctx(1, 2, 128);
        // Single point at the median of U[0,1]: distance exactly 1/2.
        let single = EmpiricalMeasure::new(vec![c.float(rat(1, 2))]);
        assert_eq!(ks_distance(&single, |x| x), 0.5);
        // Exact quantiles x_i = (i − 1/2)/n: distance = 1/(2n).
        let n = 10u32;
        let quantiles = EmpiricalMeasure::new(
            (1..=n)
                .map(|i| c.float(Rational::from((2 * i - 1, 2 * n))))
                .collect(),
        );
        let d = ks_distance(&quantiles, |x| x);
        assert!((d - 1.0 / (2.0 * n as f64)).abs() < 1e-14);
    }

    #[test]
    fn oracle_degree_one_and_cap() {
        let c = ctx(1, 2, 256);
        let fam = laguerre(&c);
        let eigs = jacobi_oracle(&fam, 1, &c).unwrap();
        assert_eq!(eigs.len(), 1);
        let err = (eigs[0].clone() - rat(3, 4)).abs().to_f64();
        assert!(err < 1e-50, "err = {err}");
        assert!(matches!(
            jacobi_oracle(&fam, 17, &c),
            Err(Error::Constraint(_))
        ));
    }

    #[test]
    fn oracle_interlaces_and_matches_refined_zeros() {
        let c = ctx(1, 2, 640);
        let fam = laguerre(&c);
        let e7 = jacobi_oracle(&fam, 7, &c).unwrap();
        let e8 = jacobi_oracle(&fam, 8, &c).unwrap();
        for e in e8.iter().chain(e7.iter()) {
            assert!(*e > 0u32 && *e < 1u32);
        }
        // Cauchy interlacing of consecutive Jacobi matrices.
        for i in 0..7 {
            assert!(e8[i] < e7[i] && e7[i] < e8[i + 1], "interlace at {i}");
        }
        // Cross-oracle agreement with bracket-and-refine.
        let zs = compute_zeros(&fam, 8, &c).unwrap();
        for (z, e) in zs.zeros().iter().zip(e8.iter()) {
            let rel = ((z.clone() - e) / z).abs().to_f64();
            assert!(rel < 1e-20, "rel = {rel}");
        }
    }

    #[test]
    fn oracle_agreement_all_families() {
        let c = ctx(1, 2, 512);
        let fams = [
            laguerre(&c),
            FamilySpec::q_bessel(rat(1, 1)).unwrap(),
            FamilySpec::little_q_jacobi(rat(1, 2), rat(1, 3), &rat(1, 2)).unwrap(),
        ];
        for fam in &fams {
            let zs = compute_zeros(fam, 6, &c).unwrap();
            let eigs = jacobi_oracle(fam, 6, &c).unwrap();
            for (z, e) in zs.zeros().iter().zip(eigs.iter()) {
                let rel = ((z.clone() - e) / z).abs().to_f64();
                assert!(rel < 1e-20, "{:?}: rel = {rel}", fam.kind());
            }
        }
    }

    #[test]
    fn scaled_family_zero_capture() {
        // Scaled q-Bessel parameters push zeros deep down the lattice; the
        // scan-and-escalate loop must still capture all of them.
        let c = ctx(3, 4, 256);
        let fam = FamilySpec::q_bessel_scaled(rat(-3, 4));
        let zs = compute_zeros(&fam, 10, &c).unwrap();
        assert_eq!(zs.zeros().len(), 10);
        let emp = scaled_zeros(&zs);
        // Middle regime: scaled zeros accumulate within (0, 1].
        for s in emp.support() {
            let v = s.to_f64();
            assert!(v > 0.0 && v <= 1.0);
        }
    }
}
