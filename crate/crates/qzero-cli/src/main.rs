//! `qzero`: certified zero sets, figure data, and verification suites for
//! orthogonal polynomials on the q-lattice. Exit codes: 0 success, 1
//! verification failure or internal error, 2 usage/domain error.

mod emit;
mod family;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rug::Rational;

use qzero::families::FamilySpec;
use qzero::potential::{equilibrium_no_field, EquilibriumSolution};
use qzero::qnum::PrecisionContext;
use qzero::verify::{
    gamma_suite, ks_suite, limiting_equilibrium, norm_ratio_suite, poch_limit_suite,
    solver_reference_cases, solver_suite, stated_gamma_limit_hat, variational_suite,
};
use qzero::zeros::{compute_zeros, scaled_zeros, zero_cloud};
use qzero::Error;

use emit::{f64_str, float_str, write_csv, write_json, Meta};
use family::{parse_rational, FamilyArgs};

#[derive(Parser)]
#[command(name = "qzero", version, about = "q-lattice orthogonal polynomial laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Certified zeros of p_n with their n-th-root scalings.
    Zeros(ZerosArgs),
    /// The n² complex zeros of p_n(xⁿ): scaled zeros times the roots of unity.
    Cloud(CloudArgs),
    /// Radial density of the limiting measure against the lattice constraint.
    Density(MeasureArgs),
    /// Logarithmic potential U and U + Q with the equilibrium constant w.
    PotentialProfile(MeasureArgs),
    /// Verification suites; JSON report, exit 0 iff every check passes.
    Verify(VerifyArgs),
}

#[derive(clap::Args)]
struct ZerosArgs {
    #[command(flatten)]
    fam: FamilyArgs,
    /// Lattice base, an exact rational in (0, 1).
    #[arg(long, value_parser = parse_rational)]
    q: Option<Rational>,
    /// Polynomial degree.
    #[arg(long)]
    n: u32,
    /// Working-precision floor in bits (default: QZERO_DEFAULT_BITS or 192).
    #[arg(long)]
    bits: Option<u32>,
    /// Output file (stdout when omitted); metadata goes to <out>.meta.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct CloudArgs {
    #[command(flatten)]
    fam: FamilyArgs,
    #[arg(long, value_parser = parse_rational)]
    q: Rational,
    #[arg(long)]
    n: u32,
    #[arg(long)]
    bits: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct MeasureArgs {
    #[command(flatten)]
    fam: FamilyArgs,
    #[arg(long, value_parser = parse_rational)]
    q: Rational,
    /// Log-uniform sample count over [q^depth, 1].
    #[arg(long, default_value_t = 400)]
    points: usize,
    /// Window depth in powers of q (default: support depth + 2).
    #[arg(long)]
    depth: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Gamma,
    Ks,
    Variational,
    Solver,
    Lemmas,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LemmaArg {
    /// Growth limit of the infinite product (−q^{nc}; q)_∞.
    PochLimit,
    /// Weighted-vs-plain norm ratios, fixed parameters.
    NormRatio,
    /// Weighted-vs-plain norm ratios under the external field.
    NormRatioField,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: SuiteArg,
    #[command(flatten)]
    fam: FamilyArgs,
    #[arg(long, value_parser = parse_rational)]
    q: Option<Rational>,
    /// Degree ladder, e.g. "8,16,32".
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<u32>>,
    /// Single degree (poch-limit lemma).
    #[arg(long)]
    n: Option<u32>,
    /// Exponent values for the poch-limit lemma, e.g. "1,0,-1,-2".
    #[arg(long, value_parser = parse_rational, value_delimiter = ',', allow_hyphen_values = true)]
    c: Option<Vec<Rational>>,
    /// Restrict the lemmas suite to one check.
    #[arg(long, value_enum)]
    lemma: Option<LemmaArg>,
    /// Final-entry tolerance (suite-specific default).
    #[arg(long)]
    tol: Option<f64>,
    /// Window half-width exponent for norm ratios.
    #[arg(long)]
    eps: Option<f64>,
    /// Coarse,fine solver grid sizes.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Variational grid size.
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    l1_tol: Option<f64>,
    #[arg(long)]
    w_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Domain(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Domain(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Domain(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            // Bad input vs broken run: constraint-shaped errors are usage.
            CliError::Domain(
                Error::Constraint(_)
                | Error::UnsupportedField(_)
                | Error::Infeasible(_)
                | Error::Precision { .. },
            ) => 2,
            _ => 1,
        }
    }
}

fn default_bits(flag: Option<u32>) -> u32 {
    flag.or_else(|| {
        std::env::var("QZERO_DEFAULT_BITS")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(192)
    .max(64)
}

fn require_q(q: &Option<Rational>) -> Result<Rational, Error> {
    q.clone()
        .ok_or_else(|| Error::Constraint("--q required".into()))
}

fn require_family(fam: Option<FamilySpec>) -> Result<FamilySpec, Error> {
    fam.ok_or_else(|| Error::Constraint("--family required".into()))
}

/// The equilibrium the configured family's scaled zeros converge to: the
/// field equilibrium for scaled parameters, the bare constraint otherwise.
fn solution_for(fam: &Option<FamilySpec>, q: &Rational) -> Result<EquilibriumSolution, Error> {
    match fam {
        Some(f) => limiting_equilibrium(f, q),
        None => equilibrium_no_field(q),
    }
}

fn cmd_zeros(args: &ZerosArgs) -> Result<(), CliError> {
    let mut meta = Meta::new("zeros");
    (meta.family, meta.params) = args.fam.describe();
    meta.q = args.q.as_ref().map(Rational::to_string);
    meta.n = Some(args.n);
    meta.columns = vec!["index", "zero", "scaled_zero"];
    if args.n == 0 {
        meta.bits = default_bits(args.bits);
        return Ok(write_csv(args.out.as_deref(), &meta, &[])?);
    }
    let q = require_q(&args.q)?;
    let fam = require_family(args.fam.resolve(&q)?)?;
    let ctx = PrecisionContext::new(q, default_bits(args.bits))?;
    let zs = compute_zeros(&fam, args.n, &ctx)?;
    let emp = scaled_zeros(&zs);
    meta.bits = zs.certified_bits();
    let rows: Vec<Vec<String>> = zs
        .zeros()
        .iter()
        .zip(emp.support())
        .enumerate()
        .map(|(i, (z, s))| {
            vec![
                i.to_string(),
                float_str(z, zs.certified_bits()),
                float_str(s, zs.certified_bits()),
            ]
        })
        .collect();
    Ok(write_csv(args.out.as_deref(), &meta, &rows)?)
}

fn cmd_cloud(args: &CloudArgs) -> Result<(), CliError> {
    let fam = require_family(args.fam.resolve(&args.q)?)?;
    let ctx = PrecisionContext::new(args.q.clone(), default_bits(args.bits))?;
    let zs = compute_zeros(&fam, args.n, &ctx)?;
    let cloud = zero_cloud(&zs);
    let mut meta = Meta::new("cloud");
    (meta.family, meta.params) = args.fam.describe();
    meta.q = Some(args.q.to_string());
    meta.n = Some(args.n);
    meta.bits = zs.certified_bits();
    meta.columns = vec!["index", "re", "im"];
    let rows: Vec<Vec<String>> = cloud
        .iter()
        .enumerate()
        .map(|(i, (re, im))| vec![i.to_string(), f64_str(*re), f64_str(*im)])
        .collect();
    Ok(write_csv(args.out.as_deref(), &meta, &rows)?)
}

/// Log-uniform radii over [q^depth, 1], ascending.
fn radius_grid(ln_q: f64, depth: f64, points: usize) -> Vec<(f64, f64)> {
    let n = points.max(2);
    (0..n)
        .map(|i| {
            let t = depth * (1.0 - i as f64 / (n - 1) as f64);
            (t, (t * ln_q).exp())
        })
        .collect()
}

fn measure_meta(command: &str, args: &MeasureArgs, bits: u32) -> Meta {
    let mut meta = Meta::new(command);
    (meta.family, meta.params) = args.fam.describe();
    meta.q = Some(args.q.to_string());
    meta.bits = bits;
    meta.grid_points = Some(args.points);
    meta
}

fn cmd_density(args: &MeasureArgs) -> Result<(), CliError> {
    let sol = solution_for(&args.fam.resolve(&args.q)?, &args.q)?;
    let mu = &sol.measure;
    let ln_q = mu.ln_q();
    let deepest = mu.hat_pieces().last().map(|p| p.hi.to_f64()).unwrap_or(1.0);
    let depth = args.depth.unwrap_or(deepest + 2.0);
    let mut meta = measure_meta("density", args, 64);
    meta.columns = vec!["r", "density", "constraint"];
    let rows: Vec<Vec<String>> = radius_grid(ln_q, depth, args.points)
        .into_iter()
        .map(|(t, r)| {
            // Physical radial densities: hat densities carry 1/(r·|log q|).
            let scale = -1.0 / (r * ln_q);
            let density = mu.density_rel_at(t) * scale;
            let constraint = if (0.0..=1.0).contains(&t) { scale } else { 0.0 };
            vec![f64_str(r), f64_str(density), f64_str(constraint)]
        })
        .collect();
    Ok(write_csv(args.out.as_deref(), &meta, &rows)?)
}

fn cmd_potential_profile(args: &MeasureArgs) -> Result<(), CliError> {
    let sol = solution_for(&args.fam.resolve(&args.q)?, &args.q)?;
    let mu = &sol.measure;
    let ln_q = mu.ln_q();
    let deepest = mu.hat_pieces().last().map(|p| p.hi.to_f64()).unwrap_or(1.0);
    let depth = args.depth.unwrap_or(deepest + 2.0);
    let w = sol.w();
    let mut meta = measure_meta("potential-profile", args, 64);
    meta.columns = vec!["r", "potential", "potential_plus_field", "w"];
    let rows: Vec<Vec<String>> = radius_grid(ln_q, depth, args.points)
        .into_iter()
        .map(|(t, r)| {
            let u = -ln_q * mu.potential_hat_f64(t);
            let upq = u - ln_q * sol.field.hat_f64(t);
            vec![f64_str(r), f64_str(u), f64_str(upq), f64_str(w)]
        })
        .collect();
    Ok(write_csv(args.out.as_deref(), &meta, &rows)?)
}

fn json<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report serializes")
}

fn verify_report(args: &VerifyArgs) -> Result<(bool, serde_json::Value), CliError> {
    match args.suite {
        SuiteArg::Gamma => {
            let q = require_q(&args.q)?;
            let fam = require_family(args.fam.resolve(&q)?)?;
            let ns = args.n_list.clone().unwrap_or_else(|| vec![8, 16, 32]);
            let tol = args.tol.unwrap_or(0.03);
            let monotone = stated_gamma_limit_hat(&fam)
                .map(|t| t >= 0u32)
                .unwrap_or(true);
            let rep = gamma_suite("gamma", &fam, &q, &ns, monotone, tol)?;
            Ok((rep.pass, json(&rep)))
        }
        SuiteArg::Ks => {
            let q = require_q(&args.q)?;
            let fam = require_family(args.fam.resolve(&q)?)?;
            let ns = args.n_list.clone().unwrap_or_else(|| vec![10, 20, 40]);
            let tol = args.tol.unwrap_or(0.12);
            let rep = ks_suite("ks", &fam, &q, &ns, tol)?;
            Ok((rep.pass, json(&rep)))
        }
        SuiteArg::Variational => {
            let rep = variational_suite(
                args.grid_size.unwrap_or(1000),
                args.tol.unwrap_or(1e-6),
            )?;
            Ok((rep.pass, json(&rep)))
        }
        SuiteArg::Solver => {
            let mut cases = solver_reference_cases()?;
            if let Some(sizes) = &args.sizes {
                if sizes.len() != 2 {
                    return Err(Error::Constraint(
                        "--sizes takes exactly two comma-separated grid sizes".into(),
                    )
                    .into());
                }
                for c in &mut cases {
                    c.sizes = (sizes[0], sizes[1]);
                }
            }
            let rep = solver_suite(
                &cases,
                args.l1_tol.unwrap_or(0.05),
                args.w_tol.unwrap_or(0.02),
            )?;
            Ok((rep.pass, json(&rep)))
        }
        SuiteArg::Lemmas => {
            let run_all = args.lemma.is_none();
            let want = |l: LemmaArg| run_all || args.lemma == Some(l);
            let mut pass = true;
            let mut parts = serde_json::Map::new();
            if want(LemmaArg::PochLimit) {
                let q = args.q.clone().unwrap_or_else(|| Rational::from((1u32, 2u32)));
                let cs = args.c.clone().unwrap_or_else(|| {
                    vec![
                        Rational::from(1u32),
                        Rational::new(),
                        Rational::from(-1),
                        Rational::from(-2),
                    ]
                });
                let rep =
                    poch_limit_suite(&q, args.n.unwrap_or(200), &cs, args.tol.unwrap_or(0.02))?;
                pass &= rep.pass;
                parts.insert("poch-limit".into(), json(&rep));
            }
            let ns = args.n_list.clone().unwrap_or_else(|| vec![8, 16, 24]);
            let eps = args.eps.unwrap_or(0.1);
            let tol = args.tol.unwrap_or(0.1);
            if want(LemmaArg::NormRatio) {
                let q = args.q.clone().unwrap_or_else(|| Rational::from((1u32, 4u32)));
                let fam = match args.fam.resolve(&q)? {
                    Some(f) => f,
                    None => FamilySpec::little_q_laguerre(Rational::from((1u32, 2u32)), &q)?,
                };
                let rep = norm_ratio_suite("norm-ratio", &fam, None, &q, eps, &ns, tol)?;
                pass &= rep.pass;
                parts.insert("norm-ratio".into(), json(&rep));
            }
            if want(LemmaArg::NormRatioField) {
                let q = args.q.clone().unwrap_or_else(|| Rational::from((3u32, 4u32)));
                let fam = match args.fam.resolve(&q)? {
                    Some(f) => f,
                    None => FamilySpec::q_bessel_scaled(Rational::from((-3, 4))),
                };
                let field = fam.external_field()?;
                let rep =
                    norm_ratio_suite("norm-ratio-field", &fam, Some(&field), &q, eps, &ns, tol)?;
                pass &= rep.pass;
                parts.insert("norm-ratio-field".into(), json(&rep));
            }
            Ok((pass, serde_json::Value::Object(parts)))
        }
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool, CliError> {
    let (pass, report) = verify_report(args)?;
    let mut meta = Meta::new("verify");
    (meta.family, meta.params) = args.fam.describe();
    meta.q = args.q.as_ref().map(Rational::to_string);
    meta.bits = default_bits(None);
    if let Some(t) = args.tol {
        meta.tolerances.insert("tol".into(), t);
    }
    let value = serde_json::json!({
        "meta": meta,
        "suite": format!("{:?}", args.suite).to_lowercase(),
        "pass": pass,
        "report": report,
    });
    write_json(args.out.as_deref(), &value)?;
    Ok(pass)
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    match &cli.cmd {
        Cmd::Zeros(a) => cmd_zeros(a).map(|()| true),
        Cmd::Cloud(a) => cmd_cloud(a).map(|()| true),
        Cmd::Density(a) => cmd_density(a).map(|()| true),
        Cmd::PotentialProfile(a) => cmd_potential_profile(a).map(|()| true),
        Cmd::Verify(a) => cmd_verify(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
