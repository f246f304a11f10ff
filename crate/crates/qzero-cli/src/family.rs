//! Flag-to-family resolution: each family takes either fixed rational
//! parameters or scaling exponents, never both.

use std::collections::BTreeMap;

use clap::ValueEnum;
use rug::Rational;

use qzero::families::FamilySpec;
use qzero::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyKindArg {
    LittleQLaguerre,
    QBessel,
    LittleQJacobi,
}

#[derive(Debug, Clone, clap::Args)]
pub struct FamilyArgs {
    /// Polynomial family; omit for the bare constraint measure.
    #[arg(long, value_enum)]
    pub family: Option<FamilyKindArg>,
    /// Fixed parameter a, an exact rational like "1/2".
    #[arg(long, value_parser = parse_rational, conflicts_with = "alpha")]
    pub a: Option<Rational>,
    /// Fixed parameter b (little q-Jacobi only).
    #[arg(long, value_parser = parse_rational, conflicts_with = "beta")]
    pub b: Option<Rational>,
    /// Scaling exponent α, making a = q^{2nα} degree-dependent.
    #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
    pub alpha: Option<Rational>,
    /// Scaling exponent β, making b = −q^{2nβ} (little q-Jacobi only).
    #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
    pub beta: Option<Rational>,
}

pub fn parse_rational(s: &str) -> std::result::Result<Rational, String> {
    s.trim()
        .parse::<Rational>()
        .map_err(|e| format!("expected a rational like \"3/4\": {e}"))
}

impl FamilyArgs {
    pub fn is_empty(&self) -> bool {
        self.family.is_none()
            && self.a.is_none()
            && self.b.is_none()
            && self.alpha.is_none()
            && self.beta.is_none()
    }

    /// Family label and parameter map for output metadata.
    pub fn describe(&self) -> (Option<String>, BTreeMap<String, String>) {
        let label = self.family.map(|f| {
            match f {
                FamilyKindArg::LittleQLaguerre => "little-q-laguerre",
                FamilyKindArg::QBessel => "q-bessel",
                FamilyKindArg::LittleQJacobi => "little-q-jacobi",
            }
            .to_string()
        });
        let mut params = BTreeMap::new();
        for (key, val) in [
            ("a", &self.a),
            ("b", &self.b),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
        ] {
            if let Some(v) = val {
                params.insert(key.to_string(), v.to_string());
            }
        }
        (label, params)
    }

    /// Builds the family, or None when no family flags were given at all.
    pub fn resolve(&self, q: &Rational) -> Result<Option<FamilySpec>> {
        let Some(kind) = self.family else {
            if !self.is_empty() {
                return Err(Error::Constraint(
                    "family parameters given without --family".into(),
                ));
            }
            return Ok(None);
        };
        let fixed = self.a.is_some() || self.b.is_some();
        let scaled = self.alpha.is_some() || self.beta.is_some();
        if fixed == scaled {
            return Err(Error::Constraint(
                "exactly one of fixed parameters (--a/--b) or exponents (--alpha/--beta) required"
                    .into(),
            ));
        }
        let need = |opt: &Option<Rational>, name: &str| -> Result<Rational> {
            opt.clone()
                .ok_or_else(|| Error::Constraint(format!("--{name} required for this family")))
        };
        let reject = |opt: &Option<Rational>, name: &str| -> Result<()> {
            if opt.is_some() {
                return Err(Error::Constraint(format!(
                    "--{name} only applies to little-q-jacobi"
                )));
            }
            Ok(())
        };
        let fam = match (kind, fixed) {
            (FamilyKindArg::LittleQLaguerre, true) => {
                reject(&self.b, "b")?;
                FamilySpec::little_q_laguerre(need(&self.a, "a")?, q)?
            }
            (FamilyKindArg::LittleQLaguerre, false) => {
                reject(&self.beta, "beta")?;
                FamilySpec::little_q_laguerre_scaled(need(&self.alpha, "alpha")?)?
            }
            (FamilyKindArg::QBessel, true) => {
                reject(&self.b, "b")?;
                FamilySpec::q_bessel(need(&self.a, "a")?)?
            }
            (FamilyKindArg::QBessel, false) => {
                reject(&self.beta, "beta")?;
                FamilySpec::q_bessel_scaled(need(&self.alpha, "alpha")?)
            }
            (FamilyKindArg::LittleQJacobi, true) => {
                FamilySpec::little_q_jacobi(need(&self.a, "a")?, need(&self.b, "b")?, q)?
            }
            (FamilyKindArg::LittleQJacobi, false) => FamilySpec::little_q_jacobi_scaled(
                need(&self.alpha, "alpha")?,
                need(&self.beta, "beta")?,
                true,
            )?,
        };
        Ok(Some(fam))
    }
}
