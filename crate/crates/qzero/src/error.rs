use thiserror::Error;

/// Errors shared across the library.
///
/// Messages for constraint violations name the violated inequality so callers
/// (in particular the CLI) can surface it verbatim.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter violates its documented constraint.
    #[error("parameter constraint violated: {0}")]
    Constraint(String),
    /// The working precision is below the floor required for the requested degree.
    #[error("precision {have} bits is below the {need} bits required for degree {degree}")]
    Precision { have: u32, need: u32, degree: u32 },
    /// A truncated infinite product/series never met its tolerance within the iteration cap.
    #[error("tail of {what} did not fall below tolerance within {cap} factors")]
    TailNotConvergent { what: &'static str, cap: usize },
    /// High-precision values from contexts with different q were mixed.
    #[error("precision contexts disagree on the base q")]
    MixedBase,
    /// A root-refinement interval carries no sign change.
    #[error("bracket [{lo}, {hi}] does not bracket a sign change")]
    EmptyBracket { lo: f64, hi: f64 },
    /// The lattice scan kept missing zeros even after precision escalation.
    #[error("found {found} of {expected} sign changes after {attempts} precision escalations")]
    MissingZeros {
        found: usize,
        expected: usize,
        attempts: u32,
    },
    /// The external field is outside what the constrained construction covers.
    #[error("unsupported external field: {0}")]
    UnsupportedField(String),
    /// The convex solver stopped before reaching its KKT tolerance.
    #[error("solver stalled: KKT residual {residual:.3e} above tolerance {tol:.3e} after {iters} iterations")]
    SolverStalled {
        residual: f64,
        tol: f64,
        iters: usize,
    },
    /// The requested feasible set is empty (e.g. unit mass exceeds total capacity).
    #[error("infeasible constraint set: {0}")]
    Infeasible(String),
    /// An internal cross-check failed; indicates a bug, not bad input.
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
