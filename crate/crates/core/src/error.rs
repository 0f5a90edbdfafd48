use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("step {step} too large: h * max projected difference = {product:.6} >= pi")]
    StepTooLarge { step: f64, product: f64 },

    #[error("Hankel matrix carries no information (largest singular value {0:e})")]
    RankDeficient(f64),

    #[error("no roots of the Prony polynomial lie on the unit circle")]
    NoUnimodularRoots,

    #[error("no difference within {tol:e} of {target}")]
    MatchNotFound { target: f64, tol: f64 },

    #[error("outer coefficient moduli tie: |c_1| = {first}, |c_N| = {last}")]
    OuterModulusTie { first: f64, last: f64 },

    #[error("expected {expected} exponential terms, Prony returned {found}")]
    WrongTermCount { expected: usize, found: usize },

    #[error("hypothesis violated on line {line}: {reason}")]
    HypothesisViolation { line: usize, reason: String },

    #[error("ambiguous modulus match on line {line}")]
    AmbiguousMatch { line: usize },

    #[error("no admissible direction after {0} draws")]
    DirectionSearchExhausted(usize),

    #[error("direction {index} rejected: {reason}")]
    DirectionRejected { index: usize, reason: String },

    #[error("direction basis is singular (condition number {0:e})")]
    SingularBasis(f64),

    #[error(
        "solved translation of atom {atom} is {distance:e} away from its candidates (tol {tol:e})"
    )]
    CandidateMismatch {
        atom: usize,
        distance: f64,
        tol: f64,
    },

    #[error("neither role assignment of the generic directions satisfies the ordering condition")]
    GenericityFailure,

    #[error("nearest-translation assignment is not bijective")]
    MatchingFailed,

    #[error("no instance satisfying the hypotheses after {0} attempts")]
    SynthesisExhausted(usize),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// `(module, operation)` that raised the error, for machine-readable reports.
    pub fn origin(&self) -> (&'static str, &'static str) {
        match self {
            Error::InvalidInput(_) => ("validation", "validate"),
            Error::StepTooLarge { .. } => ("signal-model", "sample_line"),
            Error::RankDeficient(_) | Error::NoUnimodularRoots => ("prony-engine", "apm"),
            Error::MatchNotFound { .. }
            | Error::OuterModulusTie { .. }
            | Error::WrongTermCount { .. } => ("retrieval-1d", "retrieve_line"),
            Error::HypothesisViolation { .. } => ("retrieval-nd", "retrieve_nd"),
            Error::AmbiguousMatch { .. } => ("retrieval-nd", "match_by_modulus"),
            Error::DirectionSearchExhausted(_) | Error::DirectionRejected { .. } => {
                ("retrieval-nd", "choose_adaptive_direction")
            }
            Error::SingularBasis(_) | Error::CandidateMismatch { .. } => {
                ("retrieval-nd", "resolve_translations")
            }
            Error::GenericityFailure => ("retrieval-nd", "retrieve_2d_generic"),
            Error::MatchingFailed => ("ambiguity-metrics", "best_match_error"),
            Error::SynthesisExhausted(_) => ("cli-harness", "cmd_synth"),
            Error::Json(_) => ("io", "parse"),
        }
    }

    /// Stable variant name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::StepTooLarge { .. } => "StepTooLarge",
            Error::RankDeficient(_) => "RankDeficient",
            Error::NoUnimodularRoots => "NoUnimodularRoots",
            Error::MatchNotFound { .. } => "MatchNotFound",
            Error::OuterModulusTie { .. } => "OuterModulusTie",
            Error::WrongTermCount { .. } => "WrongTermCount",
            Error::HypothesisViolation { .. } => "HypothesisViolation",
            Error::AmbiguousMatch { .. } => "AmbiguousMatch",
            Error::DirectionSearchExhausted(_) => "DirectionSearchExhausted",
            Error::DirectionRejected { .. } => "DirectionRejected",
            Error::SingularBasis(_) => "SingularBasis",
            Error::CandidateMismatch { .. } => "CandidateMismatch",
            Error::GenericityFailure => "GenericityFailure",
            Error::MatchingFailed => "MatchingFailed",
            Error::SynthesisExhausted(_) => "SynthesisExhausted",
            Error::Json(_) => "Json",
        }
    }

    /// Input validation failures, as opposed to numerical or pipeline failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::StepTooLarge { .. } | Error::Json(_)
        )
    }
}
