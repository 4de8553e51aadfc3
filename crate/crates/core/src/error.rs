use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LabError {
    #[error("singular axes undefined: operator norm {norm} is within rotation tolerance")]
    DegenerateAxes { norm: f64 },
    #[error("real logarithm undefined: trace {trace} <= -2 + 1e-6")]
    LogDomain { trace: f64 },
    #[error("determinant drift {drift:e} exceeds the unimodularity limit")]
    NotUnimodular { drift: f64 },
    #[error("product entries exceed 1e300 at step {step}")]
    Overflow { step: usize },
    #[error("cell is empty")]
    EmptyCell,
    #[error("{what}: no answer within {horizon} iterates")]
    HorizonExceeded { what: &'static str, horizon: usize },
    #[error("steering budget exhausted after {m_max} steps (angular error {error:e})")]
    BudgetExhausted { m_max: usize, error: f64 },
    #[error("no balanced index in the profile")]
    NoBalancedIndex,
    #[error("steering failed: {0}")]
    SteeringFailed(String),
    #[error("no orbit point in [{from}, {to}] lands in the steering window")]
    CoverageGap { from: usize, to: usize },
    #[error("certification failed: {0}")]
    CertificationFailed(String),
    #[error("no steering window found: {0}")]
    SearchFailed(String),
    #[error("{n} is not a sum of blocks of heights {height} and {}", .height + 1)]
    NotRepresentable { n: usize, height: usize },
    #[error("no base set with disjoint iterates found: {0}")]
    DisjointnessFailed(String),
    #[error("visit-frequency radius fell below the grid spacing without certification")]
    ShrinkExhausted,
    #[error("continuity modulus {delta:e} is below four grid spacings")]
    ResolutionExceeded { delta: f64 },
    #[error("construction not applicable: {0}")]
    NotApplicable(String),
    #[error("perturbation distance {measured} exceeds the bound {bound}")]
    BlendBoundViolated { measured: f64, bound: f64 },
    #[error("orbit decomposition failed at step {step}: {reason}")]
    DecompositionFailed { step: usize, reason: String },
    #[error("direction lift failed between samples {index} and {}", .index + 1)]
    LiftFailed { index: usize },
    #[error("direction field has an odd number ({half_turns}) of half-turns")]
    NonOrientable { half_turns: i64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}
