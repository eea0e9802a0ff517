use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid vector: {0}")]
    InvalidVector(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("points are antipodal (inner product {inner:.3e})")]
    AntipodalPoints { inner: f64 },

    #[error("triangle perimeter {perimeter} is not below 2*pi")]
    PerimeterTooLarge { perimeter: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cone projection vanished (norm {norm:.3e}); point is a quarter turn or more from the region")]
    EmptyOrDegenerate { norm: f64 },

    #[error("Dykstra projection did not converge within {sweeps} sweeps (last change {change:.3e})")]
    NoConvergence { sweeps: usize, change: f64 },

    #[error("witness violates a constraint (slack {slack:.3e})")]
    WitnessInfeasible { slack: f64 },

    #[error("iteration {n}: known fixed point violates a generated constraint (slack {slack:.3e})")]
    FeasibilityViolated { n: usize, slack: f64 },

    #[error("iteration {n}: distance from anchor decreased by {drop:.3e}")]
    FejerViolated { n: usize, drop: f64 },

    #[error("alpha {alpha} for stage {stage} at step {n} is outside [{lower}, {upper}]")]
    AlphaOutOfRange {
        n: usize,
        stage: usize,
        alpha: f64,
        lower: f64,
        upper: f64,
    },

    #[error("mapping {index} moves a cap point outside the cap (slack {slack:.3e})")]
    CapNotInvariant { index: usize, slack: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("iteration {n}: {source}")]
    Step {
        n: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no grid point is feasible; region is thinner than the grid resolution")]
    NoFeasibleGridPoint,
}

impl Error {
    pub(crate) fn at_step(self, n: usize) -> Error {
        match self {
            e @ (Error::Step { .. } | Error::FeasibilityViolated { .. } | Error::FejerViolated { .. }) => e,
            e => Error::Step {
                n,
                source: Box::new(e),
            },
        }
    }
}
