use thiserror::Error;

/// Errors surfaced by the solver and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Series terms never started decreasing within the iteration cap.
    #[error("series did not converge: {0}")]
    NonConvergent(String),

    /// An evaluation regime was asked for outside its validity region.
    #[error("argument outside regime: {0}")]
    OutOfRegime(String),

    /// A transform was applied to a field in the wrong representation.
    #[error("representation mismatch: expected {expected}, found {found}")]
    RepresentationMismatch { expected: String, found: String },

    /// Homogeneous-space membership (zero-mean) check failed.
    #[error("field is not in the homogeneous space: |u^(0)| = {zero_mode} exceeds {tolerance} * l2 mass")]
    NotInHomogeneousSpace { zero_mode: f64, tolerance: f64 },

    /// Picard iteration hit its cap before the increments fell below tolerance.
    #[error("Picard iteration cap {cap} reached; last increment {last_increment:e} > tol {tol:e}")]
    MaxIterations {
        cap: usize,
        last_increment: f64,
        tol: f64,
    },

    /// Resolvent iteration residual plateaued above tolerance.
    #[error("resolvent iteration stalled: residual {residual:e} after {iterations} iterations")]
    IterationStall { residual: f64, iterations: usize },

    /// Contour truncation radius too small: the tail still matters.
    #[error("contour tail not converged: extending R changes the result by {relative_change:e}")]
    TailNotConverged { relative_change: f64 },

    /// Log-log fit window does not contain enough usable points.
    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),

    /// Elliptic solve requested without a certified negative potential bound.
    #[error("potential is not certified coercive (delta0 = 0)")]
    NotCoercive,

    /// Discrete operator lost positivity (smallest eigenvalue {0}).
    #[error("operator not positive: smallest eigenvalue {0}")]
    NotPositive(f64),

    /// Galerkin quadrature changed too much under node doubling.
    #[error("quadrature under-resolved: max entry change {0:e} under node doubling")]
    QuadratureUnderResolved(f64),

    /// A limit estimate did not stabilize over the probing window.
    #[error("probe inconclusive: {0}")]
    Inconclusive(String),

    /// Experiment configuration is invalid; names the offending field.
    #[error("config error: {0}")]
    Config(String),

    /// A scenario assertion failed; names the violated theorem case.
    #[error("assertion failure [{case}]: {detail}")]
    AssertionFailure { case: String, detail: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
