use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("singular basis: {0}")]
    SingularBasis(String),
    #[error("moire length scale is degenerate (twist and mismatch both vanish)")]
    DegenerateScale,
    #[error("zeta tail diverges for exponent s = {0} (need s > 1)")]
    DivergentTail(f64),
    #[error("geometry is not Diophantine within the scanned range (K_hat = 0)")]
    NotDiophantine,
    #[error("potential does not decay below {tol:e} within radius {max_radius}")]
    NoDecay { tol: f64, max_radius: f64 },
    #[error("quadrature not converged: grid {coarse} vs {fine} differ by {change:e}")]
    QuadratureNotConverged {
        coarse: usize,
        fine: usize,
        change: f64,
    },
    #[error("line search stalled at iteration {iteration} (step below {min_step:e})")]
    LineSearchStalled { iteration: usize, min_step: f64 },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
