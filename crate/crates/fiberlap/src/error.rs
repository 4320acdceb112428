//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors reported by solver, table, quadrature and certificate routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Grid too coarse for the requested accuracy (spacing, eigenvalue
    /// clustering, or failed residual check).
    #[error("discretization too coarse: {0}")]
    DiscretizationTooCoarse(String),

    /// Eigenfunction mass near the right edge of the computational box is
    /// above the truncation tolerance and enlarging the box did not cure it.
    #[error("truncation too small: boundary mass {mass:.3e} at x_max = {x_max}")]
    TruncationTooSmall { mass: f64, x_max: f64 },

    /// The y-grid cannot resolve oscillations e^{iky} of the targeted k-range.
    #[error("aliasing: y-step {dy} too large for |k| up to {k_max}")]
    Aliasing { dy: f64, k_max: f64 },

    /// Mass of the sampled function on the rectangle boundary is too large;
    /// the rectangle truncates the function.
    #[error("rectangle truncates the function: boundary mass fraction {0:.3e}")]
    RectangleTruncation(f64),

    /// Requested y is beyond what the k-grid step can resolve in e^{iky}.
    #[error("unresolved oscillation: |y| * k_step = {0:.3} exceeds 0.5")]
    UnresolvedOscillation(f64),

    /// Fewer tail nodes resolve above the floor than a reliable limit needs.
    #[error("insufficient tail resolution: only {0} usable nodes above the floor")]
    InsufficientTailResolution(usize),

    /// Evaluation point too close to an interval endpoint where the density
    /// does not vanish.
    #[error("endpoint proximity: lambda = {lambda} within {dist:.3e} of endpoint")]
    EndpointProximity { lambda: f64, dist: f64 },

    /// Adaptive quadrature hit the panel cap before reaching its tolerance.
    #[error("quadrature failure: error estimate {estimate:.3e} after {panels} panels")]
    QuadratureFailure { estimate: f64, panels: usize },

    /// Energy or momentum outside the tabulated band range.
    #[error("value {0} outside the tabulated range")]
    OutOfTabulatedRange(f64),

    /// Asymptotic fit window extends past the resolvable tail.
    #[error("window too wide: k up to {0} is past the resolvable tail")]
    WindowTooWide(f64),

    /// Near-threshold boundary value requested for a mode that does not pass
    /// the absorption-space membership test.
    #[error("membership violation near threshold {threshold}: residual weight {value:.3e}")]
    MembershipViolation { threshold: f64, value: f64 },

    /// Requested energy is below the resolution floor of the tabulated tail.
    #[error("resolution floor: lambda - E_n = {0:.3e} is below the tabulated tail")]
    ResolutionFloor(f64),

    /// Tail data spans too few decades for a meaningful exponent fit.
    #[error("degenerate fit: tail spans {0:.2} decades, need at least 4")]
    DegenerateFit(f64),

    /// Mode coefficients do not dominate the continuation factor e^{-Im(y)(k+k')}.
    #[error("domination failure: weighted tail grows toward the grid end (factor {0:.3e})")]
    DominationFailure(f64),

    /// Invalid argument (range, shape or compatibility precondition).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
