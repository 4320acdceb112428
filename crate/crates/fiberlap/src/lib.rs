//! Spectral toolkit for the magnetic Dirichlet Laplacian on the half-plane.
//!
//! The operator `H = -∂_x² + (-i∂_y - x)²` on `Ω = (0,∞) × ℝ` with a
//! Dirichlet condition on the edge `x = 0` is invariant in `y`; a partial
//! Fourier transform turns it into the family of half-line fibers
//! `h(k) = -d²/dx² + (x-k)²`.  Everything in this crate is built from that
//! decomposition:
//!
//! * [`fiber`] — fiber eigenpairs `(λ_n(k), u_n(·,k))` and the identities
//!   they satisfy;
//! * [`band`] — dispersion tables `λ_n`, their monotone inverses, the
//!   spectral weights `μ_n`, `w_n^α`, and tail asymptotics with the
//!   explicit constant `C_n`;
//! * [`mode`] — Fourier coefficients `f_n(k)` of test functions, harmonic
//!   synthesis, weighted norms, and absorption-space membership;
//! * [`cauchy`] — Cauchy integrals off the real axis and their
//!   Plemelj boundary values on the cut;
//! * [`lap`] — resolvent matrix elements, their boundary values up to and
//!   including the Landau thresholds `E_n = 2n-1`, spectral-projector
//!   elements, and Hölder certificates;
//! * [`decay`] — edge-decay certificates for harmonics, Agmon envelopes of
//!   the fiber states, and analytic continuation of harmonic norms.
//!
//! The crates' numerical backbone is deliberately small: a symmetric
//! tridiagonal eigensolver ([`tridiag`]), cubic Hermite interpolation with
//! exact node slopes ([`interp`]), and a deterministic adaptive
//! Gauss–Kronrod rule ([`quad`]).

pub mod band;
pub mod cauchy;
pub mod decay;
pub mod error;
pub mod fiber;
pub mod interp;
pub mod lap;
pub mod mode;
pub mod quad;
pub mod tridiag;

pub use band::{build_band_table, default_k_grid, landau_level, AsymptoticModel, BandTable};
pub use cauchy::{
    boundary_value, epsilon_sweep, holder_constant, offaxis_cauchy, BoundaryValue,
    DensityFunction, Side,
};
pub use decay::{
    agmon_envelope, analytic_continuation, decay_certificate, gamma_split, overlap_kernel,
    tail_mass, theorem_beta_bound, DecayProfile, EnvelopeReport, OverlapKernel,
};
pub use error::{Error, Result};
pub use fiber::{
    band_derivative, default_box, fiber_identity_report, solve_band, solve_fiber, Discretization,
    Eigenpair, FiberFamily,
};
pub use lap::{
    holder_certificate, resolvent_element, rn_boundary, rn_value, spectral_projector_element,
    HolderWindow, LapResult, MethodTag, QueryPoint, ResolventQuery,
};
pub use mode::{
    harmonic_profile, membership_report, project_mode, smooth_step, synthesize_harmonic,
    weighted_norm, HalfPlaneFunction, MembershipReport, ModeFunction, Verdict,
};

/// Fixed-width scientific formatting with 17 significant digits, the byte
/// representation used by every table and report this crate emits.
pub fn sci17(x: f64) -> String {
    format!("{:.16e}", x)
}
