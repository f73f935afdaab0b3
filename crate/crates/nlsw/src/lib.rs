//! Exponential wave integrator, sine pseudospectral, for the nonlinear
//! Schrödinger equation with wave operator
//!
//! ```text
//!     i ∂ₜψ − ε² ∂ₜₜψ + ∂ₓₓψ + f(|ψ|²)ψ = 0,   x ∈ (a, b),  t > 0,
//!     ψ(x, 0) = ψ₀(x),   ∂ₜψ(x, 0) = ψ₁(x) + ε^α ω(x),
//! ```
//!
//! with homogeneous Dirichlet boundaries and a wave-operator parameter
//! ε ∈ (0, 1]. The solver integrates each sine mode's characteristic
//! oscillations exactly and treats the nonlinearity by quadrature of its
//! Duhamel integral, which keeps the accuracy uniform in ε: second order in
//! time outside the resonance band τ ≈ ε², spectral in space.
//!
//! Crate layout:
//! - [`spectral`]: grids, nodal/mode fields, the fast sine transform, norms;
//! - [`coeffs`]: per-mode integrator coefficients (characteristic roots,
//!   filtered phases) evaluated in compensated arithmetic;
//! - [`stepper`]: the two-level time integrator and initial-data handling;
//! - [`reference`]: fine-grid self-reference and a Strang splitting solver
//!   for the ε → 0 limit equation, plus a disk cache;
//! - [`analysis`]: error reports, convergence-rate tables, sweep drivers;
//! - [`dd`]: double-double scalars used where the recurrence is
//!   resonance-amplified.

pub mod analysis;
pub mod coeffs;
pub(crate) mod dd;
pub mod reference;
pub mod spectral;
pub mod stepper;

pub use num_complex::Complex64;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration (grid sizes, parameter ranges, step counts).
    #[error("configuration error: {0}")]
    Config(String),

    /// Two fields that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A non-finite value appeared in the solution.
    #[error("solution blew up at step {step} (t = {time:.6})")]
    BlowUp { step: u64, time: f64 },

    /// Reference cache file is malformed or inconsistent with its request.
    #[error("reference cache error: {0}")]
    Cache(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
