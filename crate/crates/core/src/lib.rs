//! Phase structure of distance-dependent chase-escape on `d`-ary trees.
//!
//! Red particles spread from the root into empty sites while blue particles
//! chase them; red's spreading rate `λ_ℓ` and death rate `ρ_ℓ` depend on the
//! distance `ℓ` to the nearest blue site on the root path. The crate computes
//! the exact objects controlling expected coexistence of the two species:
//!
//! * [`rates`] — rate vectors, cumulative death sums `D_j`, and the lattice
//!   step weights `u(j)`, `v(j)` they induce;
//! * [`catalan`] — weighted Catalan numbers `C_k` by transfer-matrix DP, with
//!   a brute-force Dyck-path oracle and a root-test radius estimator;
//! * [`contfrac`] — evaluation of the continued fraction representation of
//!   the generating function `g(z) = Σ C_k z^k`, radius-of-convergence
//!   estimation, and the phase verdict `M ≤ d`;
//! * [`jumpchain`] — the one-dimensional gap process: exact transition
//!   probabilities, seeded Monte Carlo, renewal and reach probabilities;
//! * [`treesim`] — event-driven simulation of the full process on a
//!   depth-truncated `d`-ary tree;
//! * [`verify`] — the cross-validation suite wiring the exact and stochastic
//!   routes against each other.

pub mod catalan;
pub mod contfrac;
pub mod jumpchain;
pub mod numeric;
pub mod rates;
pub mod treesim;
pub mod verify;

/// Version stamp embedded in machine-readable outputs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
