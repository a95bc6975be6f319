//! Hitting and taboo-hitting probabilities for symmetric, irreducible
//! continuous-time random walks on the integer lattice.
//!
//! A walk jumps from `x` to `x + z` at rate `a(z)`, with `a(z) = a(-z)`. For
//! a start `x`, target `y` and taboo point `z` the crate computes
//!
//! * the limits `H_{x,y}(∞)` and `H_{x,y,z}(∞)` in closed form,
//! * the leading tail asymptotics of `H(∞) - H(t)`,
//! * full time-domain c.d.f. curves via discretized convolution equations,
//! * Monte Carlo and linear-algebra oracles for all of the above.

pub mod error;
pub mod hnf;
pub mod kernels;
pub mod lattice;
pub mod limits;
pub mod model;
mod quadrature;
pub mod simulator;
pub mod time_domain;

pub use error::{Error, Result};
pub use kernels::{
    green_function, k_kernel, rho, transition_probability, transition_table, trig_identity_check, KernelValue,
    QuadratureConfig, TransitionTable,
};
pub use lattice::LatticeVector;
pub use limits::{
    hitting_limit, hitting_tail, taboo_limit, taboo_limit_minus, taboo_tail, taboo_tail_minus, tail_constant,
    LimitValue, TabooQuery, TailAsymptotic, TailOrder, Variant,
};
pub use model::{
    char_exponent, is_simple_1d, spectral_scalars, tilde_gamma, validate_model, JumpTable, RawJump, RawModel,
    SpectralScalars, WalkModel,
};
pub use simulator::{
    absorption_bracket, absorption_limit_oracle, estimate_hitting_cdf_many, estimate_minus_cdf,
    estimate_minus_cdf_many, estimate_taboo_cdf, estimate_taboo_cdf_many, estimate_taboo_deficit_many, fit_tail_order,
    AbsorptionBracket, McEstimate, SimConfig,
};
pub use time_domain::{
    curve_laplace, hitting_cdf, laplace_hitting, laplace_taboo, minus_from_plus, taboo_cdf, tail_extract, CdfCurve,
    TabooCurves, TimeGrid,
};
