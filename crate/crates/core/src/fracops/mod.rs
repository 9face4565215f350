//! Fractional calculus on uniformly sampled vector-valued functions.

mod calculus;
mod coeffs;
mod path;
mod regularity;
mod weights;

pub use calculus::{
    caputo_derivative, caputo_derivative_with_traces, frac_integral, initial_traces, rl_derivative,
    scalar_resolvent,
};
pub use coeffs::{extract_initial_coeffs, CoeffEstimate};
pub use path::{inf_norm, PowerTerm, SampledPath, C64, MIN_INTERVALS};
pub use regularity::{
    estimate_holder_exponent, holder_seminorm, zygmund_seminorm, HolderReport, ZygmundReport, DEGENERATE_MODULUS,
    HOLDER_CAP,
};
pub use weights::ConvWeights;
