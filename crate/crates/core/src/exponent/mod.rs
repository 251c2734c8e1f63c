//! Bounds on the maximal Lyapunov exponent and the certificates behind them.

mod berger_wang;
mod bounds;
mod certify;
mod config;
mod lyapunov;
pub(crate) mod search;
mod witness;

pub use berger_wang::{berger_wang_check, BergerWangReport};
pub use bounds::{
    alpha_max, classify, explore, grid_letters, hat_lambda_estimate, json_real, lambda_bounds, mu_lower,
    weighted_bounds, BoundsReport, Classification, HatLambda,
};
pub use certify::{certify_upper, Block, CertLetter, CertifyFailure, UpperCertificate};
pub use config::SearchConfig;
pub use lyapunov::{
    build_lyapunov, sphere_samples, validate_lyapunov, LyapunovCertificate, LyapunovFailure, Validation, Violation,
};
pub use search::{search, word_from_indices, SearchOutcome};
pub use witness::{constant_witness, eu_witness, growth_rate, EuWitness};
