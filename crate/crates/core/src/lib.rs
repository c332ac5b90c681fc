//! Shapley values of cooperative games: exact computation, interaction
//! indices and the k-additive weighted least-squares approximation, together
//! with the sampling baselines it is usually compared against.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod coalition;
pub mod entropy;
pub mod error;
pub mod exact;
pub mod game;
pub mod kadd;
pub mod sampler;
pub mod svakadd;
pub mod wls;

pub use baselines::{kernelshap, permutation_sampling, run_method, stratified_sampling, Method};
pub use coalition::{
    binomial, enumerate_all, enumerate_size, grand_coalition, Coalition, PlayerCount,
    DEFAULT_PLAYER_CAP, MAX_PLAYERS,
};
pub use error::{Error, Result};
pub use exact::{exact_interaction, exact_shapley, mse, ShapleyVector};
pub use game::{
    normalize, AdditiveGame, Counted, FnGame, Game, GloveGame, Normalized, UnanimityGame,
    ValueTable,
};
pub use kadd::{
    random_kadditive, reconstruct_values, InteractionBasis, InteractionVector, KAdditiveGame,
};
pub use sampler::CoalitionSampler;
pub use svakadd::{run_svakadd, Estimate, EstimatorConfig};
pub use wls::{ConstraintMode, SampleSet, SolverOptions};
