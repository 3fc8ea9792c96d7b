//! Ziv-Zakai and Cramér-Rao bounds for near-field localization with a uniform
//! linear array, plus a Monte Carlo maximum-likelihood baseline.

pub mod asymptotics;
pub mod crb;
pub mod error;
pub mod mle;
pub mod model;
pub mod quad;
pub mod runner;
pub mod zzb;

pub use crb::{
    crb_aoa_local, crb_distance_local, crb_global, crb_global_distance_closed, numerical_fim,
    FisherMatrix, Parameter, PriorBox,
};
pub use error::{Error, Result};
pub use model::{
    correlation, element_positions, exact_distance, fresnel_distance, pmin, pmin_from_correlation,
    q_function, steering_vector, ArrayConfig, Displacement, PolarPosition, SnrSpec, SPEED_OF_LIGHT,
};
pub use zzb::{
    zzb_aoa_joint, zzb_aoa_joint_sweep, zzb_distance_joint, zzb_distance_joint_sweep,
    zzb_distance_known_aoa, zzb_distance_known_aoa_sweep, zzb_highsnr_asymptote, zzb_prior_limit,
    DeltaSearch, HGrid, QuadratureSpec, ZzbGrid, ZzbResult,
};
