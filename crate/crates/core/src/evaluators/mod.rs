//! The evaluator zoo: the pairwise difference evaluator, pointwise V1/V2,
//! the calibrated variant (V2 weights, different loss) and the linear
//! evaluator, plus checkpoint files.

mod checkpoint;
mod config;
mod input;
mod linear_eval;
mod model;
mod pairwise;
mod pointwise;
mod scorer;
mod trunk;

pub use checkpoint::{load_checkpoint, read_params, save_checkpoint, write_params, CheckpointMeta, PARAMS_MAGIC};
pub use config::{
    count_parameters, ArchitectureConfig, LinearConfig, PairwiseConfig, PointwiseV1Config, PointwiseV2Config,
};
pub use input::RecordInput;
pub use linear_eval::{LinearCache, LinearEvaluator};
pub use model::{Evaluator, PointCache};
pub use pairwise::{PairwiseCache, PairwiseEvaluator};
pub use pointwise::{PointwiseV1, PointwiseV2, V1Cache, V2Cache};
pub use scorer::{Scorer, ScorerCache};
pub use trunk::{Trunk, TrunkCache};

/// Standard deviation of the normal init for pooling keys and query.
pub const POOL_INIT_STD: f64 = 0.02;
