//! A small joint-attention simulator: `B` blocks over `T` timesteps with an
//! intervention hook on the text stream before each block.

mod block;
mod pipeline;
mod synthetic;
mod weights;

pub use block::{
    ada_layer_norm, joint_attention_block, softmax_rows, AttentionCombine, AttentionMap,
    BlockState, LAYER_NORM_EPS,
};
pub use pipeline::{
    max_row_sum_error, run_pipeline, BlockSelection, Intervention, InterventionKind,
    PipelineConfig, PipelineRun, TransformRecord,
};
pub use synthetic::{generate, generate_latents, SyntheticSample, SyntheticSpec};
pub use weights::{init_weights, BlockWeights, ModalityWeights, ToyModelWeights};
