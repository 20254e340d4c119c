//! Neural-network force provider: group preprocessing, two toy deep-potential
//! families with hand-written reverse-mode gradients, and a small trainer.

mod descriptor;
mod infer;
mod mlp;
mod model;
mod plan;
mod provider;
mod train;

pub use descriptor::{descriptor, switch, RadialBasis, SWITCH_ONSET};
pub use infer::{
    embed_fit_energy, evaluate, evaluate_with_param_grad, message_passing_energy, NnCounters, NnInput, NnOutput,
};
pub use mlp::{Activation, Mlp};
pub use model::{ModelSpec, NnFamily, NnModel, MODEL_FORMAT, MODEL_VERSION};
pub use plan::{plan_group_preprocessing, NnGroupPlan};
pub use provider::{group_input, nn_force_provider, NnEvaluation};
pub use train::{fit_toy_model, training_loss, Optimizer, TrainConfig, TrainingSample};
