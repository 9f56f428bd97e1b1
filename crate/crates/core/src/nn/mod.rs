//! Dense feed-forward networks with exact reverse-mode gradients, Adam, and
//! parameter tying.

mod adam;
mod checkpoint;
mod mlp;
mod tie;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{read_params, write_params};
pub use mlp::{
    backward, forward, grad_check_params, init_params, relative_error, sigmoid, Activation,
    ForwardTrace, Layer, MlpParams, MlpSpec, Network,
};
pub use tie::{fold_grads, project, Tie, TieKind, TieMap};
