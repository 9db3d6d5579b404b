//! Numerical substrate for actors and critics: dense networks, Adam,
//! Polyak target updates, gradient clipping and a binary checkpoint format.

mod adam;
mod checkpoint;
mod mlp;

pub use adam::{Adam, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use checkpoint::{load_mlp, read_mlp, save_mlp, write_mlp};
pub use mlp::{
    clip_gradients, soft_update, Activation, ForwardCache, Gradients, InputGradient, Layer,
    LayerGradient, Mlp,
};
