//! Dense feed-forward networks with exact reverse-mode gradients, first-order
//! optimizers and a versioned checkpoint format.

mod checkpoint;
mod gradcheck;
mod net;
mod optim;

pub use checkpoint::{write_atomic, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_SCHEMA_VERSION};
pub use gradcheck::{check_gradients, relative_error, GradientCheck};
pub use net::{Activation, DenseNet, Gradients, Layer, Tape};
pub use optim::{AdamConfig, Optimizer};
