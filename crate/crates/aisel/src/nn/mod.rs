//! Minimal dense-network engine: exact backpropagation, sgd/adam optimizers,
//! parameter clipping, and binary checkpoints. Everything is f64 and
//! deterministic per seed, single-threaded.

mod checkpoint;
mod loss;
mod matrix;
mod network;
mod optim;

pub use checkpoint::{load_network, save_network};
pub use loss::{loss_cross_entropy, loss_mse};
pub use matrix::Matrix;
pub use network::{init_network, Activation, ForwardCache, Gradients, LayerSpec, Network};
pub use optim::{step, OptKind, OptimizerState};
