//! Dense tensors, an eager reverse-mode tape, and the Adadelta optimizer.

mod adadelta;
pub mod container;
pub mod gradcheck;
mod graph;
mod params;
mod tensor;

pub use adadelta::{AdadeltaState, DEFAULT_EPS, DEFAULT_RHO};
pub use graph::{sigmoid, softmax_in_place, Activation, Gradients, Graph, Var, PROB_FLOOR};
pub use params::{ParamId, ParamStore, INIT_SCALE};
pub use tensor::Tensor;
