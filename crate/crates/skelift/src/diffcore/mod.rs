//! Minimal differentiable-computation substrate: shaped dense tensors, a
//! small set of primitives with analytic gradients, and a finite-difference
//! checking oracle.

mod gradcheck;
mod graph;
mod params;
mod tensor;

pub use gradcheck::{grad_check, relative_error, DifferentiableScalar, GradReport, ParamGradStat};
pub use graph::{softmax_stable, Activation, BoundParams, Gradients, Graph, Var};
pub use params::{glorot_uniform, ParamStore};
pub use tensor::Tensor;
