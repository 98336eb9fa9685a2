//! Dense `f64` tensors with a reverse-mode tape.

mod gradcheck;
mod init;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, relative_error, GradCheckReport, REL_ERROR_FLOOR};
pub use init::{xavier_bound, xavier_uniform};
pub use tape::{convex_mix, Gradients, Tape, Var};
pub use tensor::Tensor;
