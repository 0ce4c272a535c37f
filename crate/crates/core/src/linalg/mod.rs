//! Dense and sparse matrix primitives. All arithmetic is `f64`.

mod dense;
mod sparse;

pub use dense::{argmax, relu, row_softmax, DenseMatrix};
pub use sparse::{conjugate_gradient_solve, CgOptions, SparseMatrix};

pub(crate) use dense::{dot, log_sum_exp, softmax_in_place};
