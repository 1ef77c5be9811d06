//! Numerical toolkit for general Dirichlet series `sum a_n e^{-lambda_n s}`:
//! evaluation with analytic continuation, Euler products, zero location,
//! and X-ray tracing of the pre-images of the real axis and unit circle.

pub mod arith;
pub mod character;
pub mod error;
pub mod evaluator;
pub mod format;
pub mod kv;
pub mod series;
pub mod special;
pub mod sum;
pub mod theorem_lab;
pub mod xray;
pub mod zeros;

pub use error::{Error, Result};
pub use evaluator::{reflection, FunctionHandle, HandleRegistry};
pub use num_complex::Complex64;
pub use series::SeriesSpec;
