mod matrix;
mod scalar;

pub use matrix::ExactMatrix;
pub use scalar::{
    format_rational, parse_rational, rational_from_i64, rational_to_i64, ExactScalar, Rational,
};
