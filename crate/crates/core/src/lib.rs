//! Numerical verification tools for fourth moments of Dirichlet L-functions:
//! characters and exponential sums, L-values, Laurent-series residues,
//! Voronoi summation, shifted convolution sums and moment quadrature.

pub mod arith;
pub mod chars;
pub mod error;
pub mod expsums;
pub mod lfunc;
pub mod mainterm;
pub mod moments;
pub mod numeric;
pub mod series;
pub mod shiftconv;
pub mod special;
pub mod voronoi;
pub mod weight;

pub use chars::Character;
pub use error::{Error, Result};
pub use num_complex::Complex64;
