pub mod approx;
pub mod conditional;
pub mod error;
pub mod kernel;
pub mod model;
pub mod numeric;
pub mod saddle;
pub mod signed;
pub mod simulate;
pub mod special;
pub mod spectral;
pub mod xdd;
