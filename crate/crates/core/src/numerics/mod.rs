//! Shared numerical substrate: special functions, adaptive quadrature,
//! bracketed root finding, and numerical inversion of Laplace transforms and
//! characteristic functions.

pub mod laplace;
pub mod quadrature;
pub mod roots;
pub mod special;

pub use laplace::{invert_ccdf, ExponentialSum, InversionParams};
pub use quadrature::{integrate, QuadratureParams, SingularEndpoints};
pub use roots::{find_root, RootBracket};
pub use special::{
    beta_pdf, inverse_regularized_gamma, ln_beta, ln_gamma, regularized_gamma,
    regularized_gamma_pair,
};
