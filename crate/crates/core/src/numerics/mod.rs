//! Numerical building blocks: quadrature, scalar minimization and stable
//! log-domain arithmetic.

pub mod optimize;
pub mod quadrature;
pub mod special;

pub use optimize::{golden_section, Minimum};
pub use quadrature::{
    integrate_adaptive, kronrod_nodes, AdaptiveOptions, AdaptiveResult, GaussHermite,
    GaussLegendre, GaussianRule,
};
