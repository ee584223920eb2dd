//! Random-duality lower bounds for real phase retrieval, the parametric
//! manifolds they induce over (c, x), and the practical descent stack
//! (spectral init, barrier schedule, plain gradient, sign reshuffling).

pub mod algorithms;
pub mod experiments;
pub mod manifold;
pub mod numerics;
pub mod rdt;

pub use numerics::NumericsError;
