//! Many-server queue laboratory: exact event simulation of G/GI/n queues,
//! their fluid limits, their Gaussian diffusion limits, and a Monte Carlo
//! harness comparing the three.

pub mod measures;
pub mod fluid;
pub mod gaussian;
pub mod harness;
pub mod simulator;
