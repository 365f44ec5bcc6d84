//! Independent reference pricers: Monte Carlo under the Markov-modulated
//! dynamics and Crank–Nicolson solvers for the reduced and European systems.

pub mod chain;
pub mod fd;
pub mod fd_european;
pub mod mc;
