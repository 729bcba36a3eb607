//! Solver-and-simulator toolkit for the multi-agent sequential public goods
//! game with a synergy-aligned reward.

pub mod error;
pub mod game;
pub mod solver;
pub mod theory;
pub mod analysis;
pub mod rl;
