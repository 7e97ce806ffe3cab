//! Samplers for the Petersburg game variants and for the discounted-gain
//! limit variable `U`.

pub mod discount;
pub mod game;
pub mod levy;
