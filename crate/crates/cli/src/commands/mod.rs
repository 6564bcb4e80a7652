pub mod eval;
pub mod gains;
pub mod gap;
pub mod selftest;
pub mod synth;
