pub mod fit;
pub mod predict;
pub mod simulate;
pub mod spectrum;
pub mod sweep;
pub mod synth;
