pub mod bench;
pub mod gradcheck;
pub mod synth;
pub mod train;
pub mod validate;
