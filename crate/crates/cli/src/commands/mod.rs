pub mod augment;
pub mod fractals;
pub mod overhead;
pub mod preview;
pub mod validate;
