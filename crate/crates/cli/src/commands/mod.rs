pub mod classify;
pub mod evolution;
pub mod gen_sbm;
pub mod sandwich;
pub mod stability;
pub mod sweep;
pub mod tightness;
