pub mod cert;
pub mod cli;
pub mod dynamics;
pub mod families;
pub mod sets;
pub mod witness;
