pub mod bounds;
pub mod cli;
pub mod dynamics;
pub mod hexfloat;
pub mod lattice;
pub mod potentials;
pub mod rng;
pub mod sampler;
pub mod stats;
