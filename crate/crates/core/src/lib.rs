pub mod bench;
pub mod calculus;
pub mod catalog;
pub mod constructor;
pub mod error;
pub mod measure;
pub mod network;
pub mod oracle;
pub mod problem;
pub mod rng;
pub mod sde;
pub mod shallow;
pub mod stats;
pub mod sweep;
