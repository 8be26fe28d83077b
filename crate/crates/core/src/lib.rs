//! Robust multi-item channel auctions for covert joint radar-communication
//! nodes: covert metrics under α-μ fading, bid uncertainty sets, a dense LP
//! kernel, the robust and deterministic mechanisms, and experiment sweeps.

pub mod auction;
pub mod channel;
pub mod covert;
pub mod error;
pub mod experiments;
pub mod lp;
pub mod matrix;
pub mod pso;
pub mod rng;
pub mod scenario;
pub mod uncertainty;

pub use error::{Error, Result};
pub use matrix::Matrix;
