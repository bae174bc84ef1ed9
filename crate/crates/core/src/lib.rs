//! Offline multi-object tracker built on two min-cost flow passes per
//! temporal window and hierarchical tracklet association across windows.

pub mod assign;
pub mod assoc;
pub mod cli;
pub mod error;
pub mod flow;
pub mod graphgen;
pub mod io;
pub mod mask;
pub mod metrics;
pub mod model;
pub mod pipeline;

pub use error::{Error, Result};
