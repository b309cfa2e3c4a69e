pub mod analysis;
pub mod channel;
pub mod constellation;
pub mod decoders;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod schemes;
pub mod stbc;

pub use error::{Error, Result};
