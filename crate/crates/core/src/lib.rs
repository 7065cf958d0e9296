pub mod analysis;
pub mod error;
pub mod evolution;
pub mod oracle;
pub mod params;
pub mod rotation;
pub mod run;
pub mod scenario;
pub mod state;
pub mod verify;

pub use error::{Error, Result};
