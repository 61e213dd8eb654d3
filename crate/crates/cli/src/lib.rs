//! Command line and HTTP front ends over the crosstrace engine.

pub mod error;
pub mod registry;
pub mod repl;
pub mod server;
pub mod sessions;
pub mod text;

pub use error::ApiError;
pub use registry::{ProgramRecord, Registry};
pub use server::{router, AppState};
pub use sessions::Sessions;
