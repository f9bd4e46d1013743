pub mod fields;
pub mod mesh;
pub mod operators;
pub mod reconstruct;
pub mod schemes;
pub mod diagnostics;
pub mod cases;
pub mod verify;
pub mod config;
pub mod io;
pub mod driver;
