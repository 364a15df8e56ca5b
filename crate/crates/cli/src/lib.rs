//! Command-line front end: descriptor files, complex literals, and the
//! `eval`, `transform`, `verify` and `classify` commands.

pub mod app;
pub mod complex;
pub mod descriptor;
pub mod suites;

pub use app::run;
