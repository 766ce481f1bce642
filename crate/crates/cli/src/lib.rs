//! Library surface of the `posobs` binary: scenario file schema and the
//! subcommand implementations, exposed for integration testing.

pub mod commands;
pub mod scenario;
