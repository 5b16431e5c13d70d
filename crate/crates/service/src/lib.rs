//! Command-line front end and session service.
//!
//! Sessions let outside clients watch an episode as it runs and take the
//! place of the oracle (answering questions) or of the agent (choosing
//! actions). The HTTP layer lives in [`server`], the transport-free logic in
//! [`session`], and payload types in [`wire`].

pub mod cli;
pub mod server;
pub mod session;
pub mod wire;
