//! Command-line front end and `/v1/` HTTP session service for snakemorph.

pub mod commands;
pub mod server;
