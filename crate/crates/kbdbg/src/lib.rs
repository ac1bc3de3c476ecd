//! Command-line tool and HTTP session service for interactive
//! knowledge-base debugging.

pub mod api;
pub mod cli;
pub mod store;
pub mod view;
