//! File formats, LLM gateway, reports and the `focalize` command line.

pub mod gateway;
pub mod io;
pub mod lexicon;
pub mod cli;
pub mod config;
pub mod manifest;
pub mod report;
