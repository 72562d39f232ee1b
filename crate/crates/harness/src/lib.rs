//! Load generator and semantics checker for anonroom servers.
//!
//! Each scenario drives a server purely through its HTTP API, records what
//! every client received, and checks the transcripts against a ledger of
//! acknowledged sends. Results come back as a [`Report`].

use std::time::Duration;

use thiserror::Error;

pub mod anonymity;
mod broadcast;
mod capacity;
pub mod client;
mod delivery;
mod durability;
mod privacy;
pub mod report;
pub mod transcript;

pub use broadcast::run_broadcast_check;
pub use capacity::run_capacity_check;
pub use client::Client;
pub use durability::{run_durability_check, scratch_dir as durability_scratch_dir};
pub use privacy::run_privacy_check;
pub use report::{Counters, Latency, Report};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("server unreachable: {0}")]
    ServerUnreachable(String),
    #[error("timed out: {0}")]
    Timeout(String),
    #[error("process control failed: {0}")]
    ProcessControlFailure(String),
    #[error("http {status} {code}: {detail}")]
    Api { status: u16, code: String, detail: String },
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl HarnessError {
    pub(crate) fn from_transport(e: reqwest::Error) -> Self {
        if e.is_connect() {
            HarnessError::ServerUnreachable(e.to_string())
        } else if e.is_timeout() {
            HarnessError::Timeout(e.to_string())
        } else {
            HarnessError::Protocol(e.to_string())
        }
    }

    pub fn status(&self) -> Option<u16> {
        match self {
            HarnessError::Api { status, .. } => Some(*status),
            _ => None,
        }
    }
}

/// Knobs shared by all scenarios.
#[derive(Debug, Clone)]
pub struct Options {
    pub clients: usize,
    pub messages: usize,
    pub duration: Duration,
    pub seed: u64,
    /// Long-poll wait once a client has nothing left to send.
    pub quiet_wait_ms: u64,
    /// Overall limit for reaching quiescence.
    pub deadline: Duration,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            clients: 3,
            messages: 1,
            duration: Duration::from_secs(60),
            seed: 42,
            quiet_wait_ms: 250,
            deadline: Duration::from_secs(300),
        }
    }
}
