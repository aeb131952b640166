//! Core library for simulating follower-network growth coupled with message
//! diffusion, and for inferring the link-creation strategies behind an event
//! log.
//!
//! The crate is organized around a single interchange value, [`LinkContext`]:
//! one snapshot per follow event, taken from the network state immediately
//! before the follow is applied. Everything downstream — null-model z-scores,
//! log-likelihood fits, per-user strategy clustering — consumes those
//! snapshots and nothing else.
//!
//! Modules:
//! - [`event`]: event types, the tab-separated log format, validation.
//! - [`replay`]: incremental network/cascade state and context extraction.
//! - [`generator`]: synthetic logs under a known strategy mixture.
//! - [`nullstats`]: null probabilities, z-scores, rank-percentile bias.
//! - [`likelihood`]: per-link strategy likelihoods and grid maximization.
//! - [`classes`]: per-user fits, EM clustering, class feature profiles.
//!
//! The crate is `no_std` + `alloc`; all I/O lives in the companion CLI crate.
//! Every random choice flows from an explicit seed through [`rng::Rng`], so
//! identical inputs produce byte-identical outputs on any platform.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod classes;
pub mod event;
pub mod generator;
pub mod likelihood;
pub mod math;
pub mod nullstats;
pub mod replay;
pub mod rng;

pub use event::{Event, EventKind, MessageId, UserId};
