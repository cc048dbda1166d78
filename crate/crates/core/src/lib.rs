//! Denial-of-Service simulation and detection for bacterial-nanonetwork DNA
//! archives.
//!
//! * [`sim`] simulates the archive read path under attack.
//! * [`info`] turns arrival traces into probability samples and scores them
//!   with generalized entropy and information distance.
//! * [`ml`] extracts features and trains and evaluates binary classifiers.
//! * [`harness`] runs the experiment sweeps and writes artifacts.

pub mod harness;
pub mod par;
pub mod info;
pub mod ml;
pub mod sim;
