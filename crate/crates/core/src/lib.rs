//! Time-based refinement of event labels in sensor event logs.
//!
//! Events whose clock times fall into distinct daily clusters get split into
//! one label per cluster. The clusters come from a von Mises mixture fitted
//! to the times of day, gated by circular uniformity and unimodality tests
//! and checked afterwards for goodness of fit and for control-flow
//! differences between the new labels.

pub mod circular;
pub mod event_log;
pub mod mixture;
pub mod process_model;
pub mod refinement;
pub mod rng;
