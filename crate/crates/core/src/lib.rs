//! Constrained multi-objective evolutionary search over crystal structures.
//!
//! Generators propose candidate crystals, an oracle assigns properties, a
//! scorer routes candidates into per-island success and failure memories,
//! and the metrics module summarizes a campaign.

pub mod chem;
pub mod crystal;
pub mod property;
pub mod tasks;
pub mod oracle;

mod http;
pub mod generate;
pub mod record;
pub mod metrics;
pub mod evolve;
pub mod report;
