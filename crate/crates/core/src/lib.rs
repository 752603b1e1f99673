//! Storage and query engine for graph-structured wiki data.
//!
//! The pipeline runs in three stages: [`dump`] parses MediaWiki SQL dumps and
//! hourly pagecount files into typed rows, [`redirect`] resolves redirect
//! chains and rewrites link endpoints, and [`graph`] builds an immutable
//! snapshot with compressed adjacency. [`timeseries`] stores thresholded
//! hourly viewership, [`query`] extracts subgraphs, [`update`] diffs and
//! freezes snapshots, and [`cli`] wires it all into a command-line tool.

pub mod cli;
pub mod dump;
pub mod graph;
pub mod query;
pub mod redirect;
pub mod timeseries;
pub mod types;
pub mod update;
mod util;
