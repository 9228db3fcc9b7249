pub mod bounds;
pub mod cli;
pub mod coarse;
pub mod experiments;
pub mod fpp;
pub mod generators;
pub mod graph;
pub mod metric;
