//! Route evaluation engine for retrosynthesis planners.
//!
//! Planner output is read through [`adapters`] into validated [`route::Route`]
//! values, checked against a [`stock::StockSet`], matched against expanded
//! ground truths ([`mgt`]) and summarised with bootstrap intervals
//! ([`stats`]).

pub mod adapters;
pub mod benchmark;
pub mod evaluation;
pub mod mgt;
pub mod provenance;
pub mod route;
pub mod stats;
pub mod stock;
pub mod synthetic;
