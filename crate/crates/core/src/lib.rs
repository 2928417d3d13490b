//! Planning and simulation core for 802.11ax maritime mesh networks:
//! scenarios, geometry, link budgets, multi-hop routing, coverage grids,
//! buoy and battery dynamics, and a time-stepped simulator.

// `!(x > 0.0)` is how the validators reject NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod engine;
pub mod error;
pub mod geo;
pub mod mesh;
pub mod model;
pub mod radio;

pub use error::{Error, Result};
