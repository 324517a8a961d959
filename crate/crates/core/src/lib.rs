//! Decoding, simulation and fusion of ADS-C satellite surveillance reports
//! with ground-based ADS-B state vectors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod assembly;
pub mod atmosphere;
pub mod codec;
pub mod contract;
pub mod fuel;
pub mod geo;
pub mod trajectory;
