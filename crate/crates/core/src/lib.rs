// `!(x > 0.0)` guards deliberately reject NaN; index loops over paired matrices read clearer
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod series;
pub mod homological;
pub mod hamiltonian;
pub mod normalizer;
pub mod dynamics;
pub mod estimates;
pub mod cli;
pub mod config;
