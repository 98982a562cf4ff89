// Negated float comparisons are used to reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod extract;
pub mod interferometer;
pub mod io;
pub mod jones;
pub mod materials;
pub mod presets;
pub mod quadrature;
pub mod sample;
pub mod spdc;
