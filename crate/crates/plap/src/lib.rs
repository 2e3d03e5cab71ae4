//! Scenario files, task execution, artifact formats and the command line
//! around `plap-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod expr;
pub mod output;
pub mod scenario;
pub mod tasks;
