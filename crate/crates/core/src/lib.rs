//! Bit-exact simulator of a multiplier-less CNN accelerator built on
//! offset-binary-coded distributed arithmetic.
//!
//! The crate models the arithmetic (bit slicing, OBC tables, shift-accumulate),
//! four structural table organizations with their adder/mux cost model, the
//! im2col address generator, the tiled multi-lane GEMM engine, a fixed-point
//! LeNet-5 variant, and the efficiency metrics used to compare FPGA designs.

pub mod cnn_model;
pub mod error;
pub mod fxp;
pub mod gemm_core;
pub mod im2col_addr;
pub mod lut_arch;
pub mod metrics;
pub mod obc_ipc;
pub mod tensor_io;
pub mod verify;

pub use error::{Error, Result};
