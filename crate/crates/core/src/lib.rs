//! Adversarial domain adaptation on synthetic two-domain problems, with
//! per-checkpoint tracking of a transfer bound on the risk gap.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod bundle;
pub mod error;
pub mod matrix;
pub mod nn;
pub mod objectives;
pub mod par;
pub mod synth;
pub mod train;
pub mod transport;

pub use error::{Error, Result};
pub use matrix::Matrix;

/// Derives an independent stream seed from a base seed (splitmix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
