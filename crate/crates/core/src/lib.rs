//! Link-level Monte-Carlo simulator for uplink mmWave cloud RAN.
//!
//! Remote radio heads (RRHs) equipped with lens antenna arrays select and
//! quantize a few beamspace streams under a fronthaul budget; a central unit
//! estimates the channels and applies MMSE receive beamforming. A uniform
//! planar array (UPA) with OFDM serves as the benchmark receive chain.

// `!(x > 0.0)` is used deliberately so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arrays;
pub mod channel;
pub mod harness;
pub mod lens_rx;
pub mod numerics;
pub mod quantizer;
pub mod rates;
pub mod upa_ofdm;
