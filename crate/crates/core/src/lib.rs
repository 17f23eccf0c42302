//! Two-stage atomic-norm channel estimation for hybrid-RIS-aided mmWave
//! MIMO links.
//!
//! The crate is organized along the signal chain:
//!
//! - [`channel`]: array responses, path parameters, geometry and path loss,
//!   cascaded and effective channels.
//! - [`signal`]: training schedules (active elements, pilots, combiners,
//!   RIS phases) and the received signals at the RIS and the BS.
//! - [`anm`]: regularized atomic-norm denoising, solved by ADMM.
//! - [`recovery`]: root-MUSIC, least-squares gains, pairing and cascaded
//!   parameters.
//! - [`pipeline`]: the two estimation stages, RIS phase design, beamformers
//!   and spectral efficiency.
//! - [`harness`]: Monte Carlo sweeps, aggregation, CSV and SVG outputs.
//!
//! Runnable examples, one per capability:
//!
//! ```text
//! cargo run --release --example channel_synthesis
//! cargo run --release --example training_schedule
//! cargo run --release --example anm_denoising
//! cargo run --release --example root_music
//! cargo run --release --example two_stage_estimation
//! cargo run --release --example phase_design
//! cargo run --release --example power_sweep -- 20
//! cargo run --release --example calibrate_regularizer -- 20
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anm;
pub mod channel;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod pipeline;
pub mod recovery;
pub mod signal;

pub use error::{Error, Result};
