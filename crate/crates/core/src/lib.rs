//! Cross-technology interference lab for Wi-Fi 6.
//!
//! * [`signalgen`] synthesizes HE-LTF, LR-WPAN and BLE baseband signals and
//!   turns them into CSI snapshots.
//! * [`dataset`] builds labeled, int8-quantized CSI datasets over SNR x SIR grids.
//! * [`cnn`] is a small from-scratch CNN with Adam training.
//! * [`eval`] computes accuracy grids, per-technology confusion and RU localization.
//! * [`schedsim`] is a discrete-event simulator of SU, naive MU and CTI-aware MU
//!   downlink scheduling under LR-WPAN interference.

pub mod signalgen;
pub mod dataset;
pub mod cnn;
pub mod eval;
pub mod schedsim;
