//! Software 802.11a non-HT receiver for passive channel-state information
//! (CSI) acquisition.
//!
//! The crate is organized along the receive chain:
//!
//! * [`grid`], [`capture`], [`resample`]: OFDM constants, IQ capture files and
//!   rational sample-rate conversion.
//! * [`synth`]: a bit-exact non-HT transmitter plus a multipath/CFO/AWGN
//!   channel. Every receiver test uses it as ground truth.
//! * [`sync`]: Schmidl-Cox detection, L-LTF timing, CFO estimation and
//!   compensation, FFT demodulation and pilot phase tracking.
//! * [`estimate`]: L-LTF least-squares CSI, CP-aware denoising, data-aided
//!   per-symbol estimates with energy-weighted combining, and SNR estimation.
//! * [`decode`]: MRC, format detection, L-SIG, Viterbi DATA decoding, FCS,
//!   MAC parsing and re-encoding of the decoded bits into constellation grids.
//! * [`receiver`]: the end-to-end pipeline producing [`datastore::CsiDatapoint`]s.
//! * [`datastore`]: datapoints, multi-sniffer merging and dataset files.

pub mod capture;
pub mod datastore;
pub mod decode;
mod error;
pub mod estimate;
pub mod grid;
pub mod mac_addr;
pub mod receiver;
pub mod resample;
pub mod sync;
pub mod synth;

pub use error::{Error, Result};
pub use grid::{build_grid, OfdmGrid, Profile};
pub use mac_addr::MacAddr;

/// Complex baseband sample type used throughout the crate.
pub type C64 = num_complex::Complex64;
