//! Bit-exact 802.11a non-HT transmitter and channel simulator.
//!
//! The encode chain is scramble -> convolutional encode -> puncture ->
//! interleave -> map -> pilot insertion -> IFFT + CP. Each stage has an exact
//! inverse used by [`crate::decode`].

pub mod channel;
pub mod convcode;
pub mod frame;
pub mod interleave;
pub mod mapping;
pub mod mcs;
pub mod scrambler;

pub use channel::{apply_channel, ChannelRealization, CaptureBuilder};
pub use convcode::{conv_encode, depuncture, puncture, CodeRate};
pub use frame::{build_nonht_frame, TxConfig, TxFrame};
pub use interleave::{deinterleave, interleave};
pub use mapping::{hard_demap, map_constellation, Modulation};
pub use mcs::Mcs;
pub use scrambler::scramble;
