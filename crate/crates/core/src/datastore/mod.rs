//! CSI datapoints, MAC allowlisting, multi-sniffer merging and dataset files.

mod io;
mod merge;

use std::collections::HashSet;

use crate::decode::DecodedFrame;
use crate::estimate::{CsiEstimate, Flavor};
use crate::grid::OfdmGrid;
use crate::mac_addr::MacAddr;
use crate::{Error, Result, C64};

pub use io::{decode_dataset, encode_dataset, read_dataset, write_dataset, blob_path, Dataset, GroupRecord, DATASET_FORMAT, DATASET_VERSION};
pub use merge::{merge_indices, merge_streams, CombinedCsiDatapoint, MERGE_WINDOW_S};

/// One sniffer's CSI for one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct CsiDatapoint {
    pub tx_mac: MacAddr,
    pub timestamp_s: f64,
    /// `[antenna][omega]` over the used subcarriers.
    pub csi: Vec<Vec<C64>>,
    pub cfo_hz: f64,
    /// Per-antenna SNR; `None` when no noise floor was found.
    pub snr_db: Option<Vec<f64>>,
    pub sniffer_id: u32,
    pub flavor: Flavor,
}

impl CsiDatapoint {
    pub fn num_antennas(&self) -> usize {
        self.csi.len()
    }

    pub fn validate(&self, num_subcarriers: usize) -> Result<()> {
        if self.csi.iter().any(|r| r.len() != num_subcarriers) {
            return Err(Error::DimensionMismatch(format!("CSI rows must have {num_subcarriers} subcarriers")));
        }
        if let Some(s) = &self.snr_db {
            if s.len() != self.csi.len() {
                return Err(Error::DimensionMismatch(format!("{} SNR values for {} antennas", s.len(), self.csi.len())));
            }
        }
        if !self.csi.iter().flatten().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::DimensionMismatch("non-finite CSI".into()));
        }
        Ok(())
    }
}

/// Transmitters whose CSI may be stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Allowlist {
    /// Accept every transmitter (synthetic data).
    #[default]
    Disabled,
    Only(HashSet<MacAddr>),
}

impl Allowlist {
    pub fn permits(&self, mac: &MacAddr) -> bool {
        match self {
            Allowlist::Disabled => true,
            Allowlist::Only(set) => set.contains(mac),
        }
    }
}

/// Per-frame measurements that accompany an estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameMeta {
    pub timestamp_s: f64,
    pub cfo_hz: f64,
    pub snr_db: Option<Vec<f64>>,
    pub sniffer_id: u32,
}

/// Builds a datapoint from a decoded frame. Returns `Ok(None)` when the
/// transmitter is not on the allowlist.
pub fn assemble_datapoint(
    grid: &OfdmGrid,
    frame: &DecodedFrame,
    est: &CsiEstimate,
    meta: &FrameMeta,
    allowlist: &Allowlist,
) -> Result<Option<CsiDatapoint>> {
    if !frame.fcs_ok {
        return Err(Error::InvalidFlavor("frame failed its FCS".into()));
    }
    let tx_mac = frame.tx_mac.ok_or_else(|| Error::MalformedMac("no transmitter address".into()))?;
    if !allowlist.permits(&tx_mac) {
        return Ok(None);
    }
    if !grid.used.iter().all(|k| est.subcarriers.binary_search(k).is_ok()) {
        return Err(Error::DimensionMismatch("estimate does not cover the used subcarriers".into()));
    }
    let dp = CsiDatapoint {
        tx_mac,
        timestamp_s: meta.timestamp_s,
        csi: est.used(grid),
        cfo_hz: meta.cfo_hz,
        snr_db: meta.snr_db.clone(),
        sniffer_id: meta.sniffer_id,
        flavor: est.flavor,
    };
    dp.validate(grid.num_used())?;
    Ok(Some(dp))
}
