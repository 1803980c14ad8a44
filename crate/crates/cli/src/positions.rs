//! Ground-truth positions: a JSON array of `{tx_mac, timestamp_s, position}`.

use std::path::Path;

use csisniff_core::datastore::CombinedCsiDatapoint;
use csisniff_core::MacAddr;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionRecord {
    pub tx_mac: MacAddr,
    pub timestamp_s: f64,
    pub position: [f64; 2],
}

pub fn read_positions(path: &Path) -> CliResult<Vec<PositionRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write_positions(path: &Path, records: &[PositionRecord]) -> CliResult<()> {
    let text = serde_json::to_string(records).map_err(CliError::internal)?;
    std::fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Position of each group: the same-transmitter record nearest in time,
/// if within `tolerance_s`.
pub fn match_positions(
    groups: &[CombinedCsiDatapoint],
    records: &[PositionRecord],
    tolerance_s: f64,
) -> Vec<Option<[f64; 2]>> {
    let mut sorted: Vec<&PositionRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.timestamp_s.total_cmp(&b.timestamp_s));
    groups
        .iter()
        .map(|g| {
            let i = sorted.partition_point(|r| r.timestamp_s < g.timestamp_s - tolerance_s);
            sorted[i..]
                .iter()
                .take_while(|r| r.timestamp_s <= g.timestamp_s + tolerance_s)
                .filter(|r| r.tx_mac == g.tx_mac)
                .min_by(|a, b| {
                    (a.timestamp_s - g.timestamp_s).abs().total_cmp(&(b.timestamp_s - g.timestamp_s).abs())
                })
                .map(|r| r.position)
        })
        .collect()
}
