//! Dataset files: a JSON-Lines index plus a little-endian f32 CSI blob.
//!
//! Line 1 is a header `{"format", "version", "grid", "blob", "num_points",
//! "num_groups"}`. Each following line is a point record
//! `{"type": "point", tx_mac, timestamp_s, cfo_hz, snr_db, sniffer_id, flavor,
//! antennas, subcarriers, offset, length}` or, after all points, a group
//! record `{"type": "group", tx_mac, timestamp_s, complete, members}` whose
//! members index the point records. `offset`/`length` are byte ranges in the
//! blob holding `antennas x subcarriers` complex values as interleaved f32
//! (I then Q), antenna-major.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CombinedCsiDatapoint, CsiDatapoint};
use crate::estimate::Flavor;
use crate::grid::OfdmGrid;
use crate::mac_addr::MacAddr;
use crate::{Error, Result, C64};

pub const DATASET_FORMAT: &str = "csisniff-dataset";
pub const DATASET_VERSION: u32 = 1;

/// A combined datapoint as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub tx_mac: MacAddr,
    pub timestamp_s: f64,
    pub complete: bool,
    /// Indices into [`Dataset::points`].
    pub members: Vec<usize>,
}

/// Contents of one dataset file pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub grid: OfdmGrid,
    pub points: Vec<CsiDatapoint>,
    pub groups: Vec<GroupRecord>,
}

impl Dataset {
    pub fn new(grid: OfdmGrid) -> Dataset {
        Dataset { grid, points: Vec::new(), groups: Vec::new() }
    }

    /// Flattens combined datapoints; members are stored in sniffer order.
    pub fn from_combined(grid: OfdmGrid, combined: &[CombinedCsiDatapoint]) -> Dataset {
        let mut ds = Dataset::new(grid);
        for c in combined {
            let start = ds.points.len();
            ds.points.extend(c.members.values().cloned());
            ds.groups.push(GroupRecord {
                tx_mac: c.tx_mac,
                timestamp_s: c.timestamp_s,
                complete: c.complete,
                members: (start..ds.points.len()).collect(),
            });
        }
        ds
    }

    /// Rebuilds the combined datapoints named by the group records.
    pub fn combined(&self) -> Result<Vec<CombinedCsiDatapoint>> {
        self.groups
            .iter()
            .enumerate()
            .map(|(gi, g)| {
                let mut members = BTreeMap::new();
                for &i in &g.members {
                    let p = self.points.get(i).ok_or_else(|| corrupt(gi, format!("member {i} out of range")))?;
                    if members.insert(p.sniffer_id, p.clone()).is_some() {
                        return Err(corrupt(gi, format!("sniffer {} appears twice", p.sniffer_id)));
                    }
                }
                Ok(CombinedCsiDatapoint { tx_mac: g.tx_mac, timestamp_s: g.timestamp_s, members, complete: g.complete })
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    grid: OfdmGrid,
    blob: String,
    num_points: usize,
    num_groups: usize,
}

#[derive(Serialize, Deserialize)]
struct PointRecord {
    tx_mac: MacAddr,
    timestamp_s: f64,
    cfo_hz: f64,
    snr_db: Option<Vec<f64>>,
    sniffer_id: u32,
    flavor: Flavor,
    antennas: usize,
    subcarriers: usize,
    offset: u64,
    length: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Point(PointRecord),
    Group(GroupRecord),
}

/// Blob file next to an index file: `x.jsonl` -> `x.bin`.
pub fn blob_path(index: &Path) -> PathBuf {
    index.with_extension("bin")
}

/// Serializes a dataset to index text and blob bytes.
pub fn encode_dataset(ds: &Dataset, blob_name: &str) -> Result<(String, Vec<u8>)> {
    let mut blob = Vec::new();
    let header = Header {
        format: DATASET_FORMAT.into(),
        version: DATASET_VERSION,
        grid: ds.grid.clone(),
        blob: blob_name.into(),
        num_points: ds.points.len(),
        num_groups: ds.groups.len(),
    };
    let mut text = serde_json::to_string(&header)?;
    text.push('\n');
    for p in &ds.points {
        p.validate(ds.grid.num_used())?;
        let offset = blob.len() as u64;
        for v in p.csi.iter().flatten() {
            blob.extend_from_slice(&(v.re as f32).to_le_bytes());
            blob.extend_from_slice(&(v.im as f32).to_le_bytes());
        }
        let rec = Line::Point(PointRecord {
            tx_mac: p.tx_mac,
            timestamp_s: p.timestamp_s,
            cfo_hz: p.cfo_hz,
            snr_db: p.snr_db.clone(),
            sniffer_id: p.sniffer_id,
            flavor: p.flavor,
            antennas: p.csi.len(),
            subcarriers: ds.grid.num_used(),
            offset,
            length: blob.len() as u64 - offset,
        });
        text.push_str(&serde_json::to_string(&rec)?);
        text.push('\n');
    }
    for g in &ds.groups {
        if let Some(&m) = g.members.iter().find(|&&m| m >= ds.points.len()) {
            return Err(Error::DimensionMismatch(format!("group member {m} out of range")));
        }
        text.push_str(&serde_json::to_string(&Line::Group(g.clone()))?);
        text.push('\n');
    }
    Ok((text, blob))
}

fn corrupt(index: usize, reason: impl Into<String>) -> Error {
    Error::CorruptRecord { index, reason: reason.into() }
}

/// Parses index text and blob bytes. Record indices in errors count from 0
/// at the first line after the header.
pub fn decode_dataset(text: &str, blob: &[u8]) -> Result<Dataset> {
    let mut lines = text.lines();
    let header_line = lines.next().ok_or_else(|| Error::MalformedHeader("empty dataset".into()))?;
    let probe: serde_json::Value = serde_json::from_str(header_line).map_err(|e| Error::MalformedHeader(e.to_string()))?;
    if probe.get("format").and_then(|v| v.as_str()) != Some(DATASET_FORMAT) {
        return Err(Error::MalformedHeader("not a dataset index".into()));
    }
    let found = probe.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if found != DATASET_VERSION {
        return Err(Error::Version { found, expected: DATASET_VERSION });
    }
    let header: Header = serde_json::from_value(probe).map_err(|e| Error::MalformedHeader(e.to_string()))?;
    let mut ds = Dataset::new(header.grid);
    let n_used = ds.grid.num_used();
    let expected = header.num_points + header.num_groups;
    let mut index = 0;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let rec: Line = serde_json::from_str(line).map_err(|e| corrupt(index, e.to_string()))?;
        match rec {
            Line::Point(p) => {
                if !ds.groups.is_empty() {
                    return Err(corrupt(index, "point record after group records"));
                }
                if p.subcarriers != n_used || p.length != (p.antennas * n_used * 8) as u64 {
                    return Err(corrupt(index, "record dimensions disagree with the grid"));
                }
                let (a, b) = (p.offset as usize, (p.offset + p.length) as usize);
                let bytes = blob.get(a..b).ok_or_else(|| corrupt(index, format!("blob range {a}..{b} past end ({} bytes)", blob.len())))?;
                let values: Vec<C64> = bytes
                    .chunks_exact(8)
                    .map(|c| {
                        let re = f32::from_le_bytes(c[..4].try_into().expect("4 bytes"));
                        let im = f32::from_le_bytes(c[4..].try_into().expect("4 bytes"));
                        C64::new(re as f64, im as f64)
                    })
                    .collect();
                let dp = CsiDatapoint {
                    tx_mac: p.tx_mac,
                    timestamp_s: p.timestamp_s,
                    csi: values.chunks(n_used).map(<[C64]>::to_vec).collect(),
                    cfo_hz: p.cfo_hz,
                    snr_db: p.snr_db,
                    sniffer_id: p.sniffer_id,
                    flavor: p.flavor,
                };
                dp.validate(n_used).map_err(|e| corrupt(index, e.to_string()))?;
                ds.points.push(dp);
            }
            Line::Group(g) => {
                if g.members.iter().any(|&m| m >= header.num_points) {
                    return Err(corrupt(index, "group member out of range"));
                }
                ds.groups.push(g);
            }
        }
        index += 1;
    }
    if index != expected || ds.points.len() != header.num_points {
        return Err(corrupt(index, format!("expected {expected} records, found {index}")));
    }
    Ok(ds)
}

/// Writes `path` (index) and its blob.
pub fn write_dataset(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let blob = blob_path(path);
    let name = blob.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let (text, bytes) = encode_dataset(ds, &name)?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(text.as_bytes())?;
    w.flush()?;
    fs::write(blob, bytes)?;
    Ok(())
}

/// Reads an index file and the blob it names.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let first = text.lines().next().unwrap_or("");
    let blob_name = serde_json::from_str::<serde_json::Value>(first)
        .ok()
        .and_then(|v| v.get("blob").and_then(|b| b.as_str()).map(String::from));
    let blob = match blob_name {
        Some(n) => path.with_file_name(n),
        None => blob_path(path),
    };
    let bytes = fs::read(blob)?;
    decode_dataset(&text, &bytes)
}
