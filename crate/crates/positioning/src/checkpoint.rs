//! Model checkpoints: one JSON header line, a newline, then every parameter
//! as little-endian `f64` in [`Mlp::flatten`] order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::features::FeatureLayout;
use crate::mlp::Mlp;
use crate::train::TrainConfig;
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "csisniff-mlp";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub dims: Vec<usize>,
    pub seed: u64,
    pub num_params: usize,
    pub config: TrainConfig,
    #[serde(default)]
    pub layout: Option<FeatureLayout>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: Mlp,
    pub config: TrainConfig,
    pub layout: Option<FeatureLayout>,
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Result<Vec<u8>> {
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        dims: ck.model.dims.clone(),
        seed: ck.config.seed,
        num_params: ck.model.num_params(),
        config: ck.config.clone(),
        layout: ck.layout.clone(),
    };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    for v in ck.model.flatten() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Checkpoint("missing header line".into()))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[..nl])?;
    if header.format != CHECKPOINT_FORMAT {
        return Err(Error::Checkpoint(format!("unknown format {:?}", header.format)));
    }
    if header.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("version {} (expected {CHECKPOINT_VERSION})", header.version)));
    }
    let blob = &bytes[nl + 1..];
    if blob.len() != header.num_params * 8 {
        return Err(Error::Checkpoint(format!("{} blob bytes for {} parameters", blob.len(), header.num_params)));
    }
    let values: Vec<f64> =
        blob.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    let model = Mlp::from_flat(&header.dims, &values)?;
    Ok(Checkpoint { model, config: header.config, layout: header.layout })
}

pub fn write_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    fs::write(path, encode_checkpoint(ck)?)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Checkpoint {
        let config = TrainConfig { dims: vec![6, 5, 2], seed: 9, ..Default::default() };
        let model = Mlp::init(&config.dims, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        Checkpoint { model, config, layout: Some(FeatureLayout { sniffer_ids: vec![0], antennas: 2, subcarriers: 3 }) }
    }

    #[test]
    fn roundtrip_bit_exact() {
        let ck = sample();
        let back = decode_checkpoint(&encode_checkpoint(&ck).unwrap()).unwrap();
        assert_eq!(back, ck);
    }

    #[test]
    fn layout_of_bytes() {
        let ck = sample();
        let bytes = encode_checkpoint(&ck).unwrap();
        let nl = bytes.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(bytes.len() - nl - 1, ck.model.num_params() * 8);
        let first = f64::from_le_bytes(bytes[nl + 1..nl + 9].try_into().unwrap());
        assert_eq!(first, ck.model.layers[0].w[(0, 0)]);
    }

    #[test]
    fn rejects_truncation_and_version() {
        let bytes = encode_checkpoint(&sample()).unwrap();
        assert!(decode_checkpoint(&bytes[..bytes.len() - 1]).is_err());
        let s = String::from_utf8_lossy(&bytes).replace("\"version\":1", "\"version\":7");
        assert!(matches!(decode_checkpoint(s.as_bytes()), Err(Error::Checkpoint(_)) | Err(Error::Json(_))));
    }
}
