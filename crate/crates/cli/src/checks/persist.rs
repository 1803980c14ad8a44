//! Bit-exact round trips of datasets and checkpoints.

use std::collections::BTreeMap;

use csisniff_core::datastore::{decode_dataset, encode_dataset, CombinedCsiDatapoint, CsiDatapoint, Dataset};
use csisniff_core::estimate::Flavor;
use csisniff_core::grid::OfdmGrid;
use csisniff_core::{MacAddr, C64};
use csisniff_positioning::checkpoint::{decode_checkpoint, encode_checkpoint, Checkpoint};
use csisniff_positioning::features::FeatureLayout;
use csisniff_positioning::{Mlp, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Outcome;

/// Random f32-representable value, including signed zero and subnormals.
fn f32_value(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..20) {
        0 => -0.0,
        1 => f32::MIN_POSITIVE as f64 / 8.0,
        2 => f32::MAX as f64,
        _ => ((rng.random::<f32>() - 0.5) * 10f32.powi(rng.random_range(-6..6))).into(),
    }
}

fn random_point(rng: &mut ChaCha8Rng, grid: &OfdmGrid, sniffer: u32) -> CsiDatapoint {
    let antennas = rng.random_range(1..=4);
    CsiDatapoint {
        tx_mac: MacAddr(rng.random()),
        timestamp_s: rng.random::<f64>() * 1e9,
        csi: (0..antennas)
            .map(|_| (0..grid.num_used()).map(|_| C64::new(f32_value(rng), f32_value(rng))).collect())
            .collect(),
        cfo_hz: rng.random_range(-2e5..2e5),
        snr_db: if rng.random() { Some((0..antennas).map(|_| rng.random_range(-10.0..60.0)).collect()) } else { None },
        sniffer_id: sniffer,
        flavor: Flavor::ALL[rng.random_range(0..4)],
    }
}

fn dataset_roundtrip(records: usize, rng: &mut ChaCha8Rng) -> bool {
    let grid = OfdmGrid::non_ht();
    let mut groups = Vec::new();
    let mut n = 0;
    while n < records {
        let k = rng.random_range(1..=4).min(records - n);
        let members: BTreeMap<u32, CsiDatapoint> = (0..k as u32).map(|s| (s, random_point(rng, &grid, s))).collect();
        let first = members.values().next().expect("k >= 1");
        groups.push(CombinedCsiDatapoint {
            tx_mac: first.tx_mac,
            timestamp_s: first.timestamp_s,
            complete: k == 4,
            members,
        });
        n += k;
    }
    let ds = Dataset::from_combined(grid, &groups);
    let Ok((text, blob)) = encode_dataset(&ds, "x.bin") else { return false };
    match decode_dataset(&text, &blob) {
        Ok(back) => back == ds && back.combined().is_ok_and(|c| c == groups),
        Err(_) => false,
    }
}

fn checkpoint_roundtrip(records: usize, rng: &mut ChaCha8Rng) -> bool {
    (0..records).all(|_| {
        let depth = rng.random_range(2..6);
        let dims: Vec<usize> = (0..depth).map(|_| rng.random_range(1..9)).collect();
        let mut model = Mlp::init(&dims, rng).expect("positive widths");
        for l in &mut model.layers {
            l.b.mapv_inplace(|_| Some(f64::from_bits(rng.random())).filter(|v| v.is_finite()).unwrap_or(-0.0));
        }
        let config = TrainConfig {
            dims: dims.clone(),
            learning_rate: rng.random(),
            seed: rng.random(),
            ..Default::default()
        };
        let layout = rng.random::<bool>().then(|| FeatureLayout {
            sniffer_ids: (0..rng.random_range(1..5)).collect(),
            antennas: rng.random_range(1..5),
            subcarriers: 52,
        });
        let ck = Checkpoint { model, config, layout };
        let Ok(bytes) = encode_checkpoint(&ck) else { return false };
        decode_checkpoint(&bytes).is_ok_and(|back| {
            back.config == ck.config
                && back.layout == ck.layout
                && back.model.dims == ck.model.dims
                && back.model.flatten().iter().map(|v| v.to_bits()).eq(ck.model.flatten().iter().map(|v| v.to_bits()))
        })
    })
}

pub fn check(records: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ds = dataset_roundtrip(records, &mut rng);
    let ck = checkpoint_roundtrip(records, &mut rng);
    (ds && ck, format!("dataset {records} records lossless {ds}; checkpoint {records} records bit-exact {ck}"))
}
