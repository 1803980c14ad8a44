use std::path::{Path, PathBuf};
use std::process::Command;

use csisniff_cli::commands::{cmd_eval, cmd_merge, cmd_rx, cmd_synth, cmd_train, Common};
use csisniff_cli::config::RunConfig;
use csisniff_cli::positions::{write_positions, PositionRecord};
use csisniff_cli::scenario::{CaptureScenario, FrameSpec, Scenario, SnifferSpec};
use csisniff_cli::CliError;
use csisniff_core::capture::load_iq_capture;
use csisniff_core::datastore::{read_dataset, write_dataset, CombinedCsiDatapoint, CsiDatapoint, Dataset};
use csisniff_core::estimate::Flavor;
use csisniff_core::grid::OfdmGrid;
use csisniff_core::{MacAddr, C64};
use csisniff_positioning::checkpoint::{write_checkpoint, Checkpoint};
use csisniff_positioning::features::FeatureLayout;
use csisniff_positioning::{Mlp, TrainConfig};
use tempfile::TempDir;

const TX: MacAddr = MacAddr([0x02, 0xaa, 0, 0, 0, 0x01]);

fn write_json(dir: &Path, name: &str, v: &impl serde::Serialize) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn capture_scenario(frames: usize, sniffers: usize, snr_db: f64) -> Scenario {
    Scenario::Capture(CaptureScenario {
        sniffers: (0..sniffers as u32).map(|id| SnifferSpec { id, antennas: 2 }).collect(),
        frames: (0..frames)
            .map(|i| FrameSpec {
                time_s: 1e-4 + i as f64 * 2e-4,
                rate_mbps: [6, 12, 24, 54][i % 4],
                tx_mac: TX,
                payload_len: 60,
                snr_db,
                cfo_hz: (i as f64 - 50.0) * 1e3,
                num_taps: 1 + i % 8,
                position: Some([i as f64 * 0.01, 1.0]),
                ..Default::default()
            })
            .collect(),
        seed: 3,
        ..Default::default()
    })
}

#[test]
fn synth_frame_and_sniffer_counts() {
    let dir = TempDir::new().unwrap();
    let sc = write_json(dir.path(), "s.json", &capture_scenario(1, 4, 25.0));
    let m = cmd_synth(&Common::default(), &sc, &dir.path().join("out")).unwrap();
    assert_eq!(m.details["frames"], 1);
    assert_eq!(m.details["captures"], 4);
    for id in 0..4 {
        assert!(dir.path().join(format!("out/sniffer_{id}.iq")).exists());
    }
    let gt: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/ground_truth.json")).unwrap()).unwrap();
    assert_eq!(gt.as_array().unwrap().len(), 1);
}

#[test]
fn synth_empty_scenario() {
    let dir = TempDir::new().unwrap();
    let sc = write_json(dir.path(), "s.json", &serde_json::json!({"kind": "capture"}));
    let m = cmd_synth(&Common::default(), &sc, &dir.path().join("out")).unwrap();
    assert_eq!(m.details["captures"], 0);
    assert_eq!(m.outputs.len(), 0);
}

fn rx(dir: &Path, captures: &[PathBuf], allow: Option<Vec<MacAddr>>, name: &str) -> csisniff_cli::manifest::RunManifest {
    let ids: Vec<u32> = (0..captures.len() as u32).collect();
    cmd_rx(&Common::default(), captures, &ids, Some(vec![Flavor::CpDenoised]), allow, &dir.join(name)).unwrap()
}

#[test]
fn rx_loopback_noise_and_allowlist() {
    let dir = TempDir::new().unwrap();
    let sc = write_json(dir.path(), "s.json", &capture_scenario(100, 1, 25.0));
    cmd_synth(&Common::default(), &sc, &dir.path().join("cap")).unwrap();
    let cap = vec![dir.path().join("cap/sniffer_0.iq")];

    let m = rx(dir.path(), &cap, None, "all.jsonl");
    assert_eq!(m.counters.decoded, 100);
    assert_eq!(m.counters.stored, 100);
    let ds = read_dataset(dir.path().join("all.jsonl")).unwrap();
    assert_eq!(ds.points.len(), 100);
    assert!(ds.points.iter().all(|p| p.tx_mac == TX && p.csi.len() == 2));

    let m = rx(dir.path(), &cap, Some(vec![MacAddr([2, 0, 0, 0, 0, 0x99])]), "none.jsonl");
    assert_eq!((m.counters.stored, m.counters.filtered), (0, 100));
    assert!(read_dataset(dir.path().join("none.jsonl")).unwrap().points.is_empty());

    let noise = write_json(
        dir.path(),
        "n.json",
        &serde_json::json!({"kind": "capture", "duration_s": 0.01, "sniffers": [{"id": 0, "antennas": 2}]}),
    );
    cmd_synth(&Common::default(), &noise, &dir.path().join("noise")).unwrap();
    let m = rx(dir.path(), &[dir.path().join("noise/sniffer_0.iq")], None, "noise.jsonl");
    assert_eq!(m.counters.decoded, 0);
    assert!(m.counters.decoded <= m.counters.detected);
}

#[test]
fn end_to_end_four_sniffers_merge() {
    let dir = TempDir::new().unwrap();
    let sc = write_json(dir.path(), "s.json", &capture_scenario(3, 4, 30.0));
    cmd_synth(&Common::default(), &sc, &dir.path().join("cap")).unwrap();
    let caps: Vec<PathBuf> = (0..4).map(|i| dir.path().join(format!("cap/sniffer_{i}.iq"))).collect();
    assert_eq!(load_iq_capture(&caps[0]).unwrap().num_antennas(), 2);
    let mut per = Vec::new();
    for (i, c) in caps.iter().enumerate() {
        let name = format!("s{i}.jsonl");
        let ids = [i as u32];
        cmd_rx(&Common::default(), std::slice::from_ref(c), &ids, None, None, &dir.path().join(&name)).unwrap();
        per.push(dir.path().join(name));
    }
    let m = cmd_merge(&Common::default(), &per, None, Some(Flavor::CpDenoised), &dir.path().join("merged.jsonl")).unwrap();
    assert_eq!(m.details["groups"], 3);
    assert_eq!(m.details["complete_groups"], 3);
    let groups = read_dataset(dir.path().join("merged.jsonl")).unwrap().combined().unwrap();
    assert!(groups.iter().all(|g| g.members.len() == 4 && g.members.values().all(|p| p.flavor == Flavor::CpDenoised)));
}

fn point(sniffer: u32, t: f64) -> CsiDatapoint {
    CsiDatapoint {
        tx_mac: TX,
        timestamp_s: t,
        csi: vec![vec![C64::new(1.0 + sniffer as f64, 0.5); 52]; 4],
        cfo_hz: 0.0,
        snr_db: None,
        sniffer_id: sniffer,
        flavor: Flavor::CpDenoised,
    }
}

fn single_point_dataset(dir: &Path, name: &str, p: CsiDatapoint) -> PathBuf {
    let mut ds = Dataset::new(OfdmGrid::non_ht());
    ds.points.push(p);
    let path = dir.join(name);
    write_dataset(&path, &ds).unwrap();
    path
}

#[test]
fn merge_aligned_and_zero_window() {
    let dir = TempDir::new().unwrap();
    let aligned: Vec<PathBuf> =
        (0..4).map(|s| single_point_dataset(dir.path(), &format!("a{s}.jsonl"), point(s, 1.0))).collect();
    let m = cmd_merge(&Common::default(), &aligned, None, None, &dir.path().join("m.jsonl")).unwrap();
    assert_eq!((m.details["groups"].as_u64(), m.details["complete_groups"].as_u64()), (Some(1), Some(1)));

    let staggered: Vec<PathBuf> = (0..4)
        .map(|s| single_point_dataset(dir.path(), &format!("b{s}.jsonl"), point(s, if s < 2 { 2.0 } else { 2.0 + 1e-3 })))
        .collect();
    let m = cmd_merge(&Common::default(), &staggered, Some(0.0), None, &dir.path().join("z.jsonl")).unwrap();
    assert_eq!(m.details["groups"], 2);
    assert_eq!(m.details["complete_groups"], 0);
}

fn toy_training_set(dir: &Path, n: usize) -> (PathBuf, PathBuf) {
    let mut groups = Vec::new();
    let mut recs = Vec::new();
    for i in 0..n {
        let t = i as f64;
        let pos = [(i % 5) as f64 * 0.5, (i / 5) as f64 * 0.5];
        let members = (0..4)
            .map(|s| {
                let mut p = point(s, t);
                // Magnitudes that depend on the position, like path loss.
                let d = ((pos[0] - s as f64).powi(2) + (pos[1] - 1.0).powi(2) + 1.0).sqrt();
                p.csi = vec![vec![C64::new(1.0 / d, 0.0); 52]; 4];
                (s, p)
            })
            .collect();
        groups.push(CombinedCsiDatapoint { tx_mac: TX, timestamp_s: t, members, complete: true });
        recs.push(PositionRecord { tx_mac: TX, timestamp_s: t, position: pos });
    }
    let ds = dir.join("toy.jsonl");
    write_dataset(&ds, &Dataset::from_combined(OfdmGrid::non_ht(), &groups)).unwrap();
    let pos = dir.join("toy_pos.json");
    write_positions(&pos, &recs).unwrap();
    (ds, pos)
}

fn small_net_common() -> Common {
    let mut config = RunConfig::default();
    config.train = TrainConfig { dims: vec![832, 32, 16, 2], epochs: 10, learning_rate: 1e-3, batch_size: 5, seed: 1, ..Default::default() };
    Common { config, ..Default::default() }
}

#[test]
fn train_decreases_loss_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (ds, pos) = toy_training_set(dir.path(), 10);
    let common = small_net_common();
    let m = cmd_train(&common, &ds, &pos, None, &dir.path().join("a.ckpt")).unwrap();
    let losses: Vec<f64> =
        m.details["history"].as_array().unwrap().iter().map(|e| e["train_loss"].as_f64().unwrap()).collect();
    assert_eq!(losses.len(), 10);
    assert!(losses.last().unwrap() < &losses[0], "{losses:?}");
    cmd_train(&common, &ds, &pos, None, &dir.path().join("b.ckpt")).unwrap();
    assert_eq!(std::fs::read(dir.path().join("a.ckpt")).unwrap(), std::fs::read(dir.path().join("b.ckpt")).unwrap());
}

#[test]
fn eval_of_exact_model_is_zero() {
    let dir = TempDir::new().unwrap();
    let (ds, _) = toy_training_set(dir.path(), 6);
    // Zero weights with bias (0.7, 1.3) predict that point everywhere.
    let mut model = Mlp::zeros(&[832, 4, 2]).unwrap();
    model.layers[1].b[0] = 0.7;
    model.layers[1].b[1] = 1.3;
    let ck = dir.path().join("c.ckpt");
    write_checkpoint(&ck, &Checkpoint { model, config: TrainConfig::default(), layout: Some(FeatureLayout::four_sniffers()) })
        .unwrap();
    let pos = dir.path().join("p.json");
    let recs: Vec<PositionRecord> =
        (0..6).map(|i| PositionRecord { tx_mac: TX, timestamp_s: i as f64, position: [0.7, 1.3] }).collect();
    write_positions(&pos, &recs).unwrap();
    let out = dir.path().join("metrics.json");
    cmd_eval(&Common::default(), &ck, &ds, &pos, Some(&pos), &out).unwrap();
    let metrics: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(metrics, serde_json::json!({"mean_m": 0.0, "p95_m": 0.0, "n_test": 6}));
}

#[test]
fn error_classes() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.iq");
    let e = cmd_rx(&Common::default(), &[missing], &[], None, None, &dir.path().join("o.jsonl")).unwrap_err();
    assert!(matches!(e, CliError::Data(_)), "{e:?}");
    let bad = write_json(dir.path(), "bad.json", &serde_json::json!({"kind": "capture", "frames": [{"num_taps": 99}]}));
    assert!(matches!(cmd_synth(&Common::default(), &bad, dir.path()), Err(CliError::Config(_))));
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_csisniff"))
}

#[test]
fn binary_exit_codes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_json(dir.path(), "cfg.json", &serde_json::json!({"no_such_key": 1}));
    let st = bin().args(["--config", cfg.to_str().unwrap(), "merge", "x.jsonl", "-o", "y.jsonl"]).status().unwrap();
    assert_eq!(st.code(), Some(2));
    let st = bin().current_dir(dir.path()).args(["merge", "absent.jsonl", "-o", "y.jsonl"]).status().unwrap();
    assert_eq!(st.code(), Some(3));
    let sc = write_json(dir.path(), "s.json", &capture_scenario(1, 1, 25.0));
    let st = bin().args(["--seed", "4", "synth", sc.to_str().unwrap(), "-o", dir.path().join("o").to_str().unwrap()]).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/synth.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 4);
}
