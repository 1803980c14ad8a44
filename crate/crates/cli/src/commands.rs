//! Subcommand implementations. Each returns the manifest it wrote.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use csisniff_core::capture::load_iq_capture;
use csisniff_core::datastore::{
    assemble_datapoint, merge_streams, read_dataset, write_dataset, Allowlist, CombinedCsiDatapoint, CsiDatapoint,
    Dataset, FrameMeta,
};
use csisniff_core::estimate::Flavor;
use csisniff_core::grid::OfdmGrid;
use csisniff_core::receiver::{Counters, Receiver};
use csisniff_core::MacAddr;
use csisniff_positioning::baseline::geometric_median;
use csisniff_positioning::checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
use csisniff_positioning::eval::{constant_errors, evaluate, metrics_from_errors};
use csisniff_positioning::features::{preprocess, FeatureLayout};
use csisniff_positioning::train::{stack_rows, train};
use log::{info, warn};
use ndarray::Array2;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{manifest_path, RunManifest};
use crate::positions::{match_positions, read_positions};
use crate::scenario::{load_scenario, synth_captures, synth_geometry, Scenario};

/// Options shared by every command.
#[derive(Clone, Debug, Default)]
pub struct Common {
    pub config: RunConfig,
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl Common {
    fn manifest(&self, command: &str) -> RunManifest {
        let mut m = RunManifest::new(command);
        m.config_path = self.config_path.clone();
        m.config = serde_json::to_value(&self.config).unwrap_or_default();
        m.seed = self.seed;
        m
    }
}

fn finish(mut m: RunManifest, started: Instant, path: &Path) -> CliResult<RunManifest> {
    m.elapsed_s = started.elapsed().as_secs_f64();
    m.write(path)?;
    Ok(m)
}

pub fn cmd_synth(common: &Common, scenario_path: &Path, out_dir: &Path) -> CliResult<RunManifest> {
    let started = Instant::now();
    let mut m = common.manifest("synth");
    m.inputs.push(scenario_path.to_path_buf());
    let out = match load_scenario(scenario_path)? {
        Scenario::Capture(mut sc) => {
            if let Some(s) = common.seed {
                sc.seed = s;
            }
            m.seed = Some(sc.seed);
            synth_captures(&sc, out_dir)?
        }
        Scenario::Geometry(mut sc) => {
            if let Some(s) = common.seed {
                sc.geometry.seed = s;
            }
            m.seed = Some(sc.geometry.seed);
            synth_geometry(&sc, out_dir)?
        }
    };
    info!("synth: {} files", out.files.len());
    m.outputs = out.files;
    m.details = json!({
        "captures": out.captures,
        "frames": out.ground_truth.len(),
        "combined_datapoints": out.datapoints,
    });
    std::fs::create_dir_all(out_dir).map_err(CliError::data)?;
    finish(m, started, &out_dir.join("synth.manifest.json"))
}

/// Per-capture result of the receive chain.
struct RxResult {
    counters: Counters,
    filtered: u64,
    stored: u64,
    points: Vec<CsiDatapoint>,
}

fn rx_one(rx: &Receiver, path: &Path, sniffer_id: u32, allow: &Allowlist) -> CliResult<RxResult> {
    let cap = load_iq_capture(path).map_err(|e| CliError::from(e).at(path))?;
    let (frames, counters) = rx.process_capture(&cap)?;
    let mut res = RxResult { counters, filtered: 0, stored: 0, points: Vec::new() };
    for pf in &frames {
        let Some(mac) = pf.frame.tx_mac else { continue };
        if !allow.permits(&mac) {
            res.filtered += 1;
            continue;
        }
        let meta = FrameMeta { timestamp_s: pf.timestamp, cfo_hz: pf.detection.cfo_hz, snr_db: pf.snr_db.clone(), sniffer_id };
        for est in &pf.estimates {
            if let Some(dp) = assemble_datapoint(&rx.grid, &pf.frame, est, &meta, allow)? {
                res.points.push(dp);
            }
        }
        res.stored += 1;
    }
    Ok(res)
}

/// Runs the receiver on each capture (one worker thread per capture) and
/// writes all datapoints to one dataset.
pub fn cmd_rx(
    common: &Common,
    captures: &[PathBuf],
    sniffer_ids: &[u32],
    flavors: Option<Vec<Flavor>>,
    allow: Option<Vec<MacAddr>>,
    out: &Path,
) -> CliResult<RunManifest> {
    let started = Instant::now();
    if captures.is_empty() {
        return Err(CliError::Config("no capture given".into()));
    }
    let ids: Vec<u32> = match sniffer_ids.len() {
        0 => (0..captures.len() as u32).collect(),
        n if n == captures.len() => sniffer_ids.to_vec(),
        n => return Err(CliError::Config(format!("{n} sniffer ids for {} captures", captures.len()))),
    };
    if ids.iter().collect::<HashSet<_>>().len() != ids.len() {
        return Err(CliError::Config("sniffer ids must be distinct".into()));
    }
    let mut cfg = common.config.clone();
    if let Some(f) = flavors {
        cfg.receiver.flavors = f;
    }
    if allow.is_some() {
        cfg.allowlist = allow;
    }
    cfg.validate()?;
    let allowlist = match &cfg.allowlist {
        None => Allowlist::Disabled,
        Some(v) => Allowlist::Only(v.iter().copied().collect()),
    };
    let rx = Receiver::new(cfg.receiver.clone())?;
    let results: Vec<CliResult<RxResult>> = std::thread::scope(|s| {
        let handles: Vec<_> = captures
            .iter()
            .zip(&ids)
            .map(|(p, &id)| {
                let (rx, allowlist) = (&rx, &allowlist);
                s.spawn(move || rx_one(rx, p, id, allowlist))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::Internal("receiver worker panicked".into()))))
            .collect()
    });
    let mut m = common.manifest("rx");
    m.config = serde_json::to_value(&cfg).unwrap_or_default();
    m.inputs = captures.to_vec();
    let mut ds = Dataset::new(rx.grid.clone());
    let mut per_capture = Vec::new();
    for (r, p) in results.into_iter().zip(captures) {
        let r = r?;
        info!("{}: detected {} decoded {} stored {}", p.display(), r.counters.detected, r.counters.decoded, r.stored);
        m.counters.detected += r.counters.detected;
        m.counters.decoded += r.counters.decoded;
        m.counters.filtered += r.filtered;
        m.counters.stored += r.stored;
        per_capture.push(json!({"capture": p, "receiver": r.counters, "filtered": r.filtered, "stored": r.stored}));
        ds.points.extend(r.points);
    }
    m.details = json!({"captures": per_capture, "datapoints": ds.points.len()});
    write_dataset(out, &ds).map_err(|e| CliError::from(e).at(out))?;
    m.outputs = vec![out.to_path_buf(), out.with_extension("bin")];
    finish(m, started, &manifest_path(out))
}

/// Per-sniffer, time-sorted streams of one flavor.
pub fn streams_by_sniffer(points: &[CsiDatapoint], flavor: Flavor) -> Vec<Vec<CsiDatapoint>> {
    let mut by: BTreeMap<u32, Vec<CsiDatapoint>> = BTreeMap::new();
    for p in points.iter().filter(|p| p.flavor == flavor) {
        by.entry(p.sniffer_id).or_default().push(p.clone());
    }
    by.into_values()
        .map(|mut v| {
            v.sort_by(|a, b| a.timestamp_s.total_cmp(&b.timestamp_s));
            v
        })
        .collect()
}

pub fn cmd_merge(
    common: &Common,
    inputs: &[PathBuf],
    window_s: Option<f64>,
    flavor: Option<Flavor>,
    out: &Path,
) -> CliResult<RunManifest> {
    let started = Instant::now();
    let mut cfg = common.config.clone();
    if let Some(w) = window_s {
        cfg.merge_window_s = w;
    }
    if let Some(f) = flavor {
        cfg.flavor = f;
    }
    cfg.validate()?;
    let mut grid: Option<OfdmGrid> = None;
    let mut points = Vec::new();
    for p in inputs {
        let ds = read_dataset(p).map_err(|e| CliError::from(e).at(p))?;
        if grid.as_ref().is_some_and(|g| *g != ds.grid) {
            return Err(CliError::Data(format!("{}: grid differs from the other inputs", p.display())));
        }
        grid.get_or_insert(ds.grid);
        points.extend(ds.points);
    }
    let grid = grid.unwrap_or_else(OfdmGrid::non_ht);
    let streams = streams_by_sniffer(&points, cfg.flavor);
    let combined = merge_streams(&streams, cfg.merge_window_s)?;
    let complete = combined.iter().filter(|c| c.complete).count();
    write_dataset(out, &Dataset::from_combined(grid, &combined))?;
    let mut m = common.manifest("merge");
    m.config = serde_json::to_value(&cfg).unwrap_or_default();
    m.inputs = inputs.to_vec();
    m.outputs = vec![out.to_path_buf(), out.with_extension("bin")];
    m.counters.stored = combined.len() as u64;
    m.details = json!({
        "streams": streams.len(),
        "points": streams.iter().map(Vec::len).sum::<usize>(),
        "groups": combined.len(),
        "complete_groups": complete,
    });
    finish(m, started, &manifest_path(out))
}

/// Features and positions of the usable groups, plus skip counts.
struct Labeled {
    x: Array2<f64>,
    y: Array2<f64>,
    incomplete: usize,
    unlabeled: usize,
}

fn labeled_set(
    groups: &[CombinedCsiDatapoint],
    positions_path: &Path,
    layout: &FeatureLayout,
    tolerance_s: f64,
) -> CliResult<Labeled> {
    let records = read_positions(positions_path)?;
    let pos = match_positions(groups, &records, tolerance_s);
    let (mut feats, mut ys, mut incomplete, mut unlabeled) = (Vec::new(), Vec::new(), 0, 0);
    for (g, p) in groups.iter().zip(pos) {
        let Some(p) = p else {
            unlabeled += 1;
            continue;
        };
        match preprocess(g, layout) {
            Ok(f) => {
                feats.push(f);
                ys.push(p);
            }
            Err(csisniff_positioning::Error::Incomplete(_)) => incomplete += 1,
            Err(e) => return Err(e.into()),
        }
    }
    if feats.is_empty() {
        return Err(CliError::Data("no complete, labeled combined datapoints".into()));
    }
    let x = stack_rows(&feats)?;
    let y = Array2::from_shape_fn((ys.len(), 2), |(i, j)| ys[i][j]);
    Ok(Labeled { x, y, incomplete, unlabeled })
}

fn read_groups(path: &Path) -> CliResult<Vec<CombinedCsiDatapoint>> {
    let ds = read_dataset(path).map_err(|e| CliError::from(e).at(path))?;
    ds.combined().map_err(|e| CliError::from(e).at(path))
}

pub fn cmd_train(
    common: &Common,
    dataset: &Path,
    positions: &Path,
    epochs: Option<usize>,
    out: &Path,
) -> CliResult<RunManifest> {
    let started = Instant::now();
    let mut cfg = common.config.clone();
    if let Some(s) = common.seed {
        cfg.train.seed = s;
    }
    if let Some(e) = epochs {
        cfg.train.epochs = e;
    }
    cfg.validate()?;
    if cfg.train.dims.first() != Some(&cfg.layout.len()) {
        return Err(CliError::Config(format!(
            "network input width {:?} does not match the feature length {}",
            cfg.train.dims.first(),
            cfg.layout.len()
        )));
    }
    let groups = read_groups(dataset)?;
    let set = labeled_set(&groups, positions, &cfg.layout, cfg.position_tolerance_s)?;
    if set.incomplete > 0 || set.unlabeled > 0 {
        warn!("skipped {} incomplete and {} unlabeled groups", set.incomplete, set.unlabeled);
    }
    let (model, history) = train(set.x.view(), set.y.view(), &cfg.train)?;
    write_checkpoint(out, &Checkpoint { model, config: cfg.train.clone(), layout: Some(cfg.layout.clone()) })?;
    let mut m = common.manifest("train");
    m.seed = Some(cfg.train.seed);
    m.config = serde_json::to_value(&cfg).unwrap_or_default();
    m.inputs = vec![dataset.to_path_buf(), positions.to_path_buf()];
    m.outputs = vec![out.to_path_buf()];
    m.details = json!({
        "n_train": set.x.nrows(),
        "skipped_incomplete": set.incomplete,
        "skipped_unlabeled": set.unlabeled,
        "history": history,
    });
    finish(m, started, &manifest_path(out))
}

pub fn cmd_eval(
    common: &Common,
    model_path: &Path,
    dataset: &Path,
    positions: &Path,
    baseline_positions: Option<&Path>,
    out: &Path,
) -> CliResult<RunManifest> {
    let started = Instant::now();
    let ck = read_checkpoint(model_path).map_err(|e| CliError::from(e).at(model_path))?;
    let layout = ck.layout.clone().unwrap_or_else(|| common.config.layout.clone());
    let groups = read_groups(dataset)?;
    let set = labeled_set(&groups, positions, &layout, common.config.position_tolerance_s)?;
    let ev = evaluate(&ck.model, set.x.view(), set.y.view())?;
    std::fs::write(out, serde_json::to_string_pretty(&ev.metrics).map_err(CliError::internal)? + "\n")
        .map_err(CliError::data)?;
    let baseline = match baseline_positions {
        None => None,
        Some(p) => {
            let pts: Vec<[f64; 2]> = read_positions(p)?.into_iter().map(|r| r.position).collect();
            if pts.is_empty() {
                return Err(CliError::Data(format!("{}: no positions", p.display())));
            }
            let gm = geometric_median(&pts);
            Some(json!({"position": gm, "metrics": metrics_from_errors(&constant_errors(gm, set.y.view()))?}))
        }
    };
    let mut m = common.manifest("eval");
    m.inputs = vec![model_path.to_path_buf(), dataset.to_path_buf(), positions.to_path_buf()];
    m.inputs.extend(baseline_positions.map(Path::to_path_buf));
    m.outputs = vec![out.to_path_buf()];
    m.details = json!({
        "metrics": ev.metrics,
        "baseline": baseline,
        "skipped_incomplete": set.incomplete,
        "skipped_unlabeled": set.unlabeled,
    });
    finish(m, started, &manifest_path(out))
}
