//! Synthesis scenarios.
//!
//! `{"kind": "capture", ...}` renders frames through random multipath onto
//! one capture per virtual sniffer. `{"kind": "geometry", ...}` produces a
//! combined CSI dataset of the line-of-sight room model directly.

use std::path::{Path, PathBuf};

use csisniff_core::capture::{write_iq_capture, IqCapture, DEFAULT_BLOCK_LEN};
use csisniff_core::datastore::{write_dataset, Dataset};
use csisniff_core::decode::build_data_mpdu;
use csisniff_core::grid::OfdmGrid;
use csisniff_core::resample::resample;
use csisniff_core::synth::channel::{random_taps, CaptureBuilder, MAX_TAPS};
use csisniff_core::synth::frame::{build_nonht_frame, TxConfig};
use csisniff_core::synth::Mcs;
use csisniff_core::MacAddr;
use csisniff_positioning::geometry::{generate, random_split, GeometryConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::positions::{write_positions, PositionRecord};

/// Baseband rate of the synthesized waveform.
pub const SYNTH_RATE_HZ: f64 = 20e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    Capture(CaptureScenario),
    Geometry(GeometryScenario),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnifferSpec {
    pub id: u32,
    #[serde(default = "default_antennas")]
    pub antennas: usize,
}

fn default_antennas() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameSpec {
    /// Start of the frame relative to the capture start.
    pub time_s: f64,
    pub rate_mbps: u32,
    pub tx_mac: MacAddr,
    pub dst_mac: MacAddr,
    /// MAC payload octets after the 24-octet header.
    pub payload_len: usize,
    /// Per-sample SNR at every sniffer.
    pub snr_db: f64,
    pub cfo_hz: f64,
    /// Channel length; taps are drawn independently per sniffer and antenna.
    pub num_taps: usize,
    pub scrambler_seed: Option<u8>,
    pub position: Option<[f64; 2]>,
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec {
            time_s: 0.0,
            rate_mbps: 6,
            tx_mac: MacAddr([0x02, 0, 0, 0, 0, 0x01]),
            dst_mac: MacAddr::BROADCAST,
            payload_len: 100,
            snr_db: 25.0,
            cfo_hz: 0.0,
            num_taps: 1,
            scrambler_seed: None,
            position: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaptureScenario {
    pub sample_rate_hz: f64,
    pub center_freq_hz: f64,
    pub start_time_s: f64,
    pub noise_std: f64,
    /// Capture length; defaults to the end of the last frame plus `tail_s`.
    pub duration_s: Option<f64>,
    pub tail_s: f64,
    pub tap_decay: f64,
    pub seed: u64,
    pub sniffers: Vec<SnifferSpec>,
    pub frames: Vec<FrameSpec>,
}

impl Default for CaptureScenario {
    fn default() -> Self {
        CaptureScenario {
            sample_rate_hz: SYNTH_RATE_HZ,
            center_freq_hz: 5.18e9,
            start_time_s: 0.0,
            noise_std: 0.01,
            duration_s: None,
            tail_s: 1e-4,
            tap_decay: 4.0,
            seed: 0,
            sniffers: Vec::new(),
            frames: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometryScenario {
    #[serde(flatten)]
    pub geometry: GeometryConfig,
    pub test_fraction: f64,
}

impl Default for GeometryScenario {
    fn default() -> Self {
        GeometryScenario { geometry: GeometryConfig::default(), test_fraction: 0.2 }
    }
}

/// One synthesized frame as written to `ground_truth.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthFrame {
    pub index: usize,
    pub time_s: f64,
    pub start_sample: usize,
    pub tx_mac: MacAddr,
    pub dst_mac: MacAddr,
    pub rate_mbps: u32,
    pub psdu_len: usize,
    pub scrambler_seed: u8,
    pub cfo_hz: f64,
    pub snr_db: f64,
    pub num_taps: usize,
    pub position: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SynthOutput {
    pub files: Vec<PathBuf>,
    pub ground_truth: Vec<GroundTruthFrame>,
    pub captures: usize,
    pub datapoints: usize,
}

pub fn load_scenario(path: &Path) -> CliResult<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn validate(sc: &CaptureScenario) -> CliResult<()> {
    let bad = |m: String| Err(CliError::Config(m));
    if !(sc.sample_rate_hz > 0.0) || !(sc.noise_std >= 0.0) || !(sc.tail_s >= 0.0) {
        return bad("sample_rate_hz must be positive, noise_std and tail_s non-negative".into());
    }
    let mut ids: Vec<u32> = sc.sniffers.iter().map(|s| s.id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return bad("sniffer ids must be distinct".into());
    }
    if sc.sniffers.iter().any(|s| s.antennas == 0) {
        return bad("every sniffer needs at least one antenna".into());
    }
    for (i, f) in sc.frames.iter().enumerate() {
        if !(f.time_s >= 0.0) || f.num_taps == 0 || f.num_taps > MAX_TAPS || !f.snr_db.is_finite() {
            return bad(format!("frame {i}: time_s >= 0, 1 <= num_taps <= {MAX_TAPS} and finite snr_db required"));
        }
    }
    Ok(())
}

/// Renders a capture scenario into `out_dir`.
pub fn synth_captures(sc: &CaptureScenario, out_dir: &Path) -> CliResult<SynthOutput> {
    validate(sc)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let fs = SYNTH_RATE_HZ;
    let mut frames = Vec::with_capacity(sc.frames.len());
    let mut truth = Vec::with_capacity(sc.frames.len());
    for (i, f) in sc.frames.iter().enumerate() {
        let mcs = Mcs::from_rate_mbps(f.rate_mbps).map_err(|e| CliError::Config(format!("frame {i}: {e}")))?;
        let payload: Vec<u8> = (0..f.payload_len).map(|_| rng.random()).collect();
        let psdu = build_data_mpdu(f.tx_mac, f.dst_mac, f.tx_mac, (i % 4096) as u16, &payload);
        let seed = f.scrambler_seed.unwrap_or_else(|| rng.random_range(1..128));
        let tx = build_nonht_frame(&TxConfig { mcs, psdu, scrambler_init: seed })
            .map_err(|e| CliError::Config(format!("frame {i}: {e}")))?;
        let start = (f.time_s * fs).round() as usize;
        truth.push(GroundTruthFrame {
            index: i,
            time_s: sc.start_time_s + start as f64 / fs,
            start_sample: start,
            tx_mac: f.tx_mac,
            dst_mac: f.dst_mac,
            rate_mbps: f.rate_mbps,
            psdu_len: tx.config.psdu.len(),
            scrambler_seed: seed,
            cfo_hz: f.cfo_hz,
            snr_db: f.snr_db,
            num_taps: f.num_taps,
            position: f.position,
        });
        frames.push((start, tx));
    }
    let frames_end = frames.iter().map(|(s, tx)| s + tx.len() + MAX_TAPS).max().unwrap_or(0);
    let len = match sc.duration_s {
        Some(d) => (d * fs).round() as usize,
        None => frames_end + (sc.tail_s * fs).round() as usize,
    };
    if len < frames_end && !frames.is_empty() {
        return Err(CliError::Config(format!("duration_s too short for the frames ({frames_end} samples needed)")));
    }
    std::fs::create_dir_all(out_dir).map_err(CliError::data)?;
    let mut out = SynthOutput::default();
    for sn in &sc.sniffers {
        let mut b = CaptureBuilder::new(sn.antennas, len, fs, sc.noise_std);
        for ((start, tx), f) in frames.iter().zip(&sc.frames) {
            let taps: Vec<_> = (0..sn.antennas).map(|_| random_taps(f.num_taps, sc.tap_decay, &mut rng)).collect();
            let gain = if sc.noise_std > 0.0 { sc.noise_std * 10f64.powf(f.snr_db / 20.0) } else { 1.0 };
            b.add_frame(&tx.baseband, &taps, f.cfo_hz, gain, *start)?;
        }
        let mut cap: IqCapture = b.build(&mut rng, sc.center_freq_hz, sc.start_time_s)?;
        if (sc.sample_rate_hz - fs).abs() > 1e-6 {
            cap = resample(&cap, sc.sample_rate_hz)?;
        }
        let path = out_dir.join(format!("sniffer_{}.iq", sn.id));
        write_iq_capture(&cap, &path, DEFAULT_BLOCK_LEN)?;
        out.files.push(path);
        out.captures += 1;
    }
    if !sc.frames.is_empty() {
        let gt = out_dir.join("ground_truth.json");
        std::fs::write(&gt, serde_json::to_string_pretty(&truth).map_err(CliError::internal)?).map_err(CliError::data)?;
        out.files.push(gt);
        let positions: Vec<PositionRecord> = truth
            .iter()
            .filter_map(|t| t.position.map(|p| PositionRecord { tx_mac: t.tx_mac, timestamp_s: t.time_s, position: p }))
            .collect();
        if !positions.is_empty() {
            let p = out_dir.join("positions.json");
            write_positions(&p, &positions)?;
            out.files.push(p);
        }
    }
    out.ground_truth = truth;
    Ok(out)
}

/// Writes `train`/`test` combined datasets and their position files.
pub fn synth_geometry(sc: &GeometryScenario, out_dir: &Path) -> CliResult<SynthOutput> {
    if !(0.0..=1.0).contains(&sc.test_fraction) {
        return Err(CliError::Config("test_fraction must lie in [0, 1]".into()));
    }
    let grid = OfdmGrid::non_ht();
    let set = generate(&grid, &sc.geometry)?;
    let (train, test) = random_split(set.datapoints.len(), sc.test_fraction, sc.geometry.seed.wrapping_add(1));
    std::fs::create_dir_all(out_dir).map_err(CliError::data)?;
    let mut out = SynthOutput { datapoints: set.datapoints.len(), ..Default::default() };
    for (name, idx) in [("train", &train), ("test", &test)] {
        let groups: Vec<_> = idx.iter().map(|&i| set.datapoints[i].clone()).collect();
        let positions: Vec<PositionRecord> = idx
            .iter()
            .map(|&i| PositionRecord {
                tx_mac: set.datapoints[i].tx_mac,
                timestamp_s: set.datapoints[i].timestamp_s,
                position: set.positions[i],
            })
            .collect();
        let ds_path = out_dir.join(format!("{name}.jsonl"));
        write_dataset(&ds_path, &Dataset::from_combined(grid.clone(), &groups))?;
        let pos_path = out_dir.join(format!("{name}_positions.json"));
        write_positions(&pos_path, &positions)?;
        out.files.extend([ds_path.clone(), ds_path.with_extension("bin"), pos_path]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_json_shapes() {
        let s: Scenario = serde_json::from_str(
            r#"{"kind": "capture", "sniffers": [{"id": 3}], "frames": [{"time_s": 1e-4, "tx_mac": "02:00:00:00:00:07"}]}"#,
        )
        .unwrap();
        let Scenario::Capture(c) = s else { panic!() };
        assert_eq!(c.sniffers[0].antennas, 4);
        assert_eq!(c.frames[0].rate_mbps, 6);
        let g: Scenario = serde_json::from_str(r#"{"kind": "geometry", "num_points": 10, "test_fraction": 0.5}"#).unwrap();
        let Scenario::Geometry(g) = g else { panic!() };
        assert_eq!(g.geometry.num_points, 10);
        assert!(serde_json::from_str::<Scenario>(r#"{"kind": "capture", "bogus": 1}"#).is_err());
    }

    #[test]
    fn rejects_duplicate_sniffers_and_long_channels() {
        let mut sc = CaptureScenario {
            sniffers: vec![SnifferSpec { id: 1, antennas: 1 }, SnifferSpec { id: 1, antennas: 1 }],
            ..Default::default()
        };
        assert!(matches!(validate(&sc), Err(CliError::Config(_))));
        sc.sniffers.pop();
        sc.frames.push(FrameSpec { num_taps: 40, ..Default::default() });
        assert!(matches!(validate(&sc), Err(CliError::Config(_))));
    }
}
