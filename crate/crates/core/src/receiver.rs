//! End-to-end receive pipeline: detection, synchronization, estimation and
//! decoding of every frame in a capture.

use serde::{Deserialize, Serialize};

use crate::capture::IqCapture;
use crate::decode::{decode_data, detect_format, finish_frame, mrc_equalize, parse_lsig, DecodedFrame, Format};
use crate::estimate::{
    build_denoiser, denoise_cp, derotate, estimate_data_combined, estimate_lltf, estimate_snr, residual_phase_slope, symbol_tau,
    CsiEstimate, DenoiserOperator, Flavor, SnrConfig,
};
use crate::grid::OfdmGrid;
use crate::resample::resample;
use crate::sync::{compensate_cfo, demodulate_symbols, detect_frames, symbols_available, track_phase, Detection, DetectorConfig, FrameCandidate};
use crate::synth::frame::{lltf_values, PREAMBLE_LEN, SYMBOL_LEN};
use crate::{Error, Result, C64};

/// CFO compensation is anchored at the midpoint of the two long training
/// symbols, relative to the frame start. An error in the CFO estimate then
/// leaves no common phase bias on the L-LTF estimate.
pub const CFO_ANCHOR: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReceiverConfig {
    pub detector: DetectorConfig,
    pub snr: SnrConfig,
    /// Flavors computed for every decoded frame.
    pub flavors: Vec<Flavor>,
    /// Include the two L-LTF observations in data-aided combining.
    pub include_lltf: bool,
    /// Processing rate; captures at other rates are resampled first.
    pub sample_rate: f64,
    /// Phase correction applied before data-aided estimation.
    pub estimation_phase: EstimationPhase,
}

/// Phase correction of the symbols entering data-aided estimation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationPhase {
    /// One residual-CFO slope per frame, zero at the CFO anchor.
    ResidualCfo,
    /// The per-symbol common phase used for equalization.
    PerSymbol,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        ReceiverConfig {
            detector: DetectorConfig::default(),
            snr: SnrConfig::default(),
            flavors: Flavor::ALL.to_vec(),
            include_lltf: true,
            sample_rate: 20e6,
            estimation_phase: EstimationPhase::ResidualCfo,
        }
    }
}

/// Per-capture statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub detected: u64,
    pub truncated: u64,
    pub format_other: u64,
    pub lsig_rejected: u64,
    pub data_failed: u64,
    pub fcs_failed: u64,
    pub decoded: u64,
}

impl Counters {
    pub fn add(&mut self, o: &Counters) {
        self.detected += o.detected;
        self.truncated += o.truncated;
        self.format_other += o.format_other;
        self.lsig_rejected += o.lsig_rejected;
        self.data_failed += o.data_failed;
        self.fcs_failed += o.fcs_failed;
        self.decoded += o.decoded;
    }
}

/// A successfully decoded frame with its CSI.
#[derive(Clone, Debug)]
pub struct ProcessedFrame {
    pub detection: Detection,
    pub timestamp: f64,
    pub frame: DecodedFrame,
    pub estimates: Vec<CsiEstimate>,
    pub snr_db: Option<Vec<f64>>,
    /// Frame end (exclusive), in samples at the processing rate.
    pub end: usize,
}

impl ProcessedFrame {
    pub fn estimate(&self, flavor: Flavor) -> Option<&CsiEstimate> {
        self.estimates.iter().find(|e| e.flavor == flavor)
    }
}

/// Intermediate per-frame state, exposed for tests and diagnostics.
#[derive(Clone, Debug)]
pub struct FrontEnd {
    pub candidate: FrameCandidate,
    pub h_raw: CsiEstimate,
    /// Phase-tracked symbols `[antenna][l][omega]`.
    pub tracked: Vec<Vec<Vec<C64>>>,
    pub equalized: Vec<Vec<Option<C64>>>,
}

enum Outcome {
    Frame(Box<ProcessedFrame>),
    Rejected(fn(&mut Counters)),
}

pub struct Receiver {
    pub grid: OfdmGrid,
    pub config: ReceiverConfig,
    denoiser: DenoiserOperator,
}

impl Receiver {
    pub fn new(config: ReceiverConfig) -> Result<Receiver> {
        let grid = OfdmGrid::non_ht();
        let denoiser = build_denoiser(&grid)?;
        Ok(Receiver { grid, config, denoiser })
    }

    pub fn denoiser(&self) -> &DenoiserOperator {
        &self.denoiser
    }

    /// Demodulates `num_symbols` symbols after CFO compensation, estimates
    /// the L-LTF channel, tracks phase and applies MRC.
    pub fn front_end(&self, samples: &[Vec<C64>], det: &Detection, num_symbols: usize) -> Result<FrontEnd> {
        let len = samples.first().map_or(0, Vec::len);
        let end = (det.start + PREAMBLE_LEN + SYMBOL_LEN * num_symbols).min(len);
        let window: Vec<Vec<C64>> = samples.iter().map(|a| a[det.start..end].to_vec()).collect();
        let corrected = compensate_cfo(&window, CFO_ANCHOR, det.cfo_hz, self.config.sample_rate);
        let mut candidate = demodulate_symbols(&corrected, 0, &self.grid, num_symbols)?;
        candidate.start_index = det.start;
        candidate.detection_metric = det.metric;
        candidate.cfo_hat = det.cfo_hz;
        let h_raw = estimate_lltf(&self.grid, &candidate.lltf, &lltf_values())?;
        let n_ant = candidate.num_antennas();
        let mut tracked = vec![Vec::with_capacity(num_symbols); n_ant];
        let mut equalized = Vec::with_capacity(num_symbols);
        for l in 0..num_symbols {
            let (y, _) = track_phase(&self.grid, &candidate.symbol(l), &h_raw.h, l);
            let refs: Vec<&[C64]> = y.iter().map(Vec::as_slice).collect();
            equalized.push(mrc_equalize(&refs, &h_raw.h).0);
            for (a, ya) in y.into_iter().enumerate() {
                tracked[a].push(ya);
            }
        }
        Ok(FrontEnd { candidate, h_raw, tracked, equalized })
    }

    fn process_detection(&self, samples: &[Vec<C64>], det: &Detection, timestamp: f64) -> Outcome {
        let len = samples.first().map_or(0, Vec::len);
        if symbols_available(len, det.start) < 3 {
            return Outcome::Rejected(|c| c.truncated += 1);
        }
        let Ok(head) = self.front_end(samples, det, 3) else {
            return Outcome::Rejected(|c| c.truncated += 1);
        };
        if detect_format(&self.grid, &head.equalized) != Format::NonHt {
            return Outcome::Rejected(|c| c.format_other += 1);
        }
        let Ok(lsig) = parse_lsig(&self.grid, &head.equalized[0]) else {
            return Outcome::Rejected(|c| c.lsig_rejected += 1);
        };
        let n_sym = lsig.mcs.num_data_symbols(lsig.length);
        if symbols_available(len, det.start) < 1 + n_sym {
            return Outcome::Rejected(|c| c.truncated += 1);
        }
        let Ok(fe) = self.front_end(samples, det, 1 + n_sym) else {
            return Outcome::Rejected(|c| c.truncated += 1);
        };
        let Ok(data) = decode_data(&self.grid, &fe.equalized[1..], &lsig) else {
            return Outcome::Rejected(|c| c.data_failed += 1);
        };
        let Ok(frame) = finish_frame(lsig, data) else {
            return Outcome::Rejected(|c| c.data_failed += 1);
        };
        let Some(s) = frame.symbols.as_ref().filter(|_| frame.fcs_ok) else {
            return Outcome::Rejected(|c| c.fcs_failed += 1);
        };
        let Ok(estimates) = self.estimates(&fe, s) else {
            return Outcome::Rejected(|c| c.data_failed += 1);
        };
        let end = det.start + PREAMBLE_LEN + SYMBOL_LEN * (1 + n_sym);
        let snr_db = estimate_snr(samples, det.start, end, &self.config.snr);
        Outcome::Frame(Box::new(ProcessedFrame { detection: det.clone(), timestamp, frame, estimates, snr_db, end }))
    }

    /// The configured CSI flavors for a decoded frame.
    pub fn estimates(&self, fe: &FrontEnd, s: &[Vec<C64>]) -> Result<Vec<CsiEstimate>> {
        let want = |f| self.config.flavors.contains(&f);
        let mut out = Vec::new();
        if want(Flavor::LltfRaw) {
            out.push(fe.h_raw.clone());
        }
        if want(Flavor::CpDenoised) {
            out.push(denoise_cp(&fe.h_raw, &self.denoiser)?);
        }
        if want(Flavor::DataCombined) || want(Flavor::DataCombinedDenoised) {
            let dc = self.data_combined(fe, s, None)?;
            if want(Flavor::DataCombinedDenoised) {
                let dn = denoise_cp(&dc, &self.denoiser)?;
                if want(Flavor::DataCombined) {
                    out.push(dc);
                }
                out.push(dn);
            } else {
                out.push(dc);
            }
        }
        Ok(out)
    }

    /// Data-aided combined estimate over the first `max_symbols` symbols.
    pub fn data_combined(&self, fe: &FrontEnd, s: &[Vec<C64>], max_symbols: Option<usize>) -> Result<CsiEstimate> {
        let n = max_symbols.unwrap_or(s.len()).min(s.len()).min(fe.candidate.num_symbols());
        let derotated;
        let y = match self.config.estimation_phase {
            EstimationPhase::PerSymbol => &fe.tracked,
            EstimationPhase::ResidualCfo => {
                let tau: Vec<f64> = (0..fe.candidate.num_symbols()).map(|l| symbol_tau(&self.grid, l, CFO_ANCHOR)).collect();
                let slope = residual_phase_slope(&fe.candidate.symbols, &s[..n], &fe.h_raw.h, &tau[..n]);
                derotated = derotate(&fe.candidate.symbols, slope, &tau);
                &derotated
            }
        };
        estimate_data_combined(&self.grid, y, s, &fe.candidate.lltf, &lltf_values(), self.config.include_lltf, Some(n))
    }

    /// Processes every frame in a capture, resampling it first if needed.
    pub fn process_capture(&self, capture: &IqCapture) -> Result<(Vec<ProcessedFrame>, Counters)> {
        if capture.num_antennas() == 0 {
            return Err(Error::AntennaLengthMismatch("capture has no antennas".into()));
        }
        let resampled;
        let cap = if (capture.sample_rate - self.config.sample_rate).abs() > 1e-6 {
            resampled = resample(capture, self.config.sample_rate)?;
            &resampled
        } else {
            capture
        };
        let mut counters = Counters::default();
        let mut frames = Vec::new();
        for det in detect_frames(&cap.samples, cap.sample_rate, &self.config.detector) {
            counters.detected += 1;
            match self.process_detection(&cap.samples, &det, cap.time_of(det.start)) {
                Outcome::Frame(f) => {
                    counters.decoded += 1;
                    frames.push(*f);
                }
                Outcome::Rejected(bump) => bump(&mut counters),
            }
        }
        Ok((frames, counters))
    }
}
