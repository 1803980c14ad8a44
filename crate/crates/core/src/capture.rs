//! Multi-antenna IQ captures and their on-disk format.
//!
//! A capture is stored as two files sharing a stem:
//!
//! * `<name>.iq`: little-endian `f32` pairs (I then Q). The stream is cut into
//!   blocks of `block_len` samples per antenna; each block holds antenna 0's
//!   samples, then antenna 1's, and so on. The final block may be shorter but
//!   has the same length for every antenna.
//! * `<name>.meta.json`: `{num_antennas, sample_rate_hz, center_freq_hz,
//!   start_time_unix_s, block_len}` plus an optional `samples_per_antenna`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Phase-synchronized complex baseband streams from one multi-antenna radio.
#[derive(Clone, Debug, PartialEq)]
pub struct IqCapture {
    /// Sample rate in Hz.
    pub sample_rate: f64,
    /// RF center frequency in Hz.
    pub center_frequency: f64,
    /// Wall-clock time of sample 0 in seconds.
    pub start_time: f64,
    /// One stream per antenna, all the same length.
    pub samples: Vec<Vec<C64>>,
}

impl IqCapture {
    pub fn new(
        sample_rate: f64,
        center_frequency: f64,
        start_time: f64,
        samples: Vec<Vec<C64>>,
    ) -> Result<IqCapture> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::MalformedHeader(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::MalformedHeader("capture has no antennas".into()));
        }
        let n = samples[0].len();
        if let Some((a, s)) = samples.iter().enumerate().find(|(_, s)| s.len() != n) {
            return Err(Error::AntennaLengthMismatch(format!(
                "antenna 0 has {n} samples, antenna {a} has {}",
                s.len()
            )));
        }
        Ok(IqCapture {
            sample_rate,
            center_frequency,
            start_time,
            samples,
        })
    }

    pub fn num_antennas(&self) -> usize {
        self.samples.len()
    }

    /// Samples per antenna.
    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Wall-clock time of sample `index`.
    pub fn time_of(&self, index: usize) -> f64 {
        self.start_time + index as f64 / self.sample_rate
    }
}

/// JSON sidecar describing a binary capture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaptureMeta {
    pub num_antennas: usize,
    pub sample_rate_hz: f64,
    pub center_freq_hz: f64,
    pub start_time_unix_s: f64,
    pub block_len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_per_antenna: Option<usize>,
}

/// Default block length used when writing captures.
pub const DEFAULT_BLOCK_LEN: usize = 4096;

/// Sidecar path for a capture binary: `x.iq` -> `x.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

/// Loads a capture from its binary file and sidecar.
pub fn load_iq_capture(path: impl AsRef<Path>) -> Result<IqCapture> {
    let path = path.as_ref();
    let meta_text = fs::read_to_string(sidecar_path(path)).map_err(|e| {
        Error::MalformedHeader(format!("cannot read sidecar for {}: {e}", path.display()))
    })?;
    let meta: CaptureMeta = serde_json::from_str(&meta_text)
        .map_err(|e| Error::MalformedHeader(format!("sidecar: {e}")))?;
    let bytes = fs::read(path)?;
    decode_capture(&meta, &bytes)
}

/// Decodes the binary payload described by `meta`.
pub fn decode_capture(meta: &CaptureMeta, bytes: &[u8]) -> Result<IqCapture> {
    if meta.num_antennas == 0 {
        return Err(Error::MalformedHeader("num_antennas is 0".into()));
    }
    if meta.block_len == 0 {
        return Err(Error::MalformedHeader("block_len is 0".into()));
    }
    if bytes.is_empty() {
        return Err(Error::TruncatedStream("empty payload".into()));
    }
    let frame_bytes = 8 * meta.num_antennas;
    let n = bytes.len() / frame_bytes;
    if let Some(expected) = meta.samples_per_antenna {
        if bytes.len() < expected * frame_bytes {
            return Err(Error::TruncatedStream(format!(
                "expected {} bytes, found {}",
                expected * frame_bytes,
                bytes.len()
            )));
        }
        if bytes.len() > expected * frame_bytes {
            return Err(Error::AntennaLengthMismatch(format!(
                "{} trailing bytes beyond {} samples per antenna",
                bytes.len() - expected * frame_bytes,
                expected
            )));
        }
    }
    if bytes.len() % frame_bytes != 0 {
        return Err(Error::AntennaLengthMismatch(format!(
            "{} bytes is not a whole number of samples for {} antennas",
            bytes.len(),
            meta.num_antennas
        )));
    }

    let mut samples = vec![Vec::with_capacity(n); meta.num_antennas];
    let mut values = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            C64::new(re as f64, im as f64)
        });
    let mut done = 0;
    while done < n {
        let blk = meta.block_len.min(n - done);
        for stream in samples.iter_mut() {
            stream.extend(values.by_ref().take(blk));
        }
        done += blk;
    }
    IqCapture::new(
        meta.sample_rate_hz,
        meta.center_freq_hz,
        meta.start_time_unix_s,
        samples,
    )
}

/// Encodes the capture payload with the given block length.
pub fn encode_capture(capture: &IqCapture, block_len: usize) -> Vec<u8> {
    let n = capture.len();
    let mut out = Vec::with_capacity(n * capture.num_antennas() * 8);
    let mut done = 0;
    while done < n {
        let blk = block_len.min(n - done);
        for stream in &capture.samples {
            for s in &stream[done..done + blk] {
                out.extend_from_slice(&(s.re as f32).to_le_bytes());
                out.extend_from_slice(&(s.im as f32).to_le_bytes());
            }
        }
        done += blk;
    }
    out
}

/// Sidecar for `capture` written with `block_len`.
pub fn capture_meta(capture: &IqCapture, block_len: usize) -> CaptureMeta {
    CaptureMeta {
        num_antennas: capture.num_antennas(),
        sample_rate_hz: capture.sample_rate,
        center_freq_hz: capture.center_frequency,
        start_time_unix_s: capture.start_time,
        block_len,
        samples_per_antenna: Some(capture.len()),
    }
}

/// Writes `path` and its sidecar.
pub fn write_iq_capture(capture: &IqCapture, path: impl AsRef<Path>, block_len: usize) -> Result<()> {
    let path = path.as_ref();
    let block_len = block_len.max(1);
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&encode_capture(capture, block_len))?;
    w.flush()?;
    let meta = capture_meta(capture, block_len);
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}
