//! Acceptance checks, parameterized by sample counts so the same code backs
//! the full acceptance suite and the quick `selftest` subset.

mod codec;
mod merge;
mod ml;
mod persist;
mod phy;

pub use merge::{exhaustive_partitions, greedy_satisfies_rules, Point as TimelinePoint};

use std::fmt;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Scale {
    pub loopback_frames: usize,
    pub sync_frames: usize,
    pub noise_samples: usize,
    pub cfo_frames: usize,
    pub denoise_frames: usize,
    pub combine_trials: usize,
    pub scramble_bits: usize,
    pub random_timelines: usize,
    pub positioning_points: usize,
    pub positioning_epochs: usize,
    pub roundtrip_records: usize,
}

impl Scale {
    pub fn full() -> Scale {
        Scale {
            loopback_frames: 1000,
            sync_frames: 500,
            noise_samples: 10_000_000,
            cfo_frames: 500,
            denoise_frames: 1000,
            combine_trials: 1000,
            scramble_bits: 100_000,
            random_timelines: 10_000,
            positioning_points: 20_000,
            positioning_epochs: 50,
            roundtrip_records: 10_000,
        }
    }

    pub fn quick() -> Scale {
        Scale {
            loopback_frames: 80,
            sync_frames: 100,
            noise_samples: 1_000_000,
            cfo_frames: 100,
            denoise_frames: 200,
            combine_trials: 100,
            scramble_bits: 100_000,
            random_timelines: 500,
            positioning_points: 4_000,
            positioning_epochs: 10,
            roundtrip_records: 500,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub criterion: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed_s: f64,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {:<22} {} ({:.1} s) {}",
            self.criterion,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.elapsed_s,
            self.detail
        )
    }
}

/// Outcome of one check body: pass flag and a one-line summary.
pub(crate) type Outcome = (bool, String);

fn timed(criterion: u8, name: &'static str, body: impl FnOnce() -> Outcome) -> CheckResult {
    let t = Instant::now();
    let (pass, detail) = body();
    CheckResult { criterion, name, pass, detail, elapsed_s: t.elapsed().as_secs_f64() }
}

pub fn loopback_decode(s: &Scale) -> CheckResult {
    timed(1, "loopback-decode", || phy::loopback(s.loopback_frames, 1))
}

pub fn sync_accuracy(s: &Scale) -> CheckResult {
    timed(2, "sync-accuracy", || phy::sync(s.sync_frames, s.noise_samples, 2))
}

pub fn cfo_accuracy(s: &Scale) -> CheckResult {
    timed(3, "cfo-accuracy", || phy::cfo(s.cfo_frames, 3))
}

pub fn denoising_gain(s: &Scale) -> CheckResult {
    timed(4, "denoising-gain", || phy::denoising(s.denoise_frames, 4))
}

pub fn combining_gain(s: &Scale) -> CheckResult {
    timed(5, "combining-gain", || phy::combining(s.combine_trials, 5))
}

pub fn denoiser_algebra(_s: &Scale) -> CheckResult {
    timed(6, "denoiser-algebra", || codec::denoiser_algebra(6))
}

pub fn codec_known_answers(s: &Scale) -> CheckResult {
    timed(7, "codec-known-answers", || codec::known_answers(s.scramble_bits, 7))
}

pub fn merge_rules(s: &Scale) -> CheckResult {
    timed(8, "merge", || merge::check(s.random_timelines, 8))
}

pub fn mlp_positioning(s: &Scale) -> CheckResult {
    timed(9, "mlp-positioning", || ml::check(s.positioning_points, s.positioning_epochs, 9))
}

pub fn persistence(s: &Scale) -> CheckResult {
    timed(10, "persistence", || persist::check(s.roundtrip_records, 10))
}

/// All criteria in order.
pub fn run_all(s: &Scale, mut report: impl FnMut(&CheckResult)) -> Vec<CheckResult> {
    let checks: [fn(&Scale) -> CheckResult; 10] = [
        loopback_decode,
        sync_accuracy,
        cfo_accuracy,
        denoising_gain,
        combining_gain,
        denoiser_algebra,
        codec_known_answers,
        merge_rules,
        mlp_positioning,
        persistence,
    ];
    checks
        .iter()
        .map(|c| {
            let r = c(s);
            report(&r);
            r
        })
        .collect()
}

/// Converts an error inside a check body into a failing outcome.
pub(crate) fn fail(e: impl fmt::Display) -> Outcome {
    (false, format!("error: {e}"))
}
