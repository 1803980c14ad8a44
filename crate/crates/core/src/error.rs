use thiserror::Error;

/// Errors produced by the receive chain, the synthesizer and the dataset I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported bandwidth mode: {0}")]
    UnsupportedMode(String),
    #[error("unsupported resampling ratio {from_hz} Hz -> {to_hz} Hz")]
    UnsupportedRatio { from_hz: f64, to_hz: f64 },

    #[error("malformed capture header: {0}")]
    MalformedHeader(String),
    #[error("truncated stream: {0}")]
    TruncatedStream(String),
    #[error("antenna length mismatch: {0}")]
    AntennaLengthMismatch(String),

    #[error("scrambler seed must be a nonzero 7-bit value, got {0}")]
    InvalidSeed(u8),
    #[error("unknown code rate")]
    UnknownCodeRate,
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("bit count {bits} not divisible by {per_symbol} bits per symbol")]
    BitCount { bits: usize, per_symbol: usize },
    #[error("PSDU length {0} outside [1, 4095] octets")]
    PayloadLength(usize),
    #[error("channel has {taps} taps, at most {max} fit in the cyclic prefix")]
    TapsTooLong { taps: usize, max: usize },
    #[error("invalid channel realization: {0}")]
    InvalidChannel(String),

    #[error("frame start {start} too close to capture end ({len} samples)")]
    StartOutOfRange { start: usize, len: usize },
    #[error("capture exhausted after {demodulated} of {requested} symbols")]
    TruncatedFrame { demodulated: usize, requested: usize },

    #[error("pilot value on subcarrier {0} is zero")]
    InvalidPilot(i32),
    #[error("zero constellation symbol at subcarrier {subcarrier}, symbol {symbol}")]
    ZeroSymbol { subcarrier: i32, symbol: usize },
    #[error("{used} used subcarriers cannot resolve {taps} channel taps")]
    Underdetermined { used: usize, taps: usize },
    #[error("zero combining weight on subcarrier {0}")]
    ZeroWeight(i32),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operation not defined for CSI flavor {0}")]
    InvalidFlavor(String),

    #[error("L-SIG parity check failed")]
    ParityFail,
    #[error("illegal L-SIG rate code {0:#06b}")]
    IllegalRate(u8),
    #[error("PSDU of {0} octets is too short for an FCS")]
    FcsTooShort(usize),
    #[error("malformed MAC header: {0}")]
    MalformedMac(String),

    #[error("stream {stream} is not sorted by timestamp at index {index}")]
    Unsorted { stream: usize, index: usize },
    #[error("unsupported dataset version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("corrupt record {index}: {reason}")]
    CorruptRecord { index: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
