use thiserror::Error;

/// Errors produced by graph construction, simulation, and analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("enumeration budget exceeded: {n_sites} sites > {budget} (2^N states)")]
    BudgetExceeded { n_sites: usize, budget: usize },

    #[error("temperature {t} outside reliable reweighting window [{lo}, {hi}]")]
    OutOfWindow { t: f64, lo: f64, hi: f64 },

    #[error("no reliable reweighting window: {0}")]
    NoWindow(String),

    #[error("susceptibility peak not bracketed: argmax {t_peak} at window boundary [{lo}, {hi}]; re-simulate at a new T0")]
    PeakNotBracketed { t_peak: f64, lo: f64, hi: f64 },

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("temperature scan found no susceptibility peak in [{lo}, {hi}]")]
    ScanFailed { lo: f64, hi: f64 },

    #[error("autocorrelation undefined for a constant series")]
    UndefinedCorrelation,

    #[error("missing artifacts from stage `{0}`; run that stage first")]
    StageDependency(String),

    #[error("results store holds records from a different config (expected hash {expected}, found {found})")]
    MixedConfig { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed record: {0}")]
    Record(String),
}

pub type Result<T> = std::result::Result<T, Error>;
