use thiserror::Error;

use crate::twobody::PairChannel;

pub type Result<T> = std::result::Result<T, ScatterError>;

#[derive(Debug, Error)]
pub enum ScatterError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The requested real energy sits on (or within machine precision of)
    /// an eigenvalue of H0, where the principal-value limit is distributional.
    #[error("degenerate input: e0 = {e0} collides with eigenvalue {eigenvalue}")]
    DegenerateInput { e0: f64, eigenvalue: f64 },

    #[error("near-singular linear system in {context}: condition estimate {condition:.3e}")]
    NearSingular { condition: f64, context: String },

    /// z lies too close to a pole of the requested operator (bound state or
    /// resonance of the named channel, or of the full system when absent).
    #[error("pole proximity{}: {detail}", fmt_channel(.channel))]
    PoleProximity {
        channel: Option<PairChannel>,
        detail: String,
    },

    #[error("on-shell momentum {k} collides with grid node {node}; regrid required")]
    Regrid { k: f64, node: f64 },

    #[error("root finding failed: {0}")]
    RootFind(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("scan degenerate: {skipped} of {total} grid points skipped")]
    ScanDegenerate { skipped: usize, total: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn fmt_channel(c: &Option<PairChannel>) -> String {
    match c {
        Some(ch) => format!(" in channel {ch}"),
        None => String::new(),
    }
}
