use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("ill-conditioned moments: {0}")]
    IllConditioned(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate lambda grid: {0}")]
    DegenerateGrid(String),

    #[error("coordinate descent did not converge after {sweeps} sweeps (max change {max_change:.3e}, KKT violation {kkt:.3e})")]
    NoConvergence {
        sweeps: usize,
        max_change: f64,
        kkt: f64,
    },

    #[error("empty posterior: {0}")]
    EmptyDraws(String),

    #[error("ingestion error in {file}: {message}")]
    Ingest { file: String, message: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
