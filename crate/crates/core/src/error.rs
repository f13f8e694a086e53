use std::fmt;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Processing stage of the joint estimator, used to label propagated errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Solver,
    Pencil,
    LeastSquares,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Solver => "solver",
            Stage::Pencil => "matrix pencil",
            Stage::LeastSquares => "least-squares channels",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("atomic decomposition does not reproduce the vector (residual {residual:.3e})")]
    InconsistentDecomposition { residual: f64 },

    #[error("Toeplitz matrix has effective rank {rank}, fewer than the {order} requested components")]
    RankDeficient { rank: usize, order: usize },

    #[error("steering Gram matrix is ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at(stage: Stage) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// Stage label when the error was raised inside the joint estimator.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}
