use std::path::PathBuf;

/// Errors produced by every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty mesh")]
    EmptyMesh,

    #[error("degenerate surface")]
    DegenerateSurface,

    #[error("behind camera")]
    BehindCamera,

    #[error("empty point set")]
    EmptyPointSet,

    #[error("degenerate point set at center")]
    DegenerateCenter,

    #[error("non-manifold edge ({0}, {1})")]
    NonManifoldEdge(usize, usize),

    #[error("no edges observed")]
    NoEdges,

    #[error("invalid initial pose")]
    InvalidInitialPose,

    #[error("triangle {triangle} references vertex {index} but mesh has {count} vertices")]
    TriangleIndex {
        triangle: usize,
        index: usize,
        count: usize,
    },

    #[error("rotation is not orthonormal (residual {residual:.3e})")]
    NotOrthonormal { residual: f64 },

    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("size mismatch: expected {expected:?}, got {actual:?}")]
    SizeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("count mismatch: {left} {left_what} vs {right} {right_what}")]
    CountMismatch {
        left: usize,
        left_what: &'static str,
        right: usize,
        right_what: &'static str,
    },

    #[error("invalid symmetry: {0}")]
    InvalidSymmetry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("entry {index}: {source}")]
    Entry {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown mesh id {0:?}")]
    UnknownMesh(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("image: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_entry(self, index: usize) -> Self {
        Error::Entry {
            index,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
