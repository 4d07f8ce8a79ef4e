use thiserror::Error;

/// Everything that can go wrong outside of plain bugs: bad user input,
/// unmet preconditions, and blown resource budgets are kept distinct so
/// callers can map them to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),

    #[error("operation `{op}` has arity {expected}, got {got} arguments")]
    ArityMismatch {
        op: String,
        expected: usize,
        got: usize,
    },

    #[error("element {element} out of range for carrier of size {size}")]
    ElementRange { element: usize, size: usize },

    #[error("variable x{var} out of range: term evaluated at {provided} arguments")]
    VariableRange { var: usize, provided: usize },

    #[error("table for `{op}` has {got} entries, expected {expected}")]
    TableLength {
        op: String,
        expected: usize,
        got: usize,
    },

    #[error("universe is not closed: {op}({args:?}) = {result} falls outside it")]
    NotClosed {
        op: String,
        args: Vec<usize>,
        result: usize,
    },

    #[error("carrier mismatch: expected size {expected}, got {got}")]
    CarrierMismatch { expected: usize, got: usize },

    #[error("direction {dir} is not in the shape {shape:?}")]
    DirectionNotInShape { dir: usize, shape: Vec<usize> },

    #[error("{what} needs at least {min} dimensions, got {got}")]
    DimensionTooSmall {
        what: &'static str,
        min: usize,
        got: usize,
    },

    #[error("resource cap exceeded: {what} reached {reached}, cap is {cap}")]
    ResourceCap {
        what: &'static str,
        reached: usize,
        cap: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("hypothesis unmet: {0}")]
    HypothesisUnmet(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
