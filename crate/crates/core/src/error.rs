use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unbalanced instance: total supply {supply} != total demand {demand}")]
    Unbalanced { supply: u64, demand: u64 },

    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("cell ({row}, {col}) lies outside the {rows}x{cols} grid")]
    OutOfGrid {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("staircase path does not belong to this instance: {0}")]
    InconsistentPath(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid facility set: {0}")]
    InvalidFacilitySet(String),

    #[error("invalid staircase encoding: {0}")]
    InvalidEncoding(String),

    #[error("histogram does not match the assignment: {0}")]
    HistogramMismatch(String),

    #[error("enumeration cap exceeded: {what} ({size} > {cap})")]
    CapExceeded { what: String, size: u128, cap: u128 },

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
}
