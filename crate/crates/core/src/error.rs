use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("base must be at least 2, got {0}")]
    InvalidBase(u64),

    #[error("value {value} does not fit in {width} base-{base} digits")]
    ValueTooWide { value: u64, base: u64, width: usize },

    #[error("result exceeds the 64-bit natural range")]
    RangeOverflow,

    #[error("grid side {side} exceeds the dense cap {cap}")]
    GridTooLarge { side: u64, cap: u64 },

    #[error("invalid pattern target: {0}")]
    InvalidTarget(String),

    #[error("target {0} is not a carry string; no closed-form count")]
    NotClosedForm(u64),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format mismatch: {0}")]
    FormatMismatch(String),

    #[error("malformed netpbm data: {0}")]
    Parse(String),
}
