//! # carryfrac
//!
//! Digit-wise integer transforms and the fractals their value tables hide.
//!
//! - [`digits`]: base codecs plus the carry value transformation ([`cvt`]),
//!   the carry-free sum ([`sv`]) and the extreme value transformations
//!   ([`evt_max`], [`evt_min`]) over any base `n >= 2`.
//! - [`grid`]: `n^m × n^m` value tables, indicator grids of one value,
//!   depth-1 generators and their substitution iterates.
//! - [`dimension`]: closed-form similarity dimensions, a box-counting
//!   estimator, monotone convergence checks and the consecutive-base
//!   overflow analysis.
//! - [`render`]: byte-exact netpbm output.
//! - [`verify`]: the invariant suites behind `carryfrac verify`.
//!
//! ```
//! use carryfrac::{cvt, Base};
//!
//! assert_eq!(cvt(13, 14, Base::BINARY).unwrap(), 24);
//! assert_eq!(cvt(13, 14, Base::new(3).unwrap()).unwrap(), 3);
//! ```

pub mod dimension;
pub mod digits;
pub mod error;
pub mod grid;
pub mod render;
pub mod verify;

pub use digits::{cvt, evt_max, evt_min, from_digits, sv, to_digits, Base, DigitVec};
pub use error::{Error, Result};
pub use grid::{
    build_table, expected_cell_count, ifs_generator, indicator, iterate_generator, table_rows,
    GridSpec, IndicatorGrid, PatternQuery, Target, TransformKind, ValueTable,
};
