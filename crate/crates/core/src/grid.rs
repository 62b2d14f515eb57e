//! Value tables and indicator grids over `[0, n^m)²`.
//!
//! Rows are indexed by the first operand `a` (top to bottom) and columns by
//! `b` (left to right), with `(0, 0)` in the top-left corner.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::digits::{self, Base};
use crate::error::{Error, Result};

/// Largest side materialized densely unless a spec overrides it.
pub const DEFAULT_DENSE_CAP: u64 = 16384;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    Cvt,
    EvtMax,
    EvtMin,
}

impl TransformKind {
    pub const ALL: [TransformKind; 3] = [Self::Cvt, Self::EvtMax, Self::EvtMin];

    pub fn apply(self, a: u64, b: u64, base: Base) -> Result<u64> {
        match self {
            Self::Cvt => digits::cvt(a, b, base),
            Self::EvtMax => digits::evt_max(a, b, base),
            Self::EvtMin => digits::evt_min(a, b, base),
        }
    }

    /// Per-digit rule and the position offset its output digit lands at.
    fn digit_rule(self, n: u64) -> (impl Fn(u64, u64) -> u64, usize) {
        let shift = usize::from(self == Self::Cvt);
        let rule = move |x: u64, y: u64| match self {
            Self::Cvt => (x + y) / n,
            Self::EvtMax => x.max(y),
            Self::EvtMin => x.min(y),
        };
        (rule, shift)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Cvt => "cvt",
            Self::EvtMax => "evt-max",
            Self::EvtMin => "evt-min",
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "cvt" => Ok(Self::Cvt),
            "evt" | "evt-max" | "max" => Ok(Self::EvtMax),
            "evt-min" | "min" => Ok(Self::EvtMin),
            other => Err(Error::InvalidArgument(format!(
                "unknown transform {other:?} (expected cvt, evt-max or evt-min)"
            ))),
        }
    }
}

/// An `n^depth × n^depth` table domain.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    base: Base,
    depth: u32,
    side: u64,
    cap: u64,
}

impl GridSpec {
    pub fn new(base: Base, depth: u32) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidArgument("depth must be at least 1".into()));
        }
        let side = base.pow(depth)?;
        Ok(GridSpec {
            base,
            depth,
            side,
            cap: DEFAULT_DENSE_CAP,
        })
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn side(&self) -> u64 {
        self.side
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    /// Side as a `usize`, provided the grid may be stored densely.
    pub fn dense_side(&self) -> Result<usize> {
        if self.side > self.cap {
            return Err(Error::GridTooLarge {
                side: self.side,
                cap: self.cap,
            });
        }
        usize::try_from(self.side).map_err(|_| Error::GridTooLarge {
            side: self.side,
            cap: self.cap,
        })
    }
}

// The dense cap is a storage policy, not part of the domain.
impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.depth == other.depth
    }
}

impl Eq for GridSpec {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Zero,
    Value(u64),
    /// The all-`(n-1)`-digits value `n^depth - 1`.
    TopValue,
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(Self::Zero),
            "top" | "top-value" | "topvalue" => Ok(Self::TopValue),
            other => other.parse::<u64>().map(Self::Value).map_err(|_| {
                Error::InvalidArgument(format!(
                    "unknown target {other:?} (expected zero, top or a natural number)"
                ))
            }),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("zero"),
            Self::TopValue => f.write_str("top"),
            Self::Value(k) => write!(f, "{k}"),
        }
    }
}

/// Which cells of a table to mark: those where `transform(a, b)` equals the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct PatternQuery {
    pub transform: TransformKind,
    pub target: Target,
}

impl PatternQuery {
    pub fn new(transform: TransformKind, target: Target) -> Self {
        PatternQuery { transform, target }
    }

    pub fn cvt_zero() -> Self {
        Self::new(TransformKind::Cvt, Target::Zero)
    }

    pub fn evt_top() -> Self {
        Self::new(TransformKind::EvtMax, Target::TopValue)
    }

    /// The concrete value the query matches on `spec`.
    pub fn resolve(&self, spec: &GridSpec) -> Result<u64> {
        let n = spec.base();
        let out_digits = match self.transform {
            TransformKind::Cvt => spec.depth() + 1,
            _ => spec.depth(),
        };
        match self.target {
            Target::Zero => Ok(0),
            Target::TopValue => match self.transform {
                TransformKind::Cvt => Err(Error::InvalidTarget(
                    "top value is only defined for the extreme value transforms".into(),
                )),
                _ => Ok(spec.side() - 1),
            },
            Target::Value(k) => {
                let limit = n.pow(out_digits)?;
                if k >= limit {
                    Err(Error::InvalidTarget(format!(
                        "{} values on a base-{n} depth-{} grid are below {limit}, got {k}",
                        self.transform,
                        spec.depth()
                    )))
                } else {
                    Ok(k)
                }
            }
        }
    }
}

/// Per-index digit expansions shared by every row of a grid.
struct DigitCache {
    width: usize,
    digits: Vec<u64>,
}

impl DigitCache {
    fn new(base: Base, width: usize, count: usize) -> Self {
        let n = base.get();
        let mut digits = vec![0u64; width * count];
        for (v, chunk) in digits.chunks_exact_mut(width).enumerate() {
            let mut rest = v as u64;
            for d in chunk.iter_mut() {
                *d = rest % n;
                rest /= n;
            }
        }
        DigitCache { width, digits }
    }

    #[inline]
    fn of(&self, v: usize) -> &[u64] {
        &self.digits[v * self.width..(v + 1) * self.width]
    }
}

/// Row-major table of transform values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueTable {
    spec: GridSpec,
    transform: TransformKind,
    side: usize,
    cells: Vec<u64>,
}

impl ValueTable {
    #[cfg(test)]
    pub(crate) fn from_cells(spec: GridSpec, transform: TransformKind, cells: Vec<u64>) -> Self {
        let side = spec.side() as usize;
        assert_eq!(cells.len(), side * side);
        ValueTable {
            spec,
            transform,
            side,
            cells,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn transform(&self) -> TransformKind {
        self.transform
    }

    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> u64 {
        self.cells[a * self.side + b]
    }

    pub fn row(&self, a: usize) -> &[u64] {
        &self.cells[a * self.side..(a + 1) * self.side]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.cells.chunks_exact(self.side)
    }

    pub fn max_value(&self) -> u64 {
        self.cells.iter().copied().max().unwrap_or(0)
    }
}

/// Computes rows of a table one at a time from cached digit expansions.
struct RowKernel {
    transform: TransformKind,
    base: Base,
    cache: DigitCache,
    places: Vec<u64>,
}

impl RowKernel {
    fn new(spec: &GridSpec, transform: TransformKind, side: usize) -> Result<Self> {
        let depth = spec.depth() as usize;
        // place values n^0 ..= n^depth, enough for the shifted carry digit
        let places = (0..=spec.depth())
            .map(|e| spec.base().pow(e))
            .collect::<Result<Vec<_>>>()?;
        Ok(RowKernel {
            transform,
            base: spec.base(),
            cache: DigitCache::new(spec.base(), depth, side),
            places,
        })
    }

    fn fill_row(&self, a: usize, row: &mut [u64]) {
        let (rule, shift) = self.transform.digit_rule(self.base.get());
        let da = self.cache.of(a);
        for (b, cell) in row.iter_mut().enumerate() {
            let db = self.cache.of(b);
            *cell = da
                .iter()
                .zip(db)
                .enumerate()
                .map(|(i, (&x, &y))| rule(x, y) * self.places[i + shift])
                .sum();
        }
    }
}

/// Materializes `t(a, b)` for every cell of `spec`.
pub fn build_table(spec: &GridSpec, t: TransformKind) -> Result<ValueTable> {
    let side = spec.dense_side()?;
    let kernel = RowKernel::new(spec, t, side)?;
    let mut cells = vec![0u64; side * side];
    cells
        .par_chunks_mut(side)
        .enumerate()
        .for_each(|(a, row)| kernel.fill_row(a, row));
    Ok(ValueTable {
        spec: *spec,
        transform: t,
        side,
        cells,
    })
}

/// Streams table rows without the dense cap; each item is one row `a`.
pub fn table_rows(spec: &GridSpec, t: TransformKind) -> Result<TableRows> {
    let side = usize::try_from(spec.side()).map_err(|_| Error::RangeOverflow)?;
    let kernel = RowKernel::new(spec, t, side)?;
    Ok(TableRows {
        kernel,
        side,
        next: 0,
    })
}

pub struct TableRows {
    kernel: RowKernel,
    side: usize,
    next: usize,
}

impl Iterator for TableRows {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        if self.next >= self.side {
            return None;
        }
        let mut row = vec![0u64; self.side];
        self.kernel.fill_row(self.next, &mut row);
        self.next += 1;
        Some(row)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.side - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for TableRows {}

/// One bit per cell, rows packed into 64-bit words (bit `b % 64` of word `b / 64`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorGrid {
    spec: GridSpec,
    side: usize,
    stride: usize,
    words: Vec<u64>,
}

impl IndicatorGrid {
    pub fn empty(spec: &GridSpec) -> Result<Self> {
        let side = spec.dense_side()?;
        let stride = side.div_ceil(64);
        Ok(IndicatorGrid {
            spec: *spec,
            side,
            stride,
            words: vec![0; stride * side],
        })
    }

    /// Builds a grid from a cell predicate, rows in parallel.
    pub fn from_fn<F>(spec: &GridSpec, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> bool + Sync,
    {
        let mut grid = Self::empty(spec)?;
        let side = grid.side;
        grid.words
            .par_chunks_mut(grid.stride)
            .enumerate()
            .for_each(|(a, row)| {
                for b in 0..side {
                    if f(a, b) {
                        row[b / 64] |= 1 << (b % 64);
                    }
                }
            });
        Ok(grid)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> bool {
        debug_assert!(a < self.side && b < self.side);
        self.words[a * self.stride + b / 64] >> (b % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, on: bool) {
        let w = &mut self.words[a * self.stride + b / 64];
        if on {
            *w |= 1 << (b % 64);
        } else {
            *w &= !(1 << (b % 64));
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Packed words of row `a`; bits past `side` are always clear.
    pub fn row_words(&self, a: usize) -> &[u64] {
        &self.words[a * self.stride..(a + 1) * self.stride]
    }

    /// Coordinates of set cells in row-major order.
    pub fn iter_ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.side).flat_map(move |a| {
            self.row_words(a)
                .iter()
                .enumerate()
                .flat_map(move |(wi, &w)| BitIter(w).map(move |bit| (a, wi * 64 + bit)))
        })
    }

    pub fn to_rows(&self) -> Vec<Vec<bool>> {
        (0..self.side)
            .map(|a| (0..self.side).map(|b| self.get(a, b)).collect())
            .collect()
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let bit = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(bit)
    }
}

/// Marks every cell whose transform value equals the query's target.
///
/// Matching is done digit by digit against the target's expansion, so a
/// target no pair can produce (a carry digit of 2, or a nonzero lowest
/// carry position) gives an empty grid rather than an error.
pub fn indicator(spec: &GridSpec, q: &PatternQuery) -> Result<IndicatorGrid> {
    let target = q.resolve(spec)?;
    let side = spec.dense_side()?;
    let n = spec.base().get();
    let depth = spec.depth() as usize;
    let (rule, shift) = q.transform.digit_rule(n);

    let mut want = Vec::with_capacity(depth + shift);
    let mut rest = target;
    for _ in 0..depth + shift {
        want.push(rest % n);
        rest /= n;
    }
    if shift == 1 && want[0] != 0 {
        return IndicatorGrid::empty(spec);
    }
    let want = &want[shift..];
    let cache = DigitCache::new(spec.base(), depth, side);
    IndicatorGrid::from_fn(spec, |a, b| {
        cache
            .of(a)
            .iter()
            .zip(cache.of(b))
            .zip(want)
            .all(|((&x, &y), &w)| rule(x, y) == w)
    })
}

/// Number of cells `indicator(spec, q)` marks, from per-digit pair counts.
pub fn expected_cell_count(spec: &GridSpec, q: &PatternQuery) -> Result<u64> {
    let target = q.resolve(spec)?;
    let n = spec.base().get();
    let depth = spec.depth() as usize;
    let mut rest = target;
    let mut count = 1u64;
    let mut mul = |c: u64| -> Result<()> {
        count = count.checked_mul(c).ok_or(Error::RangeOverflow)?;
        Ok(())
    };
    match q.transform {
        TransformKind::Cvt => {
            if rest % n != 0 {
                return Err(Error::NotClosedForm(target));
            }
            rest /= n;
            for _ in 0..depth {
                match rest % n {
                    0 => mul(n * (n + 1) / 2)?,
                    1 => mul(n * (n - 1) / 2)?,
                    _ => return Err(Error::NotClosedForm(target)),
                }
                rest /= n;
            }
        }
        TransformKind::EvtMax => {
            for _ in 0..depth {
                mul(2 * (rest % n) + 1)?;
                rest /= n;
            }
        }
        TransformKind::EvtMin => {
            for _ in 0..depth {
                mul(2 * (n - 1 - rest % n) + 1)?;
                rest /= n;
            }
        }
    }
    Ok(count)
}

/// The depth-1 (`n × n`) pattern that generates the fractal by substitution.
pub fn ifs_generator(base: Base, q: &PatternQuery) -> Result<IndicatorGrid> {
    indicator(&GridSpec::new(base, 1)?, q)
}

/// Replaces every set cell with a scaled copy of `gen`, `depth - 1` times,
/// giving a grid of side `n^depth`.
pub fn iterate_generator(gen: &IndicatorGrid, depth: u32) -> Result<IndicatorGrid> {
    if gen.spec().depth() != 1 {
        return Err(Error::InvalidArgument(format!(
            "generator must have depth 1, got {}",
            gen.spec().depth()
        )));
    }
    let n = gen.side();
    let target = GridSpec::new(gen.spec().base(), depth)?.with_cap(gen.spec().cap());
    target.dense_side()?;

    let mut current = gen.clone();
    for level in 2..=depth {
        let spec = GridSpec::new(gen.spec().base(), level)?.with_cap(gen.spec().cap());
        let prev = &current;
        current = IndicatorGrid::from_fn(&spec, |a, b| {
            prev.get(a / n, b / n) && gen.get(a % n, b % n)
        })?;
    }
    Ok(current)
}
