//! Fractal dimensions of the zero-carry and top-value patterns.
//!
//! Two independent routes are provided. The closed forms count self-similar
//! copies per digit (`n(n+1)/2` digit pairs produce no carry, `2n-1` pairs
//! have maximum `n-1`) at scale `1/n`. [`box_count`] measures an actual
//! indicator grid instead and knows nothing about either count.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::digits::Base;
use crate::error::{Error, Result};
use crate::grid::{ifs_generator, iterate_generator, GridSpec, IndicatorGrid, PatternQuery};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Zero set of the carry value transformation.
    Cvt,
    /// Top-value set of the extreme value transformation.
    Evt,
}

impl Family {
    /// Euclidean dimension the similarity dimension approaches as `n` grows.
    pub fn limit(self) -> f64 {
        match self {
            Family::Cvt => 2.0,
            Family::Evt => 1.0,
        }
    }

    /// Self-similar copies per digit in base `n`.
    pub fn copies(self, n: Base) -> Result<u64> {
        let n = n.get();
        match self {
            Family::Cvt => n
                .checked_mul(n + 1)
                .map(|p| p / 2)
                .ok_or(Error::RangeOverflow),
            Family::Evt => n
                .checked_mul(2)
                .map(|p| p - 1)
                .ok_or(Error::RangeOverflow),
        }
    }

    pub fn dimension(self, n: Base) -> f64 {
        match self {
            Family::Cvt => similarity_dim_cvt(n),
            Family::Evt => similarity_dim_evt(n),
        }
    }

    pub fn query(self) -> PatternQuery {
        match self {
            Family::Cvt => PatternQuery::cvt_zero(),
            Family::Evt => PatternQuery::evt_top(),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Cvt => "cvt",
            Family::Evt => "evt",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cvt" => Ok(Family::Cvt),
            "evt" | "evt-max" | "evt_max" => Ok(Family::Evt),
            other => Err(Error::InvalidArgument(format!(
                "unknown family {other:?} (expected cvt or evt)"
            ))),
        }
    }
}

/// `log(n(n+1)/2) / log(n)`.
pub fn similarity_dim_cvt(n: Base) -> f64 {
    let n = n.get();
    let log_n = (n as f64).ln();
    // the product is exact in f64 up to 2^53
    let log_copies = match n.checked_mul(n + 1) {
        Some(p) if p < 1 << 53 => ((p / 2) as f64).ln(),
        _ => log_n + ((n + 1) as f64).ln() - std::f64::consts::LN_2,
    };
    log_copies / log_n
}

/// `log(2n - 1) / log(n)`.
pub fn similarity_dim_evt(n: Base) -> f64 {
    let n = n.get();
    ((2 * n as u128 - 1) as f64).ln() / (n as f64).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionRecord {
    pub base: Base,
    pub copies: u64,
    pub scale_denominator: u64,
    pub dimension: f64,
}

pub fn dimension_table(n_from: Base, n_to: Base, which: Family) -> Result<Vec<DimensionRecord>> {
    if n_from > n_to {
        return Err(Error::InvalidArgument(format!(
            "empty base range {n_from}..{n_to}"
        )));
    }
    (n_from.get()..=n_to.get())
        .map(|n| {
            let base = Base::new(n)?;
            Ok(DimensionRecord {
                base,
                copies: which.copies(base)?,
                scale_denominator: n,
                dimension: which.dimension(base),
            })
        })
        .collect()
}

/// Commonly reproduced dimension-table entries that disagree with their own
/// closed form. Emitted alongside the formula value, never in its place.
pub fn known_erratum(which: Family, n: Base) -> Option<f64> {
    match (which, n.get()) {
        (Family::Evt, 29) => Some(1.195425616),
        _ => None,
    }
}

/// Occupied-box counts per scale and their log-log least-squares fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxCountFit {
    /// Box sides in cells, `n^0, n^1, ..., n^depth`.
    pub scales: Vec<u64>,
    pub counts: Vec<u64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Box-counting estimate over box sides `n^j`, `j = 0..=depth`.
///
/// The slope of `ln(count)` against `ln(side / box_side)` is the estimate.
/// Every scale takes part in the fit, endpoints included.
pub fn box_count(grid: &IndicatorGrid) -> Result<BoxCountFit> {
    let spec = grid.spec();
    if spec.depth() < 2 {
        return Err(Error::InvalidArgument(format!(
            "box counting needs depth >= 2, got {}",
            spec.depth()
        )));
    }
    if grid.is_empty() {
        return Err(Error::DegenerateGrid("no set cells to count"));
    }
    let n = spec.base().get() as usize;
    let counts = occupied_counts(grid, n);
    let scales: Vec<u64> = (0..=spec.depth()).map(|j| (n as u64).pow(j)).collect();

    let ln_n = (n as f64).ln();
    let points: Vec<(f64, f64)> = counts
        .iter()
        .enumerate()
        .map(|(j, &c)| ((spec.depth() as usize - j) as f64 * ln_n, (c as f64).ln()))
        .collect();
    let (slope, intercept, r2) = least_squares(&points);
    Ok(BoxCountFit {
        scales,
        counts,
        slope,
        intercept,
        r2,
    })
}

fn occupied_counts(grid: &IndicatorGrid, n: usize) -> Vec<u64> {
    let mut counts = vec![grid.count_ones()];
    let mut side = grid.side() / n;
    let mut occupied = vec![false; side * side];
    for (a, b) in grid.iter_ones() {
        occupied[(a / n) * side + b / n] = true;
    }
    counts.push(occupied.iter().filter(|&&o| o).count() as u64);
    while side > 1 {
        let coarse_side = side / n;
        let mut coarse = vec![false; coarse_side * coarse_side];
        for a in 0..side {
            for b in 0..side {
                if occupied[a * side + b] {
                    coarse[(a / n) * coarse_side + b / n] = true;
                }
            }
        }
        counts.push(coarse.iter().filter(|&&o| o).count() as u64);
        occupied = coarse;
        side = coarse_side;
    }
    counts
}

/// Ordinary least squares `y = slope * x + intercept`, with r².
/// A fit with no variance in `y` is exact, so r² is 1.
fn least_squares(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let len = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / len;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (slope, intercept, r2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub which: Family,
    pub n_max: u64,
    /// Strictly increasing (CVT) or strictly decreasing (EVT) over `2..=n_max`.
    pub monotone: bool,
    /// First `n` where the expected direction fails, if any.
    pub first_violation: Option<u64>,
    pub final_value: f64,
    pub limit: f64,
    pub final_gap: f64,
}

pub fn verify_convergence(which: Family, n_max: u64) -> Result<ConvergenceReport> {
    if n_max < 3 {
        return Err(Error::InvalidArgument(format!(
            "n_max must be at least 3, got {n_max}"
        )));
    }
    let increasing = which == Family::Cvt;
    let mut prev = which.dimension(Base::BINARY);
    let mut first_violation = None;
    for n in 3..=n_max {
        let d = which.dimension(Base::new(n)?);
        let ok = if increasing { d > prev } else { d < prev };
        if !ok && first_violation.is_none() {
            first_violation = Some(n);
        }
        prev = d;
    }
    let limit = which.limit();
    Ok(ConvergenceReport {
        which,
        n_max,
        monotone: first_violation.is_none(),
        first_violation,
        final_value: prev,
        limit,
        final_gap: (prev - limit).abs(),
    })
}

/// Outcome of overlaying consecutive-base CVT generators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncrementAnalysis {
    pub base: u64,
    pub render_side: u64,
    /// Side of the overflow generator at its native cell granularity.
    pub generator_side: u64,
    pub generator_cells: u64,
    /// Substitution depth the overflow generator was iterated to.
    pub depth: u32,
    pub fit: BoxCountFit,
}

pub fn default_render_side(n: Base) -> Result<u64> {
    let n = n.get();
    n.checked_mul(n - 1)
        .and_then(|g| g.checked_pow(3))
        .ok_or(Error::RangeOverflow)
}

/// Rasterizes `lower` and `upper` onto one `render_side × render_side`
/// square, keeps the pixels set in `upper` but clear in `lower`, and
/// returns that mask as a depth-1 generator at the coarsest cell size on
/// which it is constant.
pub fn overflow_generator(
    lower: &IndicatorGrid,
    upper: &IndicatorGrid,
    render_side: u64,
    cap: u64,
) -> Result<IndicatorGrid> {
    let (lo, hi) = (lower.side() as u64, upper.side() as u64);
    if render_side == 0 || !render_side.is_multiple_of(lo) || !render_side.is_multiple_of(hi) {
        return Err(Error::InvalidArgument(format!(
            "render side {render_side} must be a common multiple of {lo} and {hi}"
        )));
    }
    if render_side > cap {
        return Err(Error::GridTooLarge {
            side: render_side,
            cap,
        });
    }
    let side = render_side as usize;
    let (lo_px, hi_px) = (side / lower.side(), side / upper.side());
    let mask: Vec<bool> = (0..side * side)
        .map(|p| {
            let (y, x) = (p / side, p % side);
            upper.get(y / hi_px, x / hi_px) && !lower.get(y / lo_px, x / lo_px)
        })
        .collect();
    if !mask.contains(&true) {
        return Err(Error::DegenerateGrid("overflow mask is empty"));
    }

    let block_constant = |c: usize| {
        (0..side).all(|y| {
            (0..side).all(|x| mask[y * side + x] == mask[(y - y % c) * side + (x - x % c)])
        })
    };
    let cell = (1..=side)
        .rev()
        .filter(|c| side.is_multiple_of(*c))
        .find(|&c| block_constant(c))
        .unwrap_or(1);
    let g = (side / cell) as u64;
    if g < 2 {
        return Err(Error::DegenerateGrid("overflow mask fills the whole square"));
    }
    let spec = GridSpec::new(Base::new(g)?, 1)?.with_cap(cap);
    IndicatorGrid::from_fn(&spec, |i, j| mask[(i * cell) * side + j * cell])
}

/// Overflow of the `(n-1)`-ary CVT zero-set generator by the `n`-ary one,
/// iterated as a substitution system and box-counted.
pub fn increment_analysis(n: Base, render_side: u64) -> Result<IncrementAnalysis> {
    overflow_analysis(n, render_side, false)
}

/// As [`increment_analysis`], optionally with the two generators exchanged.
pub fn overflow_analysis(n: Base, render_side: u64, swapped: bool) -> Result<IncrementAnalysis> {
    if n.get() < 3 {
        return Err(Error::InvalidArgument(format!(
            "increment analysis needs base >= 3, got {n}"
        )));
    }
    let q = PatternQuery::cvt_zero();
    let mut lower = ifs_generator(Base::new(n.get() - 1)?, &q)?;
    let mut upper = ifs_generator(n, &q)?;
    if swapped {
        std::mem::swap(&mut lower, &mut upper);
    }
    let cap = crate::grid::DEFAULT_DENSE_CAP;
    let gen = overflow_generator(&lower, &upper, render_side, cap)?;
    let g = gen.side() as u64;

    let mut depth = 1u32;
    while g.checked_pow(depth + 1).is_some_and(|s| s <= cap) {
        depth += 1;
    }
    if depth < 2 {
        return Err(Error::GridTooLarge { side: g * g, cap });
    }
    let fractal = iterate_generator(&gen, depth)?;
    Ok(IncrementAnalysis {
        base: n.get(),
        render_side,
        generator_side: g,
        generator_cells: gen.count_ones(),
        depth,
        fit: box_count(&fractal)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{indicator, PatternQuery};

    fn b(n: u64) -> Base {
        Base::new(n).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        assert!((similarity_dim_cvt(b(2)) - 1.584962501).abs() < 1e-9);
        assert!((similarity_dim_cvt(b(5)) - 1.682606194).abs() < 1e-9);
        assert!((similarity_dim_cvt(b(29)) - 1.804221054).abs() < 1e-9);
        assert!((similarity_dim_evt(b(2)) - 1.584962501).abs() < 1e-9);
        assert!((similarity_dim_evt(b(4)) - 1.403677461).abs() < 1e-9);
        let d29 = similarity_dim_evt(b(29));
        assert!((d29 - 57f64.ln() / 29f64.ln()).abs() < 1e-15);
        assert!((d29 - 1.200_69).abs() < 1e-5);
    }

    #[test]
    fn large_base_path_agrees() {
        // the log-sum branch is taken only for huge n; check continuity near the switch
        let n = 94_906_265u64; // n(n+1) just above 2^53
        let direct = ((n as f64) * ((n + 1) as f64) / 2.0).ln() / (n as f64).ln();
        assert!((similarity_dim_cvt(b(n)) - direct).abs() < 1e-12);
        assert!(similarity_dim_cvt(b(u64::MAX / 2)) < 2.0);
    }

    #[test]
    fn table_shapes() {
        let rows = dimension_table(b(2), b(29), Family::Cvt).unwrap();
        assert_eq!(rows.len(), 28);
        assert_eq!(rows[0].copies, 3);
        assert_eq!(rows[3].copies, 15);
        assert_eq!(rows[3].scale_denominator, 5);
        let evt = dimension_table(b(2), b(2), Family::Evt).unwrap();
        assert_eq!(evt.len(), 1);
        assert_eq!(evt[0].dimension, rows[0].dimension);
        assert!(dimension_table(b(5), b(4), Family::Cvt).is_err());
        for r in dimension_table(b(2), b(300), Family::Evt).unwrap() {
            assert!((r.dimension - (r.copies as f64).ln() / (r.base.get() as f64).ln()).abs() < 1e-14);
            assert!(r.dimension > 1.0 && r.dimension < 2.0);
        }
    }

    #[test]
    fn erratum_lookup() {
        assert_eq!(known_erratum(Family::Evt, b(29)), Some(1.195425616));
        assert_eq!(known_erratum(Family::Evt, b(28)), None);
        assert_eq!(known_erratum(Family::Cvt, b(29)), None);
    }

    #[test]
    fn box_count_full_and_point() {
        let s = GridSpec::new(b(3), 4).unwrap();
        let full = IndicatorGrid::from_fn(&s, |_, _| true).unwrap();
        let fit = box_count(&full).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert_eq!(fit.r2, 1.0);

        let mut point = IndicatorGrid::empty(&s).unwrap();
        point.set(40, 13, true);
        let fit = box_count(&point).unwrap();
        assert_eq!(fit.counts, vec![1; 5]);
        assert_eq!(fit.slope, 0.0);

        let empty = IndicatorGrid::empty(&s).unwrap();
        assert!(matches!(box_count(&empty), Err(Error::DegenerateGrid(_))));
        let shallow = IndicatorGrid::from_fn(&GridSpec::new(b(3), 1).unwrap(), |_, _| true).unwrap();
        assert!(box_count(&shallow).is_err());
    }

    #[test]
    fn box_count_exact_counts() {
        for (family, n) in [(Family::Cvt, 2), (Family::Cvt, 3), (Family::Evt, 3), (Family::Evt, 4)] {
            let depth = 4;
            let s = GridSpec::new(b(n), depth).unwrap();
            let fit = box_count(&indicator(&s, &family.query()).unwrap()).unwrap();
            let copies = family.copies(b(n)).unwrap();
            for (j, &c) in fit.counts.iter().enumerate() {
                assert_eq!(c, copies.pow(depth - j as u32));
            }
            assert!((fit.slope - family.dimension(b(n))).abs() < 1e-12);
            assert!(fit.r2 > 0.999_999);
            assert!(fit.counts.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn box_count_irregular_set_is_bounded() {
        let s = GridSpec::new(b(2), 6).unwrap();
        let g = IndicatorGrid::from_fn(&s, |a, b| (a * 7 + b * 13) % 5 == 0 || a == b).unwrap();
        let fit = box_count(&g).unwrap();
        assert!((0.0..=1.0).contains(&fit.r2));
        assert!(fit.counts.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn convergence_small() {
        let r = verify_convergence(Family::Cvt, 3).unwrap();
        assert!(r.monotone);
        assert!((r.final_value - 1.630929754).abs() < 1e-9);
        let r = verify_convergence(Family::Evt, 1000).unwrap();
        assert!(r.monotone);
        assert!(r.final_value > 1.0);
        assert_eq!(r.final_gap, r.final_value - 1.0);
        assert!(verify_convergence(Family::Cvt, 2).is_err());
    }

    #[test]
    fn overflow_generator_of_ternary_over_binary() {
        let q = PatternQuery::cvt_zero();
        let lo = ifs_generator(b(2), &q).unwrap();
        let hi = ifs_generator(b(3), &q).unwrap();
        let gen = overflow_generator(&lo, &hi, 216, 16384).unwrap();
        // the only ternary pixels outside the binary L lie where the
        // central ternary cell meets the clear binary quadrant
        assert_eq!(gen.side(), 6);
        assert_eq!(gen.iter_ones().collect::<Vec<_>>(), vec![(3, 3)]);
        // resolution does not change the native generator
        assert_eq!(overflow_generator(&lo, &hi, 36, 16384).unwrap(), gen);

        assert!(matches!(
            overflow_generator(&lo, &hi, 8, 16384),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            overflow_generator(&hi, &hi, 6, 16384),
            Err(Error::DegenerateGrid(_))
        ));
    }

    #[test]
    fn increment_rejects_binary() {
        assert!(matches!(
            increment_analysis(b(2), 8),
            Err(Error::InvalidArgument(_))
        ));
    }
}
