//! Truncated dyadic systems.
//!
//! An interval is identified by `(grid, j, k)` and has length `2^{-j}`. Its left
//! endpoint is `(3k + σ_j) / (3·2^j)` where `σ_j` is the grid's shift numerator:
//! `0` for the standard grid and `(-1)^j` for the one-third shifted grid. All
//! containment and indexing is done on these integer numerators, so endpoints are
//! never accumulated in floating point.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Hard cap on the number of finest cells of any window.
pub const MAX_CELLS: usize = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DyadicGrid {
    /// `D⁰`: intervals `2^{-j}[k, k+1)`.
    Standard,
    /// `D¹`: intervals `2^{-j}([k, k+1) + (-1)^j/3)`.
    ThirdShift,
}

impl DyadicGrid {
    pub const PAIR: [DyadicGrid; 2] = [DyadicGrid::Standard, DyadicGrid::ThirdShift];

    /// Numerator `σ_j` of the shift `σ_j / 3` at scale `j`.
    pub fn shift_numerator(self, j: i32) -> i64 {
        match self {
            DyadicGrid::Standard => 0,
            DyadicGrid::ThirdShift => {
                if j.rem_euclid(2) == 0 {
                    1
                } else {
                    -1
                }
            }
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DyadicGrid::Standard => "D0",
            DyadicGrid::ThirdShift => "D1",
        }
    }

    /// The interval of this grid at scale `j` containing `x`.
    pub fn interval_containing(self, j: i32, x: f64) -> DyadicInterval {
        let shift = self.shift_numerator(j) as f64 / 3.0;
        let k = (x * pow2(j) - shift).floor() as i64;
        // Guard against rounding at an endpoint.
        let mut iv = DyadicInterval { grid: self, j, k };
        if x < iv.lo() {
            iv.k -= 1;
        } else if x >= iv.hi() {
            iv.k += 1;
        }
        iv
    }
}

impl fmt::Display for DyadicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// `2^j` as an exact power of two.
pub(crate) fn pow2(j: i32) -> f64 {
    2f64.powi(j)
}

/// A half-open interval `[lo, hi)` with arbitrary real endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
}

impl Span {
    pub fn new(lo: f64, hi: f64) -> Self {
        Span { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn contains_span(&self, other: &Span) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// The concentric interval `s` times as long.
    pub fn dilate(&self, s: f64) -> Span {
        let c = self.midpoint();
        let r = 0.5 * s * self.len();
        Span::new(c - r, c + r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub grid: DyadicGrid,
    pub j: i32,
    pub k: i64,
}

impl DyadicInterval {
    pub fn new(grid: DyadicGrid, j: i32, k: i64) -> Self {
        DyadicInterval { grid, j, k }
    }

    /// Left endpoint numerator over `3·2^j`.
    fn start_numerator(&self) -> i128 {
        3 * self.k as i128 + self.grid.shift_numerator(self.j) as i128
    }

    /// Left endpoint numerator over `3·2^scale`, for `scale >= j`.
    pub(crate) fn lo_at(&self, scale: i32) -> i128 {
        debug_assert!(scale >= self.j);
        self.start_numerator() << (scale - self.j)
    }

    pub(crate) fn hi_at(&self, scale: i32) -> i128 {
        (self.start_numerator() + 3) << (scale - self.j)
    }

    pub fn len(&self) -> f64 {
        pow2(-self.j)
    }

    pub fn lo(&self) -> f64 {
        if self.grid.shift_numerator(self.j) == 0 {
            self.k as f64 * pow2(-self.j)
        } else {
            (self.start_numerator() as f64 / 3.0) * pow2(-self.j)
        }
    }

    pub fn hi(&self) -> f64 {
        if self.grid.shift_numerator(self.j) == 0 {
            (self.k + 1) as f64 * pow2(-self.j)
        } else {
            ((self.start_numerator() + 3) as f64 / 3.0) * pow2(-self.j)
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo() + self.hi())
    }

    pub fn span(&self) -> Span {
        Span::new(self.lo(), self.hi())
    }

    /// Left and right children `(I₋, I₊)`.
    pub fn children(&self) -> (DyadicInterval, DyadicInterval) {
        let j = self.j + 1;
        let num = 2 * self.start_numerator() - self.grid.shift_numerator(j) as i128;
        debug_assert_eq!(num.rem_euclid(3), 0, "grids are nested");
        let k = (num / 3) as i64;
        (
            DyadicInterval::new(self.grid, j, k),
            DyadicInterval::new(self.grid, j, k + 1),
        )
    }

    pub fn parent(&self) -> DyadicInterval {
        let j = self.j - 1;
        // The parent starts at the largest scale-(j) endpoint not exceeding ours.
        let sigma = self.grid.shift_numerator(j) as i128;
        let here = self.start_numerator();
        let k = (here - 2 * sigma).div_euclid(6) as i64;
        DyadicInterval::new(self.grid, j, k)
    }

    pub fn sibling(&self) -> DyadicInterval {
        let (l, r) = self.parent().children();
        if l == *self {
            r
        } else {
            l
        }
    }

    /// Exact containment `other ⊂ self` (same grid not required).
    pub fn contains(&self, other: &DyadicInterval) -> bool {
        if other.j < self.j {
            return false;
        }
        let s = other.j;
        self.lo_at(s) <= other.lo_at(s) && other.hi_at(s) <= self.hi_at(s)
    }

    pub fn id(&self) -> String {
        format!("{}:{}:{}", self.grid.label(), self.j, self.k)
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}, {})", self.grid, self.lo(), self.hi())
    }
}

/// Spatial window `[lo, hi)` and the scale range `j_min ..= j_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationWindow {
    pub lo: f64,
    pub hi: f64,
    pub j_min: i32,
    pub j_max: i32,
}

impl Default for TruncationWindow {
    fn default() -> Self {
        TruncationWindow { lo: -4.0, hi: 4.0, j_min: -2, j_max: 7 }
    }
}

impl TruncationWindow {
    pub fn new(lo: f64, hi: f64, j_min: i32, j_max: i32) -> Result<Self> {
        let w = TruncationWindow { lo, hi, j_min, j_max };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.hi <= self.lo {
            return Err(LabError::config(format!("empty window [{}, {})", self.lo, self.hi)));
        }
        if self.j_min > self.j_max {
            return Err(LabError::config(format!(
                "j_min = {} exceeds j_max = {}",
                self.j_min, self.j_max
            )));
        }
        if self.j_max > 40 || self.j_min < -40 {
            return Err(LabError::config("scale range out of bounds"));
        }
        for (name, x) in [("lo", self.lo), ("hi", self.hi)] {
            let coarse = x * pow2(self.j_min);
            if coarse.fract() != 0.0 {
                return Err(LabError::config(format!(
                    "window {name} = {x} is not a multiple of the coarsest length {}",
                    pow2(-self.j_min)
                )));
            }
        }
        Ok(())
    }

    pub fn span(&self) -> Span {
        Span::new(self.lo, self.hi)
    }

    pub fn cell_len(&self) -> f64 {
        pow2(-self.j_max)
    }

    pub fn n_cells(&self) -> usize {
        ((self.hi - self.lo) * pow2(self.j_max)) as usize
    }

    /// Window endpoints as numerators over `3·2^j_max`.
    fn bounds_at_finest(&self) -> (i128, i128) {
        let s = pow2(self.j_max);
        (3 * (self.lo * s) as i128, 3 * (self.hi * s) as i128)
    }

    pub fn with_j_max(&self, j_max: i32) -> Result<Self> {
        TruncationWindow::new(self.lo, self.hi, self.j_min, j_max)
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Translations `k` at scale `j` whose intervals lie inside the window.
fn k_range(grid: DyadicGrid, window: &TruncationWindow, j: i32) -> Range<i64> {
    let (lo, hi) = window.bounds_at_finest();
    let shift = window.j_max - j;
    let sigma = grid.shift_numerator(j) as i128;
    let unit = 3i128 << shift;
    // (3k + σ)·2^shift >= lo  and  (3k + σ + 3)·2^shift <= hi
    let k_lo = div_ceil(lo - (sigma << shift), unit);
    let k_hi = (hi - (sigma << shift)).div_euclid(unit) - 1;
    k_lo as i64..(k_hi + 1).max(k_lo) as i64
}

fn div_ceil(a: i128, b: i128) -> i128 {
    -((-a).div_euclid(b))
}

/// All intervals of `grid` inside the window at scales `j_min ..= j_max`,
/// scale-major then by translation.
pub fn enumerate_intervals(
    grid: DyadicGrid,
    window: &TruncationWindow,
) -> Result<Vec<DyadicInterval>> {
    window.validate()?;
    let mut out = Vec::new();
    for j in window.j_min..=window.j_max {
        out.extend(k_range(grid, window, j).map(|k| DyadicInterval::new(grid, j, k)));
    }
    Ok(out)
}

/// Haar function `h_I`: `+|I|^{-1/2}` on the left child, `-|I|^{-1/2}` on the right.
pub fn haar_eval(interval: &DyadicInterval, x: f64) -> f64 {
    let (lo, hi) = (interval.lo(), interval.hi());
    if x < lo || x >= hi {
        return 0.0;
    }
    let amp = interval.len().sqrt().recip();
    if x < interval.midpoint() {
        amp
    } else {
        -amp
    }
}

/// Find `Q ∈ D⁰ ∪ D¹` with `I ⊂ Q` and `|I| <= |Q| <= factor·|I|`, preferring the
/// smallest such `Q` and the standard grid on ties.
pub fn find_cover(interval: Span, factor: f64) -> Result<DyadicInterval> {
    let len = interval.len();
    if !(len > 0.0) || !(factor >= 1.0) {
        return Err(LabError::param("find_cover needs a nonempty interval and factor >= 1"));
    }
    let j_hi = (-len.log2()).floor() as i32;
    let j_lo = (-(factor * len).log2()).ceil() as i32;
    for j in (j_lo..=j_hi).rev() {
        for grid in DyadicGrid::PAIR {
            let q = grid.interval_containing(j, interval.lo);
            if q.span().contains_span(&interval) {
                return Ok(q);
            }
        }
    }
    Err(LabError::NoCover { lo: interval.lo, hi: interval.hi, factor })
}

/// A grid restricted to a window, with index maps from intervals to finest cells.
#[derive(Clone, Debug)]
pub struct DyadicSystem {
    grid: DyadicGrid,
    window: TruncationWindow,
    intervals: Vec<DyadicInterval>,
    // per scale (offset into `intervals`, k range)
    scales: Vec<(usize, Range<i64>)>,
}

impl DyadicSystem {
    pub fn new(grid: DyadicGrid, window: TruncationWindow) -> Result<Self> {
        window.validate()?;
        let mut intervals = Vec::new();
        let mut scales = Vec::new();
        for j in window.j_min..=window.j_max {
            let r = k_range(grid, &window, j);
            scales.push((intervals.len(), r.clone()));
            intervals.extend(r.map(|k| DyadicInterval::new(grid, j, k)));
        }
        Ok(DyadicSystem { grid, window, intervals, scales })
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn window(&self) -> &TruncationWindow {
        &self.window
    }

    pub fn intervals(&self) -> &[DyadicInterval] {
        &self.intervals
    }

    pub fn at_scale(&self, j: i32) -> &[DyadicInterval] {
        if j < self.window.j_min || j > self.window.j_max {
            return &[];
        }
        let (off, r) = &self.scales[(j - self.window.j_min) as usize];
        &self.intervals[*off..*off + (r.end - r.start) as usize]
    }

    /// Intervals whose Haar function is constant on finest cells (`j < j_max`).
    pub fn haar_intervals(&self) -> &[DyadicInterval] {
        let (off, _) = &self.scales[(self.window.j_max - self.window.j_min) as usize];
        &self.intervals[..*off]
    }

    /// Finest cells of this grid inside the window.
    pub fn cells(&self) -> &[DyadicInterval] {
        self.at_scale(self.window.j_max)
    }

    pub fn n_cells(&self) -> usize {
        self.cells().len()
    }

    pub fn cell_len(&self) -> f64 {
        self.window.cell_len()
    }

    pub fn index_of(&self, iv: &DyadicInterval) -> Option<usize> {
        if iv.grid != self.grid || iv.j < self.window.j_min || iv.j > self.window.j_max {
            return None;
        }
        let (off, r) = &self.scales[(iv.j - self.window.j_min) as usize];
        r.contains(&iv.k).then(|| off + (iv.k - r.start) as usize)
    }

    /// Cell indices covered by an interval of this grid.
    pub fn cell_range(&self, iv: &DyadicInterval) -> Range<usize> {
        debug_assert_eq!(iv.grid, self.grid);
        let jm = self.window.j_max;
        let sigma = self.grid.shift_numerator(jm) as i128;
        let k_first = ((iv.lo_at(jm) - sigma) / 3) as i64;
        let k0 = self.scales.last().map(|(_, r)| r.start).unwrap_or(0);
        let start = (k_first - k0) as usize;
        start..start + (1usize << (jm - iv.j))
    }

    /// Cell index containing `x`, if any.
    pub fn cell_containing(&self, x: f64) -> Option<usize> {
        let c = self.grid.interval_containing(self.window.j_max, x);
        self.index_of(&c).map(|i| i - self.scales.last().unwrap().0)
    }

    /// `h_I` sampled on the cells of this system (zero outside `I`).
    pub fn haar_values(&self, iv: &DyadicInterval) -> Vec<(usize, f64)> {
        let r = self.cell_range(iv);
        let half = r.start + r.len() / 2;
        let amp = iv.len().sqrt().recip();
        r.map(|c| (c, if c < half { amp } else { -amp })).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(j_min: i32, j_max: i32) -> TruncationWindow {
        TruncationWindow::new(0.0, 1.0, j_min, j_max).unwrap()
    }

    #[test]
    fn counts_on_unit_window() {
        let v = enumerate_intervals(DyadicGrid::Standard, &unit(0, 2)).unwrap();
        assert_eq!(v.len(), 7);
        let v = enumerate_intervals(DyadicGrid::Standard, &unit(0, 0)).unwrap();
        assert_eq!(v, vec![DyadicInterval::new(DyadicGrid::Standard, 0, 0)]);
        assert_eq!((v[0].lo(), v[0].hi()), (0.0, 1.0));
    }

    #[test]
    fn third_shift_matches_brute_force() {
        let w = TruncationWindow::new(0.0, 2.0, 0, 1).unwrap();
        let got = enumerate_intervals(DyadicGrid::ThirdShift, &w).unwrap();
        // brute force over a generous k range using float endpoints
        let mut want = Vec::new();
        for j in 0..=1 {
            for k in -20..20 {
                let iv = DyadicInterval::new(DyadicGrid::ThirdShift, j, k);
                if iv.lo() >= -1e-12 && iv.hi() <= 2.0 + 1e-12 {
                    want.push(iv);
                }
            }
        }
        assert_eq!(got, want);
        // scale 0: [1/3, 4/3); scale 1: [1/3, 5/6), [5/6, 4/3), [4/3, 11/6)
        assert_eq!(got.len(), 4);
    }

    #[test]
    fn invalid_windows() {
        assert!(TruncationWindow::new(1.0, 1.0, 0, 2).is_err());
        assert!(TruncationWindow::new(0.0, 1.0, 3, 2).is_err());
        assert!(TruncationWindow::new(0.5, 1.0, 0, 2).is_err());
    }

    #[test]
    fn haar_values() {
        let i = DyadicInterval::new(DyadicGrid::Standard, 0, 0);
        assert_eq!(haar_eval(&i, 0.25), 1.0);
        assert_eq!(haar_eval(&i, 0.75), -1.0);
        assert_eq!(haar_eval(&i, 1.0), 0.0);
        let i = DyadicInterval::new(DyadicGrid::Standard, -1, 0);
        assert!((haar_eval(&i, 0.5) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn children_partition_parent() {
        for grid in DyadicGrid::PAIR {
            for j in -3..6 {
                for k in -5..5 {
                    let i = DyadicInterval::new(grid, j, k);
                    let (l, r) = i.children();
                    let s = j + 1;
                    assert_eq!(l.lo_at(s), i.lo_at(s));
                    assert_eq!(l.hi_at(s), r.lo_at(s));
                    assert_eq!(r.hi_at(s), i.hi_at(s));
                    assert_eq!(l.parent(), i);
                    assert_eq!(r.parent(), i);
                    assert_eq!(l.sibling(), r);
                    assert!(i.contains(&l) && i.contains(&r));
                    assert_eq!(l.len() * 2.0, i.len());
                }
            }
        }
    }

    #[test]
    fn cell_ranges_are_consistent() {
        let w = TruncationWindow::new(-2.0, 2.0, -1, 5).unwrap();
        for grid in DyadicGrid::PAIR {
            let sys = DyadicSystem::new(grid, w).unwrap();
            let cells = sys.cells();
            for (n, iv) in sys.intervals().iter().enumerate() {
                assert_eq!(sys.index_of(iv), Some(n));
                let r = sys.cell_range(iv);
                assert!(r.end <= cells.len());
                assert!((cells[r.start].lo() - iv.lo()).abs() < 1e-12);
                assert!((cells[r.end - 1].hi() - iv.hi()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn standard_grid_tiles_window_at_every_scale() {
        let w = TruncationWindow::default();
        let sys = DyadicSystem::new(DyadicGrid::Standard, w).unwrap();
        for j in w.j_min..=w.j_max {
            let ivs = sys.at_scale(j);
            assert_eq!(ivs.first().unwrap().lo(), w.lo);
            assert_eq!(ivs.last().unwrap().hi(), w.hi);
            for pair in ivs.windows(2) {
                assert_eq!(pair[0].hi(), pair[1].lo());
            }
        }
    }

    #[test]
    fn cover_examples() {
        let q = find_cover(Span::new(0.0, 0.5), 4.0).unwrap();
        assert_eq!(q, DyadicInterval::new(DyadicGrid::Standard, 1, 0));
        let i = Span::new(0.4, 0.6);
        let q = find_cover(i, 4.0).unwrap();
        assert!(q.span().contains_span(&i) && q.len() <= 0.8 + 1e-12);
    }

    #[test]
    fn cover_factor_four_counterexample() {
        // Straddles 1 (a D⁰ endpoint at scales 0 and 1) and 4/3 (a D¹ endpoint at
        // scales 0 and 1); the next scale up has length 2 > 4·0.45.
        let i = Span::new(0.9, 1.35);
        assert!(matches!(find_cover(i, 4.0), Err(LabError::NoCover { .. })));
        assert!(find_cover(i, 6.0).is_ok());
    }
}
