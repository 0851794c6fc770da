//! Positive weights on the line.
//!
//! A [`Weight`] is `c · Π_i base_i(x)^{e_i}` where each base is either `|x − x₀|`
//! or a truncated pathological weight. Integrals of `w^s` are closed form when a
//! single base is present and fall back to graded Gauss–Legendre otherwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dyadic::{DyadicGrid, DyadicInterval, DyadicSystem, Span, TruncationWindow};
use crate::error::{LabError, Result};
use crate::quadrature;

/// Default center of power weights, chosen off every dyadic endpoint.
pub const DEFAULT_CENTER: f64 = 1.0 / 3.0;

/// Largest level count of a pathological weight whose peaks f64 can still place.
pub const MAX_PATHOLOGICAL_LEVELS: u32 = 5;

/// `λ(x) = max_{1≤j≤J} φ_{δ_j}(2^{n_j} x + 2^{-n_j-1})` with `n_j = 2^j`,
/// `δ_j = 2^{-A n_j}` and `φ_δ = δ^{-α}` on `⋃_m (m, m+δ)`, `1` elsewhere,
/// where `α = (1 + 1/r)/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pathological {
    r: f64,
    levels: u32,
    a: f64,
}

impl Pathological {
    pub fn new(r: f64, levels: u32, a: f64) -> Result<Self> {
        if !(r > 1.0) || !r.is_finite() {
            return Err(LabError::config(format!("pathological weight needs r > 1, got {r}")));
        }
        if levels == 0 || levels > MAX_PATHOLOGICAL_LEVELS {
            return Err(LabError::config(format!(
                "pathological weight needs 1 <= J <= {MAX_PATHOLOGICAL_LEVELS}, got {levels}"
            )));
        }
        let alpha = 0.5 * (1.0 + 1.0 / r);
        if !(a * (1.0 - alpha) > 2.0) {
            return Err(LabError::config(format!(
                "pathological weight needs A(1 - α) > 2, got A = {a}, α = {alpha}"
            )));
        }
        let p = Pathological { r, levels, a };
        if p.log2_width(levels) < -1000.0 {
            return Err(LabError::config("pathological peaks narrower than f64 resolution"));
        }
        Ok(p)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn alpha(&self) -> f64 {
        0.5 * (1.0 + 1.0 / self.r)
    }

    /// `n_j = 2^j`.
    pub fn frequency(&self, level: u32) -> f64 {
        2f64.powi(level as i32)
    }

    /// `log₂ δ_j = −A n_j`.
    pub fn log2_delta(&self, level: u32) -> f64 {
        -self.a * self.frequency(level)
    }

    /// `log₂` of the peak height `δ_j^{-α}`.
    pub fn log2_height(&self, level: u32) -> f64 {
        -self.alpha() * self.log2_delta(level)
    }

    pub fn height(&self, level: u32) -> f64 {
        self.log2_height(level).exp2()
    }

    /// Width of one level-`j` peak in `x`: `δ_j 2^{-n_j}`.
    fn log2_width(&self, level: u32) -> f64 {
        self.log2_delta(level) - self.frequency(level)
    }

    /// Split `2^{n} x + 2^{-n-1}` into integer and fractional parts.
    fn rescaled(&self, level: u32, x: f64) -> (f64, f64) {
        let n = self.frequency(level) as i32;
        let s = x * 2f64.powi(n);
        let m = s.floor();
        let mut phi = (s - m) + 2f64.powi(-n - 1);
        let mut m = m;
        if phi >= 1.0 {
            phi -= 1.0;
            m += 1.0;
        }
        (m, phi)
    }

    /// Total length of level-`j` peaks inside `span`.
    pub fn overlap(&self, level: u32, span: Span) -> f64 {
        let delta = self.log2_delta(level).exp2();
        let cum = |x: f64| {
            let (m, phi) = self.rescaled(level, x);
            (m, phi.min(delta))
        };
        let (ma, pa) = cum(span.lo);
        let (mb, pb) = cum(span.hi);
        let scale = 2f64.powi(-(self.frequency(level) as i32));
        ((mb - ma) * delta + (pb - pa)) * scale
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut v: f64 = 1.0;
        for level in 1..=self.levels {
            let delta = self.log2_delta(level).exp2();
            let (_, phi) = self.rescaled(level, x);
            if phi > 0.0 && phi < delta {
                v = v.max(self.height(level));
            }
        }
        v
    }

    /// `∫_span λ^s`. Peaks of different levels are disjoint, so the excess over
    /// `1` adds up level by level.
    pub fn integral_pow(&self, span: Span, s: f64) -> f64 {
        let mut total = span.len();
        for level in 1..=self.levels {
            let ov = self.overlap(level, span);
            if ov <= 0.0 {
                continue;
            }
            let log_h = s * self.log2_height(level);
            total += (log_h + ov.log2()).exp2() - ov;
        }
        total
    }

    /// Left endpoints of level-`j` peaks meeting `span`, with the peak width.
    pub fn peaks_in(&self, level: u32, span: Span) -> (Vec<f64>, f64) {
        let n = self.frequency(level) as i32;
        let width = self.log2_width(level).exp2();
        let (ma, _) = self.rescaled(level, span.lo);
        let (mb, _) = self.rescaled(level, span.hi);
        let shift = 2f64.powi(-n - 1);
        let scale = 2f64.powi(-n);
        let mut out = Vec::new();
        let mut m = ma;
        while m <= mb {
            let x = (m - shift) * scale;
            if x + width > span.lo && x < span.hi {
                out.push(x);
            }
            m += 1.0;
        }
        (out, width)
    }

    /// Number of level-`j` peaks meeting `span` (no enumeration).
    fn peak_count(&self, level: u32, span: Span) -> f64 {
        let (ma, _) = self.rescaled(level, span.lo);
        let (mb, _) = self.rescaled(level, span.hi);
        mb - ma + 1.0
    }

    /// `max ⟨λ^e⟩_B ⟨λ^{-e}⟩_B` over intervals `B` that start at a peak and have
    /// length `2^m` peak widths, `m = 0..=8`. Computed in peak-relative
    /// coordinates since such `B` are not representable in `f64` beyond level 2.
    pub fn peak_a2(&self, e: f64) -> f64 {
        let mut best: f64 = 1.0;
        for level in 1..=self.levels {
            let h = (e * self.log2_height(level)).exp2();
            for m in 0..=8 {
                let frac = 2f64.powi(-m);
                best = best.max((1.0 + (h - 1.0) * frac) * (1.0 + (h.recip() - 1.0) * frac));
            }
        }
        best
    }

    fn label(&self) -> String {
        format!("pathological(r={},J={},A={})", self.r, self.levels, self.a)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Base {
    /// `|x − center|`
    AbsPower { center: f64 },
    Pathological(Pathological),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    pub base: Base,
    pub exponent: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Weight {
    scale: f64,
    factors: Vec<Factor>,
}

impl Weight {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(LabError::DegenerateWeight(format!("constant weight {c}")));
        }
        Ok(Weight { scale: c, factors: Vec::new() })
    }

    pub fn one() -> Self {
        Weight { scale: 1.0, factors: Vec::new() }
    }

    /// `|x − center|^exponent`.
    pub fn power(exponent: f64, center: f64) -> Self {
        Weight {
            scale: 1.0,
            factors: vec![Factor { base: Base::AbsPower { center }, exponent }],
        }
        .normalized()
    }

    pub fn pathological(r: f64, levels: u32, a: f64) -> Result<Self> {
        let p = Pathological::new(r, levels, a)?;
        Ok(Weight {
            scale: 1.0,
            factors: vec![Factor { base: Base::Pathological(p), exponent: 1.0 }],
        })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_constant(&self) -> bool {
        self.factors.is_empty()
    }

    fn normalized(mut self) -> Self {
        let mut merged: Vec<Factor> = Vec::new();
        for f in self.factors.drain(..) {
            if let Some(m) = merged.iter_mut().find(|m| m.base == f.base) {
                m.exponent += f.exponent;
            } else {
                merged.push(f);
            }
        }
        merged.retain(|f| f.exponent != 0.0);
        self.factors = merged;
        self
    }

    /// `w^s`.
    pub fn powf(&self, s: f64) -> Weight {
        Weight {
            scale: self.scale.powf(s),
            factors: self
                .factors
                .iter()
                .map(|f| Factor { base: f.base.clone(), exponent: f.exponent * s })
                .collect(),
        }
        .normalized()
    }

    pub fn inverse(&self) -> Weight {
        self.powf(-1.0)
    }

    pub fn mul(&self, other: &Weight) -> Weight {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Weight { scale: self.scale * other.scale, factors }.normalized()
    }

    /// Shift every power center by `dx`.
    pub fn translated(&self, dx: f64) -> Result<Weight> {
        let mut w = self.clone();
        for f in &mut w.factors {
            match &mut f.base {
                Base::AbsPower { center } => *center += dx,
                Base::Pathological(_) => {
                    return Err(LabError::config("pathological weights cannot be translated"))
                }
            }
        }
        Ok(w)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.factors.iter().fold(self.scale, |acc, f| {
            let b = match &f.base {
                Base::AbsPower { center } => (x - center).abs(),
                Base::Pathological(p) => p.eval(x),
            };
            acc * b.powf(f.exponent)
        })
    }

    pub fn integral(&self, span: Span) -> Result<f64> {
        self.integral_pow(span, 1.0)
    }

    pub fn average(&self, span: Span) -> Result<f64> {
        Ok(self.integral(span)? / span.len())
    }

    /// `∫_span w^s`.
    pub fn integral_pow(&self, span: Span, s: f64) -> Result<f64> {
        if span.is_empty() {
            return Ok(0.0);
        }
        let c = self.scale.powf(s);
        let v = match self.factors.as_slice() {
            [] => span.len(),
            [Factor { base: Base::AbsPower { center }, exponent }] => {
                power_integral(span, *center, exponent * s).ok_or_else(|| self.diverged(span, s))?
            }
            [Factor { base: Base::Pathological(p), exponent }] => p.integral_pow(span, exponent * s),
            _ => self.composite_integral(span, s)?,
        };
        let v = c * v;
        if !v.is_finite() {
            return Err(self.diverged(span, s));
        }
        Ok(v)
    }

    fn diverged(&self, span: Span, s: f64) -> LabError {
        LabError::DivergedIntegral {
            what: format!("({})^{s}", self.label()),
            lo: span.lo,
            hi: span.hi,
        }
    }

    /// Product of power factors (and at most one pathological factor) by quadrature.
    fn composite_integral(&self, span: Span, s: f64) -> Result<f64> {
        let mut powers: Vec<(f64, f64)> = Vec::new();
        let mut path: Option<(&Pathological, f64)> = None;
        for f in &self.factors {
            match &f.base {
                Base::AbsPower { center } => powers.push((*center, f.exponent * s)),
                Base::Pathological(p) => {
                    if path.is_some() {
                        return Err(LabError::config(
                            "products of distinct pathological weights are not supported",
                        ));
                    }
                    path = Some((p, f.exponent * s));
                }
            }
        }
        for &(c, g) in &powers {
            if g <= -1.0 && c >= span.lo && c <= span.hi {
                return Err(self.diverged(span, s));
            }
        }
        let smooth = |x: f64| powers.iter().fold(1.0, |acc, &(c, g)| acc * (x - c).abs().powf(g));
        let base = power_product_integral(span, &powers, &smooth);
        let Some((p, g)) = path else {
            return Ok(base);
        };
        // ∫ f·P^g = ∫ f + Σ_levels (h^g − 1) Σ_peaks ∫_peak f, with f frozen on each peak.
        let mut total = base;
        for level in 1..=p.levels() {
            let excess = (g * p.log2_height(level)).exp2() - 1.0;
            if excess == 0.0 {
                continue;
            }
            let count = p.peak_count(level, span);
            let peak_mass = if count <= 4096.0 {
                let (starts, width) = p.peaks_in(level, span);
                starts
                    .iter()
                    .map(|&x| {
                        let lo = x.max(span.lo);
                        let hi = (x + width).min(span.hi);
                        if hi > lo {
                            smooth(0.5 * (lo + hi)) * (hi - lo)
                        } else {
                            0.0
                        }
                    })
                    .sum::<f64>()
            } else {
                p.overlap(level, span) * base / span.len()
            };
            total += excess * peak_mass;
        }
        Ok(total)
    }

    pub fn label(&self) -> String {
        if self.factors.is_empty() {
            return format!("{}", self.scale);
        }
        let mut parts = Vec::new();
        if self.scale != 1.0 {
            parts.push(format!("{}", self.scale));
        }
        for f in &self.factors {
            let base = match &f.base {
                Base::AbsPower { center } => format!("|x-{center:.6}|"),
                Base::Pathological(p) => p.label(),
            };
            if f.exponent == 1.0 {
                parts.push(base);
            } else {
                parts.push(format!("{base}^{}", f.exponent));
            }
        }
        parts.join("*")
    }

    /// [`Pathological::peak_a2`] when `w` is a single pathological factor.
    pub fn peak_a2(&self) -> Option<f64> {
        match self.factors.as_slice() {
            [Factor { base: Base::Pathological(p), exponent }] => Some(p.peak_a2(*exponent)),
            _ => None,
        }
    }

    /// Cell averages `w(cell)/|cell|` on the given cells.
    pub fn cell_averages(&self, cells: &[DyadicInterval]) -> Result<Vec<f64>> {
        cells.iter().map(|c| self.average(c.span())).collect()
    }
}

/// `∫_{span} |x − c|^g dx`, `None` when divergent.
fn power_integral(span: Span, c: f64, g: f64) -> Option<f64> {
    let a = span.lo - c;
    let b = span.hi - c;
    let len = span.len();
    if a >= 0.0 {
        same_side(a, len, g)
    } else if b <= 0.0 {
        same_side(-b, len, g)
    } else {
        Some(same_side(0.0, -a, g)? + same_side(0.0, b, g)?)
    }
}

/// `∫_{near}^{near+len} t^g dt` for `near >= 0`, written to avoid cancellation.
fn same_side(near: f64, len: f64, g: f64) -> Option<f64> {
    let q = g + 1.0;
    if near == 0.0 {
        return (q > 0.0).then(|| len.powf(q) / q);
    }
    let log_ratio = (len / near).ln_1p();
    if q == 0.0 {
        Some(log_ratio)
    } else {
        Some(near.powf(q) * (q * log_ratio).exp_m1() / q)
    }
}

fn power_product_integral(span: Span, powers: &[(f64, f64)], f: &impl Fn(f64) -> f64) -> f64 {
    let mut cuts: Vec<f64> = powers
        .iter()
        .filter(|(c, _)| *c > span.lo && *c < span.hi)
        .map(|(c, _)| *c)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let is_center = |x: f64| powers.iter().any(|(c, _)| *c == x);
    // Integrand at distance t from the center `at`, on the side given by `dir`;
    // the factor centered at `at` uses `t` directly.
    let near = |at: f64, dir: f64, t: f64| {
        powers.iter().fold(1.0, |acc, &(c, g)| {
            let d = if c == at { t } else { (at + dir * t - c).abs() };
            acc * d.powf(g)
        })
    };
    let mut points = vec![span.lo];
    points.extend(cuts);
    points.push(span.hi);
    let mut total = 0.0;
    for w in points.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        match (is_center(lo), is_center(hi)) {
            (false, false) => total += quadrature::refine_once(lo, hi, f).0,
            (true, false) => total += quadrature::graded(hi - lo, |t| near(lo, 1.0, t)),
            (false, true) => total += quadrature::graded(hi - lo, |t| near(hi, -1.0, t)),
            (true, true) => {
                let half = 0.5 * (hi - lo);
                total += quadrature::graded(half, |t| near(lo, 1.0, t))
                    + quadrature::graded(half, |t| near(hi, -1.0, t));
            }
        }
    }
    total
}

/// Source and target weights `(μ, λ)` of an operator `L²_μ → L²_λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightPair {
    pub mu: Weight,
    pub lambda: Weight,
}

impl WeightPair {
    pub fn new(mu: Weight, lambda: Weight) -> Self {
        WeightPair { mu, lambda }
    }

    pub fn unweighted() -> Self {
        WeightPair::new(Weight::one(), Weight::one())
    }

    /// `ν = μ^{1/2} λ^{-1/2}`.
    pub fn nu(&self) -> Weight {
        bloom_weight(&self.mu, &self.lambda)
    }

    pub fn label(&self) -> String {
        format!("mu={};lambda={}", self.mu.label(), self.lambda.label())
    }
}

/// `ν = μ^{1/2} λ^{-1/2}`.
pub fn bloom_weight(mu: &Weight, lambda: &Weight) -> Weight {
    mu.powf(0.5).mul(&lambda.powf(-0.5))
}

/// A documented, reproducible family of intervals for supremum estimates.
#[derive(Clone, Debug)]
pub struct IntervalFamily {
    pub spans: Vec<Span>,
    pub description: String,
}

impl IntervalFamily {
    pub const DEFAULT_RANDOM: usize = 1000;

    /// All dyadic intervals of both grids in the window plus `random` seeded
    /// intervals with log-uniform lengths between one cell and the window.
    pub fn dyadic_and_random(window: &TruncationWindow, random: usize, seed: u64) -> Result<Self> {
        let mut spans = Vec::new();
        for grid in DyadicGrid::PAIR {
            let sys = DyadicSystem::new(grid, *window)?;
            spans.extend(sys.intervals().iter().map(|i| i.span()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total = window.hi - window.lo;
        let (lmin, lmax) = (window.cell_len().ln(), total.ln());
        for _ in 0..random {
            let len = rng.gen_range(lmin..=lmax).exp().min(total);
            let lo = rng.gen_range(window.lo..=window.hi - len);
            spans.push(Span::new(lo, lo + len));
        }
        Ok(IntervalFamily {
            spans,
            description: format!(
                "dyadic D0+D1 on [{}, {}) scales {}..={} + {random} random (seed {seed})",
                window.lo, window.hi, window.j_min, window.j_max
            ),
        })
    }

    pub fn from_spans(spans: Vec<Span>, description: impl Into<String>) -> Self {
        IntervalFamily { spans, description: description.into() }
    }

}

#[derive(Clone, Debug)]
pub struct A2Report {
    pub constant: f64,
    pub argmax: Span,
    pub family_size: usize,
    pub family: String,
}

/// `sup_B ⟨w⟩_B ⟨w⁻¹⟩_B` over the family.
pub fn a2_constant(w: &Weight, family: &IntervalFamily) -> Result<A2Report> {
    if family.spans.is_empty() {
        return Err(LabError::config("empty interval family"));
    }
    let inv = w.inverse();
    let mut best = (f64::NEG_INFINITY, family.spans[0]);
    for &b in &family.spans {
        let v = w.average(b)? * inv.average(b)?;
        if v > best.0 {
            best = (v, b);
        }
    }
    Ok(A2Report {
        constant: best.0,
        argmax: best.1,
        family_size: family.spans.len(),
        family: family.description.clone(),
    })
}

/// `w(sI) / (s · w(I))` with `sI` the concentric dilate.
pub fn doubling_ratio(w: &Weight, interval: Span, s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(LabError::param(format!("doubling factor must exceed 1, got {s}")));
    }
    Ok(w.integral(interval.dilate(s))? / (s * w.integral(interval)?))
}

pub const REVERSE_HOLDER_LADDER: [f64; 4] = [2.25, 2.5, 3.0, 4.0];
pub const REVERSE_HOLDER_BOUND: f64 = 10.0;

#[derive(Clone, Debug)]
pub struct ReverseHolderReport {
    /// `(r, sup_I [⟨w^{r/2}⟩_I]^{2/r} / ⟨w⟩_I)`; infinite when `w^{r/2}` is not
    /// locally integrable.
    pub ladder: Vec<(f64, f64)>,
}

impl ReverseHolderReport {
    pub fn qualifying(&self) -> Vec<f64> {
        self.ladder
            .iter()
            .filter(|(_, c)| *c <= REVERSE_HOLDER_BOUND)
            .map(|(r, _)| *r)
            .collect()
    }

    /// Largest qualifying exponent with its constant.
    pub fn best(&self) -> Option<(f64, f64)> {
        self.ladder
            .iter()
            .filter(|(_, c)| *c <= REVERSE_HOLDER_BOUND)
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .copied()
    }
}

pub fn reverse_holder_exponent(w: &Weight, window: &TruncationWindow) -> Result<ReverseHolderReport> {
    let mut spans = Vec::new();
    for grid in DyadicGrid::PAIR {
        let sys = DyadicSystem::new(grid, *window)?;
        spans.extend(sys.intervals().iter().map(|i| i.span()));
    }
    let mut ladder = Vec::new();
    for r in REVERSE_HOLDER_LADDER {
        let mut sup: f64 = 0.0;
        for &i in &spans {
            let high = match w.integral_pow(i, r / 2.0) {
                Ok(v) => v / i.len(),
                Err(LabError::DivergedIntegral { .. }) => {
                    sup = f64::INFINITY;
                    break;
                }
                Err(e) => return Err(e),
            };
            sup = sup.max(high.powf(2.0 / r) / w.average(i)?);
        }
        ladder.push((r, sup));
    }
    Ok(ReverseHolderReport { ladder })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(w: &Weight, span: Span, s: f64) -> f64 {
        // midpoint rule away from singularities, for smooth-enough checks
        let n = 200_000;
        let h = span.len() / n as f64;
        (0..n).map(|i| w.eval(span.lo + (i as f64 + 0.5) * h).powf(s) * h).sum()
    }

    #[test]
    fn power_integrals_closed_form() {
        let w = Weight::power(0.5, 0.0);
        let v = w.integral(Span::new(1.0, 2.0)).unwrap();
        let want = (2f64.powf(1.5) - 1.0) / 1.5;
        assert!((v - want).abs() < 1e-14);
        let v = w.integral(Span::new(-1.0, 1.0)).unwrap();
        assert!((v - 2.0 / 1.5).abs() < 1e-14);
        let v = Weight::power(-0.5, 0.3).integral(Span::new(0.0, 1.0)).unwrap();
        let want = (0.3f64.sqrt() + 0.7f64.sqrt()) * 2.0;
        assert!((v - want).abs() < 1e-13);
        assert!(Weight::power(-1.0, 0.5).integral(Span::new(0.0, 1.0)).is_err());
        let far = Weight::power(0.25, DEFAULT_CENTER).integral(Span::new(3.0, 3.0 + 1e-4)).unwrap();
        assert!((far - brute(&Weight::power(0.25, DEFAULT_CENTER), Span::new(3.0, 3.0 + 1e-4), 1.0)).abs() < 1e-15);
    }

    #[test]
    fn integrals_are_additive() {
        let ws = [
            Weight::power(0.5, DEFAULT_CENTER),
            Weight::power(-0.5, DEFAULT_CENTER),
            Weight::pathological(2.0, 3, 9.0).unwrap(),
        ];
        for w in &ws {
            for (a, m, b) in [(0.0, 0.25, 1.0), (-1.0, 1.0 / 3.0, 2.0), (0.1, 0.2, 0.3)] {
                let whole = w.integral(Span::new(a, b)).unwrap();
                let parts = w.integral(Span::new(a, m)).unwrap() + w.integral(Span::new(m, b)).unwrap();
                assert!((whole - parts).abs() <= 1e-12 * whole, "{} {whole} {parts}", w.label());
            }
        }
    }

    #[test]
    fn composite_matches_closed_form() {
        // |x-c|^{1/2}·|x-c|^{-1/4} merges; a two-center product goes to quadrature
        let merged = Weight::power(0.5, 0.3).mul(&Weight::power(-0.25, 0.3));
        assert_eq!(merged.factors().len(), 1);
        let two = Weight::power(0.5, 0.3).mul(&Weight::power(0.5, 0.7));
        // references from 30-digit adaptive quadrature split at the centers
        let v = two.integral(Span::new(0.0, 1.0)).unwrap();
        assert!((v - 0.229_288_668_340_691_4).abs() < 1e-12, "{v}");
        let sing = Weight::power(-0.5, 0.3).mul(&Weight::power(0.5, 0.7));
        let v = sing.integral(Span::new(0.0, 1.0)).unwrap();
        assert!((v - 1.544_833_669_709_126_6).abs() < 1e-9, "{v}");
    }

    #[test]
    fn nu_identity_pointwise() {
        let mu = Weight::power(0.25, DEFAULT_CENTER);
        let lambda = Weight::power(-0.25, DEFAULT_CENTER);
        let nu = bloom_weight(&mu, &lambda);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let x: f64 = rng.gen_range(-4.0..4.0);
            let lhs = nu.eval(x).powi(2) * lambda.eval(x);
            let rhs = mu.eval(x);
            assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }
    }

    #[test]
    fn a2_of_constant_is_one() {
        let w = TruncationWindow::new(-1.0, 1.0, 0, 4).unwrap();
        let fam = IntervalFamily::dyadic_and_random(&w, 100, 1).unwrap();
        let rep = a2_constant(&Weight::constant(3.0).unwrap(), &fam).unwrap();
        assert!((rep.constant - 1.0).abs() < 1e-14);
    }

    #[test]
    fn a2_symmetric_under_inversion() {
        let w = TruncationWindow::new(-1.0, 1.0, 0, 6).unwrap();
        let fam = IntervalFamily::dyadic_and_random(&w, 200, 3).unwrap();
        let wt = Weight::power(0.25, DEFAULT_CENTER);
        let a = a2_constant(&wt, &fam).unwrap().constant;
        let b = a2_constant(&wt.inverse(), &fam).unwrap().constant;
        assert!((a - b).abs() < 1e-12 * a);
        assert!(a >= 1.0);
    }

    #[test]
    fn doubling_examples() {
        let one = Weight::one();
        assert!((doubling_ratio(&one, Span::new(0.3, 0.7), 2.0).unwrap() - 1.0).abs() < 1e-15);
        // |x|^{1/2} on [1,2), s = 3 -> [0, 3)
        let w = Weight::power(0.5, 0.0);
        let got = doubling_ratio(&w, Span::new(1.0, 2.0), 3.0).unwrap();
        let want = (3f64.powf(1.5) / 1.5) / (3.0 * (2f64.powf(1.5) - 1.0) / 1.5);
        assert!((got - want).abs() < 1e-14);
        assert!(doubling_ratio(&w, Span::new(1.0, 2.0), 1.0).is_err());
    }

    #[test]
    fn pathological_parameters() {
        assert!(Weight::pathological(2.0, 3, 8.0).is_err()); // A(1-α) = 2
        assert!(Weight::pathological(1.0, 3, 9.0).is_err());
        assert!(Weight::pathological(2.0, 0, 9.0).is_err());
        let p = Pathological::new(2.0, 4, 9.0).unwrap();
        for j in 1..=4 {
            let n = 2f64.powi(j as i32);
            assert_eq!(p.log2_height(j), 9.0 * n * 0.75);
        }
    }

    #[test]
    fn pathological_peak_mass() {
        let p = Pathological::new(2.0, 2, 9.0).unwrap();
        // level 1: n = 2, δ = 2^-18, four peaks per unit, width 2^-20 each
        let ov = p.overlap(1, Span::new(0.0, 1.0));
        assert_eq!(ov, 4.0 * 2f64.powi(-20));
        let (starts, width) = p.peaks_in(1, Span::new(0.0, 1.0));
        assert_eq!(starts.len(), 4);
        assert_eq!(width, 2f64.powi(-20));
        let x = starts[0] + 0.5 * width;
        assert_eq!(p.eval(x), p.height(1));
        assert_eq!(p.eval(starts[0] - width), 1.0);
    }

    #[test]
    fn reverse_holder_of_constant() {
        let w = TruncationWindow::new(0.0, 1.0, 0, 4).unwrap();
        let rep = reverse_holder_exponent(&Weight::one(), &w).unwrap();
        assert_eq!(rep.qualifying(), REVERSE_HOLDER_LADDER.to_vec());
        assert!(rep.ladder.iter().all(|(_, c)| (c - 1.0).abs() < 1e-14));
    }

    #[test]
    fn peak_a2_matches_resolved_level_one() {
        let w = Weight::pathological(2.0, 1, 9.0).unwrap();
        let Base::Pathological(p) = &w.factors()[0].base else { unreachable!() };
        let (starts, width) = p.peaks_in(1, Span::new(0.0, 1.0));
        let x = starts[1];
        let spans = (0..=8).map(|m| Span::new(x, x + width * 2f64.powi(m))).collect();
        let direct = a2_constant(&w, &IntervalFamily::from_spans(spans, "peak")).unwrap().constant;
        let analytic = w.peak_a2().unwrap();
        assert!((direct - analytic).abs() < 1e-6 * analytic, "{direct} vs {analytic}");
        // ≈ H/4 with H = 2^{13.5}
        assert!((analytic / 2f64.powf(13.5) - 0.25).abs() < 1e-3);
        assert!(Weight::power(0.5, 0.0).peak_a2().is_none());
    }
}
