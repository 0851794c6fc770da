//! The symbol `b`: smooth built-ins with exact antiderivatives, step functions on
//! the finest cells, and finite Haar sums.

use std::f64::consts::PI;

use crate::dyadic::{DyadicInterval, DyadicSystem, Span, TruncationWindow};
use crate::error::{LabError, Result};

/// Smooth built-in symbols. All but `Linear` and `Constant` vanish off `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SmoothKind {
    /// `sin(2π m x)` on `[0, 1)`.
    Sine { freq: u32 },
    /// `x(1 − x)` on `[0, 1)`.
    Parabola,
    /// Cubic ramp `3t² − 2t³` (`t = 4x`) up to `1` on `[1/4, 3/4]`, mirrored down.
    Plateau,
    /// `x` on the whole line.
    Linear,
    Constant { value: f64 },
}

impl SmoothKind {
    fn support(self) -> Option<Span> {
        match self {
            SmoothKind::Sine { .. } | SmoothKind::Parabola | SmoothKind::Plateau => {
                Some(Span::new(0.0, 1.0))
            }
            SmoothKind::Linear | SmoothKind::Constant { .. } => None,
        }
    }

    fn eval(self, x: f64) -> f64 {
        if let Some(s) = self.support() {
            if x < s.lo || x >= s.hi {
                return 0.0;
            }
        }
        match self {
            SmoothKind::Sine { freq } => (2.0 * PI * freq as f64 * x).sin(),
            SmoothKind::Parabola => x * (1.0 - x),
            SmoothKind::Plateau => {
                let t = 4.0 * x.min(1.0 - x);
                if t >= 1.0 {
                    1.0
                } else {
                    t * t * (3.0 - 2.0 * t)
                }
            }
            SmoothKind::Linear => x,
            SmoothKind::Constant { value } => value,
        }
    }

    fn derivative(self, x: f64) -> f64 {
        if let Some(s) = self.support() {
            if x < s.lo || x >= s.hi {
                return 0.0;
            }
        }
        match self {
            SmoothKind::Sine { freq } => {
                let w = 2.0 * PI * freq as f64;
                w * (w * x).cos()
            }
            SmoothKind::Parabola => 1.0 - 2.0 * x,
            SmoothKind::Plateau => {
                let (t, sign) = if x <= 0.5 { (4.0 * x, 1.0) } else { (4.0 * (1.0 - x), -1.0) };
                if t >= 1.0 {
                    0.0
                } else {
                    sign * 4.0 * 6.0 * t * (1.0 - t)
                }
            }
            SmoothKind::Linear => 1.0,
            SmoothKind::Constant { .. } => 0.0,
        }
    }

    fn lipschitz(self) -> f64 {
        match self {
            SmoothKind::Sine { freq } => 2.0 * PI * freq as f64,
            SmoothKind::Parabola | SmoothKind::Linear => 1.0,
            SmoothKind::Plateau => 6.0,
            SmoothKind::Constant { .. } => 0.0,
        }
    }

    /// `∫_a^b`, with `[a, b)` inside one smooth piece.
    fn piece_integral(self, a: f64, b: f64) -> f64 {
        let len = b - a;
        match self {
            SmoothKind::Sine { freq } => {
                let w = 2.0 * PI * freq as f64;
                // cos(wa) − cos(wb) = 2 sin(w(a+b)/2) sin(w(b−a)/2)
                2.0 * (0.5 * w * (a + b)).sin() * (0.5 * w * len).sin() / w
            }
            SmoothKind::Parabola => len * (0.5 * (a + b) - (a * a + a * b + b * b) / 3.0),
            SmoothKind::Plateau => {
                let m = 0.5 * (a + b);
                if (0.25..=0.75).contains(&m) {
                    return len;
                }
                // ∫ρ(4x) dx = R(4x)/4 with R(t) = t³ − t⁴/2
                let r = |t: f64| t * t * t - 0.5 * t * t * t * t;
                if m < 0.25 {
                    (r(4.0 * b) - r(4.0 * a)) / 4.0
                } else {
                    (r(4.0 * (1.0 - a)) - r(4.0 * (1.0 - b))) / 4.0
                }
            }
            SmoothKind::Linear => len * 0.5 * (a + b),
            SmoothKind::Constant { value } => len * value,
        }
    }

    fn breakpoints(self) -> &'static [f64] {
        match self {
            SmoothKind::Plateau => &[0.25, 0.75],
            _ => &[],
        }
    }

    fn integral(self, span: Span) -> f64 {
        let (lo, hi) = match self.support() {
            Some(s) => (span.lo.max(s.lo), span.hi.min(s.hi)),
            None => (span.lo, span.hi),
        };
        if hi <= lo {
            return 0.0;
        }
        let mut points = vec![lo];
        points.extend(self.breakpoints().iter().copied().filter(|&p| p > lo && p < hi));
        points.push(hi);
        points.windows(2).map(|w| self.piece_integral(w[0], w[1])).sum()
    }

    fn label(self) -> String {
        match self {
            SmoothKind::Sine { freq } => format!("sin(2pi*{freq}x)"),
            SmoothKind::Parabola => "x(1-x)".into(),
            SmoothKind::Plateau => "plateau".into(),
            SmoothKind::Linear => "x".into(),
            SmoothKind::Constant { value } => format!("const({value})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Symbol {
    Smooth { kind: SmoothKind, scale: f64 },
    /// Cell values on the finest standard cells of `window`, zero outside it.
    Step { window: TruncationWindow, values: Vec<f64> },
    /// `Σ c_I h_I`.
    Haar { terms: Vec<(DyadicInterval, f64)> },
}

impl Symbol {
    pub fn smooth(kind: SmoothKind) -> Self {
        Symbol::Smooth { kind, scale: 1.0 }
    }

    pub fn sine(freq: u32) -> Self {
        Symbol::smooth(SmoothKind::Sine { freq })
    }

    pub fn constant(value: f64) -> Self {
        Symbol::smooth(SmoothKind::Constant { value })
    }

    pub fn step(window: TruncationWindow, values: Vec<f64>) -> Result<Self> {
        window.validate()?;
        if values.len() != window.n_cells() {
            return Err(LabError::config(format!(
                "step symbol has {} values for {} cells",
                values.len(),
                window.n_cells()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::param("step symbol has non-finite values"));
        }
        Ok(Symbol::Step { window, values })
    }

    pub fn haar(terms: Vec<(DyadicInterval, f64)>) -> Self {
        Symbol::Haar { terms }
    }

    pub fn scaled(&self, c: f64) -> Symbol {
        match self {
            Symbol::Smooth { kind, scale } => Symbol::Smooth { kind: *kind, scale: scale * c },
            Symbol::Step { window, values } => {
                Symbol::Step { window: *window, values: values.iter().map(|v| v * c).collect() }
            }
            Symbol::Haar { terms } => Symbol::Haar { terms: terms.iter().map(|(i, v)| (*i, v * c)).collect() },
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Symbol::Smooth { kind, scale } => scale * kind.eval(x),
            Symbol::Step { window, values } => {
                if x < window.lo || x >= window.hi {
                    return 0.0;
                }
                let i = ((x - window.lo) / window.cell_len()) as usize;
                values[i.min(values.len() - 1)]
            }
            Symbol::Haar { terms } => {
                terms.iter().map(|(i, c)| c * crate::dyadic::haar_eval(i, x)).sum()
            }
        }
    }

    /// `b'(x)` for smooth kinds.
    pub fn derivative(&self, x: f64) -> Option<f64> {
        match self {
            Symbol::Smooth { kind, scale } => Some(scale * kind.derivative(x)),
            _ => None,
        }
    }

    /// Lipschitz constant; `None` for kinds with jumps.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Symbol::Smooth { kind, scale } => Some(scale.abs() * kind.lipschitz()),
            _ => None,
        }
    }

    /// Closed interval outside which `b` vanishes; `None` when unbounded.
    pub fn support(&self) -> Option<Span> {
        match self {
            Symbol::Smooth { kind, .. } => kind.support(),
            Symbol::Step { window, .. } => Some(window.span()),
            Symbol::Haar { terms } => {
                let lo = terms.iter().map(|(i, _)| i.lo()).fold(f64::INFINITY, f64::min);
                let hi = terms.iter().map(|(i, _)| i.hi()).fold(f64::NEG_INFINITY, f64::max);
                Some(if lo < hi { Span::new(lo, hi) } else { Span::new(0.0, 0.0) })
            }
        }
    }

    pub fn is_zero_constant(&self) -> bool {
        match self {
            Symbol::Smooth { kind: SmoothKind::Constant { .. }, .. } => true,
            Symbol::Smooth { scale, .. } => *scale == 0.0,
            Symbol::Step { values, .. } => values.windows(2).all(|w| w[0] == w[1]),
            Symbol::Haar { terms } => terms.iter().all(|(_, c)| *c == 0.0),
        }
    }

    /// `∫_span b`.
    pub fn integral(&self, span: Span) -> f64 {
        if span.is_empty() {
            return 0.0;
        }
        match self {
            Symbol::Smooth { kind, scale } => scale * kind.integral(span),
            Symbol::Step { window, values } => {
                let lo = span.lo.max(window.lo);
                let hi = span.hi.min(window.hi);
                if hi <= lo {
                    return 0.0;
                }
                let h = window.cell_len();
                let first = ((lo - window.lo) / h).floor() as usize;
                let last = (((hi - window.lo) / h).ceil() as usize).min(values.len());
                (first..last)
                    .map(|i| {
                        let a = window.lo + i as f64 * h;
                        let ov = hi.min(a + h) - lo.max(a);
                        if ov > 0.0 {
                            values[i] * ov
                        } else {
                            0.0
                        }
                    })
                    .sum()
            }
            Symbol::Haar { terms } => terms
                .iter()
                .map(|(i, c)| {
                    let (left, right) = i.children();
                    let ov = |s: Span| (span.hi.min(s.hi) - span.lo.max(s.lo)).max(0.0);
                    c * (ov(left.span()) - ov(right.span())) / i.len().sqrt()
                })
                .sum(),
        }
    }

    /// Cell averages on the finest standard cells of `window`.
    pub fn cell_values(&self, window: &TruncationWindow) -> Vec<f64> {
        let h = window.cell_len();
        (0..window.n_cells())
            .map(|i| {
                let a = window.lo + i as f64 * h;
                self.integral(Span::new(a, a + h)) / h
            })
            .collect()
    }

    pub fn label(&self) -> String {
        match self {
            Symbol::Smooth { kind, scale } if *scale == 1.0 => kind.label(),
            Symbol::Smooth { kind, scale } => format!("{scale}*{}", kind.label()),
            Symbol::Step { values, .. } => format!("step[{}]", values.len()),
            Symbol::Haar { terms } => format!("haar[{}]", terms.len()),
        }
    }
}

/// Haar coefficients over the Haar-resolvable intervals of a system, in
/// enumeration order.
#[derive(Clone, Debug)]
pub struct HaarCoefficients {
    pub intervals: Vec<DyadicInterval>,
    pub values: Vec<f64>,
}

impl HaarCoefficients {
    pub fn get(&self, iv: &DyadicInterval) -> Option<f64> {
        self.intervals.iter().position(|i| i == iv).map(|k| self.values[k])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DyadicInterval, f64)> {
        self.intervals.iter().zip(self.values.iter().copied())
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// `b̂(I) = ⟨b, h_I⟩ = |I|^{-1/2}(∫_{I₋} b − ∫_{I₊} b)` for every `I` with `j < j_max`.
pub fn haar_coefficients(b: &Symbol, sys: &DyadicSystem) -> HaarCoefficients {
    let intervals = sys.haar_intervals().to_vec();
    let values = intervals
        .iter()
        .map(|i| {
            let (left, right) = i.children();
            (b.integral(left.span()) - b.integral(right.span())) / i.len().sqrt()
        })
        .collect();
    HaarCoefficients { intervals, values }
}

/// Indices of finest standard cells whose midpoint lies in `span`.
pub fn cells_in(span: Span, window: &TruncationWindow) -> Vec<usize> {
    let h = window.cell_len();
    (0..window.n_cells())
        .filter(|&i| {
            let m = window.lo + (i as f64 + 0.5) * h;
            m >= span.lo && m < span.hi
        })
        .collect()
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    // admissible medians form [v_{⌈n/2⌉}, v_{⌊n/2⌋+1}] (1-based)
    let lo = values[n.div_ceil(2) - 1];
    let hi = values[n / 2];
    0.5 * (lo + hi)
}

/// Midpoint of the admissible median interval of the step view of `b` on `q`.
pub fn median_value(b: &Symbol, q: Span, window: &TruncationWindow) -> Result<f64> {
    let cells = cells_in(q, window);
    if cells.is_empty() {
        return Err(LabError::param(format!("no finest cell inside [{}, {})", q.lo, q.hi)));
    }
    let all = b.cell_values(window);
    let mut v: Vec<f64> = cells.iter().map(|&i| all[i]).collect();
    Ok(median_of(&mut v))
}

/// The four sets of the median decomposition, as global cell indices.
#[derive(Clone, Debug)]
pub struct MedianSplit {
    pub alpha: f64,
    /// `{x ∈ Q : b(x) < α}`
    pub e1: Vec<usize>,
    /// `{x ∈ Q : b(x) > α}`
    pub e2: Vec<usize>,
    /// `{y ∈ Q̂ : b(y) ≥ α}`
    pub f1: Vec<usize>,
    /// `{y ∈ Q̂ : b(y) ≤ α}`
    pub f2: Vec<usize>,
    pub q_cells: Vec<usize>,
    pub qhat_cells: Vec<usize>,
}

impl MedianSplit {
    pub fn e(&self, s: usize) -> &[usize] {
        if s == 1 {
            &self.e1
        } else {
            &self.e2
        }
    }

    pub fn f(&self, s: usize) -> &[usize] {
        if s == 1 {
            &self.f1
        } else {
            &self.f2
        }
    }
}

/// Split `Q` and `Q̂` against the median `α` of `b` over `Q̂`.
pub fn median_split(b: &Symbol, q: Span, qhat: Span, window: &TruncationWindow) -> Result<MedianSplit> {
    let alpha = median_value(b, qhat, window)?;
    let values = b.cell_values(window);
    let q_cells = cells_in(q, window);
    let qhat_cells = cells_in(qhat, window);
    let pick = |cells: &[usize], keep: &dyn Fn(f64) -> bool| -> Vec<usize> {
        cells.iter().copied().filter(|&i| keep(values[i])).collect()
    };
    Ok(MedianSplit {
        alpha,
        e1: pick(&q_cells, &|v| v < alpha),
        e2: pick(&q_cells, &|v| v > alpha),
        f1: pick(&qhat_cells, &|v| v >= alpha),
        f2: pick(&qhat_cells, &|v| v <= alpha),
        q_cells,
        qhat_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::DyadicGrid;

    fn unit(j_max: i32) -> TruncationWindow {
        TruncationWindow::new(0.0, 1.0, 0, j_max).unwrap()
    }

    #[test]
    fn linear_coefficient() {
        let sys = DyadicSystem::new(DyadicGrid::Standard, unit(4)).unwrap();
        let c = haar_coefficients(&Symbol::smooth(SmoothKind::Linear), &sys);
        let top = DyadicInterval::new(DyadicGrid::Standard, 0, 0);
        assert!((c.get(&top).unwrap() + 0.25).abs() < 1e-15);
    }

    #[test]
    fn haar_symbol_round_trip() {
        let sys = DyadicSystem::new(DyadicGrid::Standard, unit(5)).unwrap();
        let i0 = DyadicInterval::new(DyadicGrid::Standard, 2, 1);
        let c = haar_coefficients(&Symbol::haar(vec![(i0, 1.0)]), &sys);
        for (i, v) in c.iter() {
            let want = if *i == i0 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-15, "{i}");
        }
        let c = haar_coefficients(&Symbol::constant(2.5), &sys);
        assert!(c.values.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn parseval_on_haar_span() {
        let w = unit(6);
        let sys = DyadicSystem::new(DyadicGrid::Standard, w).unwrap();
        // mean-zero step function on [0,1) lies in the truncated Haar span
        let mut values: Vec<f64> = (0..w.n_cells()).map(|i| ((i * 37 % 11) as f64) - 3.0).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.iter_mut().for_each(|v| *v -= mean);
        let b = Symbol::step(w, values.clone()).unwrap();
        let c = haar_coefficients(&b, &sys);
        let l2: f64 = values.iter().map(|v| v * v * w.cell_len()).sum();
        assert!((c.sum_of_squares() - l2).abs() < 1e-12 * l2);
    }

    #[test]
    fn smooth_integrals_match_quadrature() {
        for kind in [
            SmoothKind::Sine { freq: 2 },
            SmoothKind::Parabola,
            SmoothKind::Plateau,
            SmoothKind::Linear,
        ] {
            for (a, b) in [(-0.5, 0.1), (0.1, 0.3), (0.2, 0.9), (0.7, 1.4)] {
                let got = kind.integral(Span::new(a, b));
                let mut pts = vec![a, 0.0, 0.25, 0.75, 1.0, b];
                pts.retain(|&p| p >= a && p <= b);
                pts.sort_by(f64::total_cmp);
                let want: f64 = pts
                    .windows(2)
                    .map(|w| crate::quadrature::gauss32(w[0], w[1], |x| kind.eval(x)))
                    .sum();
                assert!((got - want).abs() < 1e-14, "{kind:?} [{a},{b}) {got} {want}");
            }
        }
    }

    #[test]
    fn plateau_lipschitz_bound() {
        let k = SmoothKind::Plateau;
        let max = (0..10_000).map(|i| k.derivative(i as f64 / 10_000.0).abs()).fold(0.0, f64::max);
        assert!(max <= k.lipschitz() + 1e-12);
        assert!(max > 0.99 * k.lipschitz());
    }

    #[test]
    fn median_examples() {
        let w = unit(6);
        let q = Span::new(0.0, 1.0);
        let lin = Symbol::smooth(SmoothKind::Linear);
        assert!((median_value(&lin, q, &w).unwrap() - 0.5).abs() < 1e-15);
        let mut v = vec![0.0; w.n_cells()];
        v[..16].iter_mut().for_each(|x| *x = 1.0);
        let chi = Symbol::step(w, v).unwrap();
        assert_eq!(median_value(&chi, q, &w).unwrap(), 0.0);
        assert_eq!(median_value(&Symbol::constant(4.0), q, &w).unwrap(), 4.0);
        let shifted = median_value(&lin.scaled(3.0), q, &w).unwrap();
        assert!((shifted - 1.5).abs() < 1e-15);
    }

    #[test]
    fn median_split_examples() {
        let w = unit(4);
        let q = Span::new(0.0, 1.0);
        let s = median_split(&Symbol::smooth(SmoothKind::Linear), q, q, &w).unwrap();
        assert_eq!(s.e1, (0..8).collect::<Vec<_>>());
        assert_eq!(s.f1, (8..16).collect::<Vec<_>>());
        let s = median_split(&Symbol::constant(1.0), q, q, &w).unwrap();
        assert!(s.e1.is_empty() && s.e2.is_empty());
        assert_eq!(s.f1.len(), 16);
        assert_eq!(s.f2.len(), 16);
    }
}
