//! Weighted Besov, BMO and VMO functionals.

use rayon::prelude::*;

use crate::dyadic::{DyadicGrid, DyadicInterval, DyadicSystem, Span, TruncationWindow};
use crate::error::{LabError, Result};
use crate::format;
use crate::symbols::{haar_coefficients, HaarCoefficients, Symbol};
use crate::weights::{Weight, WeightPair};

/// Which of the three equivalent per-interval expressions weights `|b̂(I)|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BesovForm {
    /// `|I|^{1/2} / ν(I)`
    Nu,
    /// `λ(I)^{1/2} μ⁻¹(I)^{1/2} / |I|^{3/2}`
    LambdaMuInverse,
    /// `|I|^{1/2} / (λ⁻¹(I)^{1/2} μ(I)^{1/2})`
    LambdaInverseMu,
}

impl BesovForm {
    pub const ALL: [BesovForm; 3] = [BesovForm::Nu, BesovForm::LambdaMuInverse, BesovForm::LambdaInverseMu];

    pub fn label(self) -> &'static str {
        match self {
            BesovForm::Nu => "form1",
            BesovForm::LambdaMuInverse => "form2",
            BesovForm::LambdaInverseMu => "form3",
        }
    }
}

#[derive(Clone, Debug)]
pub struct NormReport {
    pub value: f64,
    /// Estimated absolute error of `value`, when the functional is approximate.
    pub error_estimate: Option<f64>,
    pub id_column: &'static str,
    pub rows: Vec<(String, f64)>,
    pub params: String,
}

impl NormReport {
    /// Columns `(id, contribution, cumulative)`.
    pub fn to_csv(&self) -> String {
        let mut cumulative = 0.0;
        let rows = self.rows.iter().map(|(id, c)| {
            cumulative += c;
            vec![id.clone(), format::sig12(*c), format::sig12(cumulative)]
        });
        format::csv(&[self.id_column, "contribution", "cumulative"], rows.collect::<Vec<_>>())
    }
}

/// Weight masses of one interval needed by the three forms.
#[derive(Clone, Copy, Debug)]
pub struct IntervalMasses {
    pub len: f64,
    pub nu: f64,
    pub lambda: f64,
    pub lambda_inv: f64,
    pub mu: f64,
    pub mu_inv: f64,
}

impl IntervalMasses {
    pub fn new(pair: &WeightPair, nu: &Weight, span: Span) -> Result<Self> {
        Ok(IntervalMasses {
            len: span.len(),
            nu: nu.integral(span)?,
            lambda: pair.lambda.integral(span)?,
            lambda_inv: pair.lambda.integral_pow(span, -1.0)?,
            mu: pair.mu.integral(span)?,
            mu_inv: pair.mu.integral_pow(span, -1.0)?,
        })
    }

    /// Factor multiplying `|b̂(I)|` in the chosen form.
    pub fn factor(&self, form: BesovForm) -> f64 {
        match form {
            BesovForm::Nu => self.len.sqrt() / self.nu,
            BesovForm::LambdaMuInverse => (self.lambda * self.mu_inv).sqrt() / self.len.powf(1.5),
            BesovForm::LambdaInverseMu => self.len.sqrt() / (self.lambda_inv * self.mu).sqrt(),
        }
    }
}

fn masses_for(pair: &WeightPair, intervals: &[DyadicInterval]) -> Result<Vec<IntervalMasses>> {
    let nu = pair.nu();
    intervals
        .par_iter()
        .map(|i| IntervalMasses::new(pair, &nu, i.span()))
        .collect()
}

/// `(Σ_I (|b̂(I)| · factor_form(I))^p)^{1/p}` over the Haar-resolvable intervals.
pub fn dyadic_besov_norm(
    b: &Symbol,
    pair: &WeightPair,
    p: f64,
    sys: &DyadicSystem,
    form: BesovForm,
) -> Result<NormReport> {
    let coeffs = haar_coefficients(b, sys);
    dyadic_besov_from_coefficients(&coeffs, pair, p, sys, form)
}

pub fn dyadic_besov_from_coefficients(
    coeffs: &HaarCoefficients,
    pair: &WeightPair,
    p: f64,
    sys: &DyadicSystem,
    form: BesovForm,
) -> Result<NormReport> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(LabError::param(format!("p must lie in (0, ∞), got {p}")));
    }
    let masses = masses_for(pair, &coeffs.intervals)?;
    let rows: Vec<(String, f64)> = coeffs
        .iter()
        .zip(&masses)
        .map(|((i, c), m)| (i.id(), (c.abs() * m.factor(form)).powf(p)))
        .collect();
    let total: f64 = rows.iter().map(|r| r.1).sum();
    Ok(NormReport {
        value: total.powf(1.0 / p),
        error_estimate: None,
        id_column: "interval_id",
        rows,
        params: format!(
            "dyadic {} p={p} grid={} {}",
            form.label(),
            sys.grid().label(),
            pair.label()
        ),
    })
}

/// Cells whose closure meets the support of `b`.
fn support_mask(b: &Symbol, window: &TruncationWindow) -> Vec<bool> {
    let h = window.cell_len();
    let supp = b.support();
    (0..window.n_cells())
        .map(|i| {
            let a = window.lo + i as f64 * h;
            supp.is_none_or(|s| a <= s.hi && a + h >= s.lo)
        })
        .collect()
}

/// Sub-cell data at one refinement level: `2^level` pieces per cell.
struct SubCells {
    per_cell: usize,
    mid: Vec<f64>,
    b: Vec<f64>,
    db: Vec<f64>,
    lambda: Vec<f64>,
    mu_inv: Vec<f64>,
}

impl SubCells {
    fn new(b: &Symbol, pair: &WeightPair, window: &TruncationWindow, level: u32) -> Result<Self> {
        let per_cell = 1usize << level;
        let n = window.n_cells() * per_cell;
        let w = window.cell_len() / per_cell as f64;
        let spans: Vec<Span> = (0..n)
            .map(|k| {
                let a = window.lo + k as f64 * w;
                Span::new(a, a + w)
            })
            .collect();
        let mid: Vec<f64> = spans.iter().map(|s| s.midpoint()).collect();
        let lambda = spans.par_iter().map(|&s| pair.lambda.integral(s)).collect::<Result<Vec<_>>>()?;
        let mu_inv = spans
            .par_iter()
            .map(|&s| pair.mu.integral_pow(s, -1.0))
            .collect::<Result<Vec<_>>>()?;
        Ok(SubCells {
            per_cell,
            b: mid.iter().map(|&x| b.eval(x)).collect(),
            db: mid.iter().map(|&x| b.derivative(x).unwrap_or(0.0)).collect(),
            mid,
            lambda,
            mu_inv,
        })
    }

    /// Midpoint product rule over all sub-cell pairs of cells `(i, j)`.
    fn pair(&self, i: usize, j: usize) -> f64 {
        let (ri, rj) = (i * self.per_cell, j * self.per_cell);
        let mut total = 0.0;
        for a in ri..ri + self.per_cell {
            for c in rj..rj + self.per_cell {
                let q = if a == c {
                    self.db[a] * self.db[a]
                } else {
                    let d = (self.b[a] - self.b[c]) / (self.mid[a] - self.mid[c]);
                    d * d
                };
                total += q * self.lambda[a] * self.mu_inv[c];
            }
        }
        total
    }
}

/// `(∬_{W×W} |b(x)−b(y)|² / |x−y|² λ(x) μ⁻¹(y) dx dy)^{1/2}` for Lipschitz `b`.
///
/// Far cell pairs use a 2×2 sub-cell product rule; pairs at distance below one
/// cell use 4×4. Coincident sub-cells take the difference quotient as `b'²`. The
/// error estimate is the change against the next coarser level.
pub fn continuous_besov_norm_p2(b: &Symbol, pair: &WeightPair, window: &TruncationWindow) -> Result<NormReport> {
    window.validate()?;
    if b.lipschitz().is_none() {
        let s = b.support().unwrap_or(window.span());
        return Err(LabError::DivergedIntegral {
            what: format!("continuous Besov norm of {} (symbol has jumps)", b.label()),
            lo: s.lo,
            hi: s.hi,
        });
    }
    let n = window.n_cells();
    let levels = [0, 1, 2]
        .into_iter()
        .map(|l| SubCells::new(b, pair, window, l))
        .collect::<Result<Vec<_>>>()?;
    let mask = support_mask(b, window);
    let rows: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut value = 0.0;
            let mut err = 0.0;
            for j in 0..n {
                if !mask[i] && !mask[j] {
                    continue;
                }
                let (fine, coarse) = if i.abs_diff(j) <= 1 {
                    (levels[2].pair(i, j), levels[1].pair(i, j))
                } else {
                    (levels[1].pair(i, j), levels[0].pair(i, j))
                };
                value += fine;
                err += (fine - coarse).abs();
            }
            (value, err)
        })
        .collect();
    let total: f64 = rows.iter().map(|r| r.0).sum();
    let err_sq: f64 = rows.iter().map(|r| r.1).sum();
    let value = total.sqrt();
    Ok(NormReport {
        value,
        error_estimate: Some(if value > 0.0 { err_sq / (2.0 * value) } else { err_sq.sqrt() }),
        id_column: "pair_id",
        rows: rows.iter().enumerate().map(|(i, r)| (format!("row:{i}"), r.0)).collect(),
        params: format!("continuous p=2 window=[{}, {}) j_max={} {}", window.lo, window.hi, window.j_max, pair.label()),
    })
}

/// `∬_{[0,1]×[k,k+1]} |x − y|^{p−2} dx dy`.
fn unit_kernel_moment(k: usize, p: f64) -> f64 {
    let a = p - 2.0;
    let kf = k as f64;
    if k >= 64 {
        // u − v on unit squares has moments E t² = 1/6, E t⁴ = 1/15
        let k2 = kf * kf;
        let c2 = a * (a - 1.0) / 12.0;
        let c4 = a * (a - 1.0) * (a - 2.0) * (a - 3.0) / 360.0;
        return kf.powf(a) * (1.0 + c2 / k2 + c4 / (k2 * k2));
    }
    let phi = |t: f64| t.abs().powf(p) / ((a + 1.0) * (a + 2.0));
    if k == 0 {
        2.0 * phi(1.0)
    } else {
        phi(kf + 1.0) - 2.0 * phi(kf) + phi(kf - 1.0)
    }
}

/// Sub-cell sum `Σ |q_ac|^p · s^p · m(|a−c|)` with `q` the difference quotient
/// of `b` between sub-cell midpoints (`b'` on the diagonal).
fn unweighted_level(b: &Symbol, p: f64, window: &TruncationWindow, per_cell: usize) -> f64 {
    let n = window.n_cells() * per_cell;
    let s = window.cell_len() / per_cell as f64;
    let mid: Vec<f64> = (0..n).map(|k| window.lo + (k as f64 + 0.5) * s).collect();
    let vals: Vec<f64> = mid.iter().map(|&x| b.eval(x)).collect();
    let der: Vec<f64> = mid.iter().map(|&x| b.derivative(x).unwrap_or(0.0)).collect();
    let mask = support_mask(b, window);
    let moments: Vec<f64> = (0..n).map(|k| unit_kernel_moment(k, p) * s.powf(p)).collect();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut total = 0.0;
            for c in 0..n {
                if !mask[a / per_cell] && !mask[c / per_cell] {
                    continue;
                }
                let q = if a == c { der[a] } else { (vals[a] - vals[c]) / (mid[a] - mid[c]) };
                total += q.abs().powf(p) * moments[a.abs_diff(c)];
            }
            total
        })
        .collect();
    rows.iter().sum()
}

/// `(∬_{W×W} |b(x)−b(y)|^p / |x−y|² dx dy)^{1/p}` for Lipschitz `b` and `p > 1`.
///
/// Four sub-cells per cell; the error estimate is the change against two.
pub fn continuous_besov_norm_unweighted(b: &Symbol, p: f64, window: &TruncationWindow) -> Result<NormReport> {
    window.validate()?;
    if !(p > 1.0) || !p.is_finite() {
        return Err(LabError::param(format!("continuous norm needs p > 1, got {p}")));
    }
    if b.lipschitz().is_none() {
        let s = b.support().unwrap_or(window.span());
        return Err(LabError::DivergedIntegral {
            what: format!("continuous Besov norm of {} (symbol has jumps)", b.label()),
            lo: s.lo,
            hi: s.hi,
        });
    }
    let fine = unweighted_level(b, p, window, 4);
    let coarse = unweighted_level(b, p, window, 2);
    let value = fine.powf(1.0 / p);
    Ok(NormReport {
        value,
        error_estimate: Some(if fine > 0.0 { (fine - coarse).abs() / (p * fine) * value } else { 0.0 }),
        id_column: "pair_id",
        rows: vec![("total".into(), fine)],
        params: format!("continuous p={p} unweighted window=[{}, {}) j_max={}", window.lo, window.hi, window.j_max),
    })
}

/// `‖b‖_{D⁰} + ‖b‖_{D¹}` in the first form.
pub fn intersection_norm(b: &Symbol, pair: &WeightPair, window: &TruncationWindow, p: f64) -> Result<NormReport> {
    let mut rows = Vec::new();
    let mut value = 0.0;
    for grid in DyadicGrid::PAIR {
        let sys = DyadicSystem::new(grid, *window)?;
        let r = dyadic_besov_norm(b, pair, p, &sys, BesovForm::Nu)?;
        value += r.value;
        rows.push((grid.label().to_string(), r.value));
    }
    Ok(NormReport {
        value,
        error_estimate: None,
        id_column: "grid",
        rows,
        params: format!("intersection p={p} {}", pair.label()),
    })
}

#[derive(Clone, Debug)]
pub struct BmoReport {
    /// `sup_I ν(I)⁻¹ ∫_I |b − ⟨b⟩_I|`
    pub sup_average: f64,
    pub sup_average_at: Option<DyadicInterval>,
    /// `sup_K μ⁻¹(K)⁻¹ Σ_{I⊆K} |b̂(I)|² μ⁻¹(I)² λ(I) / |I|³`
    pub square_form: f64,
    pub square_form_at: Option<DyadicInterval>,
}

/// `∫_span |v − ⟨v⟩_span|` for the step function `v` on the finest standard cells.
fn mean_deviation(values: &[f64], window: &TruncationWindow, span: Span) -> f64 {
    let h = window.cell_len();
    let lo = span.lo.max(window.lo);
    let hi = span.hi.min(window.hi);
    if hi <= lo {
        return 0.0;
    }
    let first = ((lo - window.lo) / h).floor() as usize;
    let last = (((hi - window.lo) / h).ceil() as usize).min(values.len());
    let pieces: Vec<(f64, f64)> = (first..last)
        .map(|k| {
            let a = window.lo + k as f64 * h;
            ((hi.min(a + h) - lo.max(a)).max(0.0), values[k])
        })
        .collect();
    let avg = pieces.iter().map(|(w, v)| w * v).sum::<f64>() / span.len();
    pieces.iter().map(|(w, v)| w * (v - avg).abs()).sum()
}

pub fn weighted_bmo_dyadic(b: &Symbol, pair: &WeightPair, sys: &DyadicSystem) -> Result<BmoReport> {
    let window = sys.window();
    let values = b.cell_values(window);
    let nu = pair.nu();
    let mut sup_average = 0.0;
    let mut sup_average_at = None;
    for iv in sys.intervals() {
        let v = mean_deviation(&values, window, iv.span()) / nu.integral(iv.span())?;
        if v > sup_average {
            sup_average = v;
            sup_average_at = Some(*iv);
        }
    }
    let coeffs = haar_coefficients(b, sys);
    let masses = masses_for(pair, &coeffs.intervals)?;
    let terms: Vec<f64> = coeffs
        .iter()
        .zip(&masses)
        .map(|((_, c), m)| c * c * m.mu_inv * m.mu_inv * m.lambda / m.len.powi(3))
        .collect();
    let mut square_form = 0.0;
    let mut square_form_at = None;
    for k in sys.haar_intervals() {
        let mass = pair.mu.integral_pow(k.span(), -1.0)?;
        let s: f64 = coeffs
            .intervals
            .iter()
            .zip(&terms)
            .filter(|(i, _)| k.contains(i))
            .map(|(_, t)| t)
            .sum();
        let v = s / mass;
        if v > square_form {
            square_form = v;
            square_form_at = Some(*k);
        }
    }
    Ok(BmoReport { sup_average, sup_average_at, square_form, square_form_at })
}

/// One rung of the VMO tail ladder.
#[derive(Clone, Copy, Debug)]
pub struct TailRow {
    pub a: f64,
    /// `Σ_{|I| < a}`
    pub small: f64,
    /// `Σ_{|I| > a}`
    pub large: f64,
    /// `Σ_{I ∩ B(x₀, a) = ∅}`
    pub far: f64,
}

/// Finite-scale tails of `c(I) = |b̂(I)|² λ(I) / (|I| μ(I))` on the ladder
/// `a = 2^{-k}` from the window length down to one cell.
pub fn vmo_tail_report(b: &Symbol, pair: &WeightPair, sys: &DyadicSystem, x0: f64) -> Result<Vec<TailRow>> {
    let coeffs = haar_coefficients(b, sys);
    let masses = masses_for(pair, &coeffs.intervals)?;
    let contrib: Vec<(DyadicInterval, f64)> = coeffs
        .iter()
        .zip(&masses)
        .map(|((i, c), m)| (*i, c * c * m.lambda / (m.len * m.mu)))
        .collect();
    let window = sys.window();
    let top = (window.hi - window.lo).log2().ceil() as i32;
    let rows = (-top..=window.j_max)
        .map(|k| {
            let a = 2f64.powi(-k);
            let ball = Span::new(x0 - a, x0 + a);
            let mut row = TailRow { a, small: 0.0, large: 0.0, far: 0.0 };
            for (i, c) in &contrib {
                if i.len() < a {
                    row.small += c;
                }
                if i.len() > a {
                    row.large += c;
                }
                if i.hi() <= ball.lo || i.lo() >= ball.hi {
                    row.far += c;
                }
            }
            row
        })
        .collect();
    Ok(rows)
}

/// Per-interval comparison of the three form factors.
#[derive(Clone, Debug)]
pub struct FormRatioReport {
    /// Largest pairwise ratio `max/min` of the three factors over all intervals.
    pub max_ratio: f64,
    pub argmax: Option<DyadicInterval>,
    /// Intervals where `ν⁻¹(I) ≤ μ⁻¹(I)^{1/2} λ(I)^{1/2}` failed beyond rounding.
    pub cauchy_schwarz_violations: Vec<DyadicInterval>,
    pub intervals: usize,
}

pub fn form_ratio_report(pair: &WeightPair, sys: &DyadicSystem) -> Result<FormRatioReport> {
    let intervals = sys.intervals();
    let masses = masses_for(pair, intervals)?;
    let nu_inv = pair.nu().inverse();
    let mut report = FormRatioReport {
        max_ratio: 1.0,
        argmax: None,
        cauchy_schwarz_violations: Vec::new(),
        intervals: intervals.len(),
    };
    for (iv, m) in intervals.iter().zip(&masses) {
        let f: Vec<f64> = BesovForm::ALL.iter().map(|&form| m.factor(form)).collect();
        let hi = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = f.iter().copied().fold(f64::INFINITY, f64::min);
        if hi / lo > report.max_ratio {
            report.max_ratio = hi / lo;
            report.argmax = Some(*iv);
        }
        let lhs = nu_inv.integral(iv.span())?;
        if lhs > (m.mu_inv * m.lambda).sqrt() * (1.0 + 1e-12) {
            report.cauchy_schwarz_violations.push(*iv);
        }
    }
    Ok(report)
}
