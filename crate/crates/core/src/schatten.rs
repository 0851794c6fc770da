//! Singular spectra, Schatten functionals, NWO families and the mixed-norm bound.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dyadic::{DyadicInterval, DyadicSystem};
use crate::error::{LabError, Result};
use crate::format;
use crate::operators::{Basis, OperatorMatrix};
use crate::weights::{Weight, WeightPair};

/// Relative cutoff below which singular values are set to zero.
pub const SVD_CUTOFF: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct SingularSpectrum {
    /// Nonincreasing.
    pub values: Vec<f64>,
    pub label: String,
}

impl SingularSpectrum {
    pub fn from_values(mut values: Vec<f64>, label: impl Into<String>) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        let cut = values.first().copied().unwrap_or(0.0) * SVD_CUTOFF;
        for v in &mut values {
            if *v < cut {
                *v = 0.0;
            }
        }
        SingularSpectrum { values, label: label.into() }
    }

    pub fn sigma1(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn rank(&self) -> usize {
        self.values.iter().filter(|v| **v > 0.0).count()
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Columns `(index, sigma)`, 1-based.
    pub fn to_csv(&self) -> String {
        let rows = self.values.iter().enumerate().map(|(i, s)| vec![(i + 1).to_string(), format::sig12(*s)]);
        format::csv(&["index", "sigma"], rows.collect::<Vec<_>>())
    }
}

pub fn singular_values_of(m: &DMatrix<f64>, label: impl Into<String>) -> Result<SingularSpectrum> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(LabError::InvalidMatrix("non-finite entries".into()));
    }
    if m.is_empty() {
        return Ok(SingularSpectrum { values: Vec::new(), label: label.into() });
    }
    Ok(SingularSpectrum::from_values(m.clone().singular_values().as_slice().to_vec(), label))
}

pub fn singular_values(t: &OperatorMatrix) -> Result<SingularSpectrum> {
    singular_values_of(t.matrix(), t.label.clone())
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(LabError::param(format!("p must lie in (0, ∞), got {p}")));
    }
    Ok(())
}

/// `(Σ σ_j^p)^{1/p}`.
pub fn schatten_norm(spec: &SingularSpectrum, p: f64) -> Result<f64> {
    check_p(p)?;
    let s1 = spec.sigma1();
    if s1 == 0.0 {
        return Ok(0.0);
    }
    // scaled by σ₁ so large p cannot overflow
    let sum: f64 = spec.values.iter().map(|v| (v / s1).powf(p)).sum();
    Ok(s1 * sum.powf(1.0 / p))
}

/// `sup_j j^{1/p} σ_j`.
pub fn weak_schatten(spec: &SingularSpectrum, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(spec
        .values
        .iter()
        .enumerate()
        .map(|(j, s)| ((j + 1) as f64).powf(1.0 / p) * s)
        .fold(0.0, f64::max))
}

/// `‖T‖_{S²}` as the Frobenius norm; equal to the spectral sum without an SVD.
pub fn hilbert_schmidt(t: &OperatorMatrix) -> f64 {
    t.frobenius()
}

/// A function `c · w(x) · Σ_cells m_c χ_cell(x)` attached to an interval.
#[derive(Clone, Debug)]
pub struct NwoMember {
    pub interval: DyadicInterval,
    pub weight: Weight,
    pub scale: f64,
    /// `(cell index, multiplier)`
    pub cells: Vec<(usize, f64)>,
}

#[derive(Clone, Debug)]
pub struct NwoFamily {
    pub basis: Basis,
    pub members: Vec<NwoMember>,
    pub label: String,
}

impl NwoFamily {
    fn cells(&self) -> Result<Vec<DyadicInterval>> {
        Ok(DyadicSystem::new(self.basis.grid, self.basis.window)?.cells().to_vec())
    }

    /// Coordinates of every member in the cell basis: `⟨e, e_c⟩`.
    pub fn coefficients(&self) -> Result<Vec<Vec<(usize, f64)>>> {
        let cells = self.cells()?;
        let root = self.basis.window.cell_len().sqrt();
        self.members
            .par_iter()
            .map(|m| {
                m.cells
                    .iter()
                    .map(|&(c, mult)| Ok((c, m.scale * mult * m.weight.integral(cells[c].span())? / root)))
                    .collect()
            })
            .collect()
    }

    /// Exact `‖e‖_{L^r}` of every member.
    pub fn lr_norms(&self, r: f64) -> Result<Vec<f64>> {
        let cells = self.cells()?;
        self.members
            .par_iter()
            .map(|m| {
                let mut s = 0.0;
                for &(c, mult) in &m.cells {
                    s += (m.scale * mult).abs().powf(r) * m.weight.integral_pow(cells[c].span(), r)?;
                }
                Ok(s.powf(1.0 / r))
            })
            .collect()
    }
}

fn cell_shape(sys: &DyadicSystem, iv: &DyadicInterval, haar: bool) -> Vec<(usize, f64)> {
    if haar {
        sys.haar_values(iv)
    } else {
        sys.cell_range(iv).map(|c| (c, 1.0)).collect()
    }
}

/// `c(I) · w · (h_I or χ_I)` over the Haar-resolvable intervals, with `c(I)` from `norm`.
fn weighted_family(
    sys: &DyadicSystem,
    weight: &Weight,
    haar: bool,
    norm: impl Fn(&DyadicInterval) -> Result<f64> + Sync,
    label: String,
) -> Result<NwoFamily> {
    let members = sys
        .haar_intervals()
        .par_iter()
        .map(|iv| {
            Ok(NwoMember {
                interval: *iv,
                weight: weight.clone(),
                scale: norm(iv)?,
                cells: cell_shape(sys, iv, haar),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NwoFamily { basis: Basis::of(sys), members, label })
}

/// `h_I`.
pub fn haar_family(sys: &DyadicSystem) -> Result<NwoFamily> {
    weighted_family(sys, &Weight::one(), true, |_| Ok(1.0), "haar".into())
}

/// `|I|^{-1/2} χ_I`.
pub fn indicator_family(sys: &DyadicSystem) -> Result<NwoFamily> {
    weighted_family(sys, &Weight::one(), false, |i| Ok(i.len().sqrt().recip()), "indicator".into())
}

/// Input family `H_I = χ_I μ^{-1/2} / μ⁻¹(I)^{1/2}`.
pub fn sufficiency_input(sys: &DyadicSystem, pair: &WeightPair) -> Result<NwoFamily> {
    let w = pair.mu.powf(-0.5);
    let mu = &pair.mu;
    weighted_family(sys, &w, false, |i| Ok(mu.integral_pow(i.span(), -1.0)?.sqrt().recip()), "H_I".into())
}

/// Output family `G_I = λ^{1/2} |I|^{1/2} h_I / λ(I)^{1/2}`.
pub fn sufficiency_output(sys: &DyadicSystem, pair: &WeightPair) -> Result<NwoFamily> {
    let w = pair.lambda.powf(0.5);
    let lam = &pair.lambda;
    weighted_family(sys, &w, true, |i| Ok((i.len() / lam.integral(i.span())?).sqrt()), "G_I".into())
}

/// Input family `μ^{1/2} χ_I / μ(I)^{1/2}`.
pub fn necessity_input(sys: &DyadicSystem, pair: &WeightPair) -> Result<NwoFamily> {
    let w = pair.mu.powf(0.5);
    let mu = &pair.mu;
    weighted_family(sys, &w, false, |i| Ok(mu.integral(i.span())?.sqrt().recip()), "mu_chi".into())
}

/// Output family `λ^{-1/2} h_I |I|^{1/2} / λ⁻¹(I)^{1/2}`.
pub fn necessity_output(sys: &DyadicSystem, pair: &WeightPair) -> Result<NwoFamily> {
    let w = pair.lambda.powf(-0.5);
    let lam = &pair.lambda;
    weighted_family(
        sys,
        &w,
        true,
        |i| Ok((i.len() / lam.integral_pow(i.span(), -1.0)?).sqrt()),
        "lambda_h".into(),
    )
}

#[derive(Clone, Debug)]
pub struct NwoReport {
    /// `sup_I ‖e_I‖_r / |I|^{1/r − 1/2}`
    pub sup_ratio: f64,
    pub argmax: Option<DyadicInterval>,
    pub support_violations: Vec<String>,
}

pub fn nwo_r_criterion(family: &NwoFamily, r: f64) -> Result<NwoReport> {
    if !(r > 0.0) {
        return Err(LabError::param(format!("r must be positive, got {r}")));
    }
    let cells = family.cells()?;
    let norms = family.lr_norms(r)?;
    let mut report = NwoReport { sup_ratio: 0.0, argmax: None, support_violations: Vec::new() };
    for (m, norm) in family.members.iter().zip(norms) {
        let span = m.interval.span();
        for &(c, mult) in &m.cells {
            if mult != 0.0 && !span.contains_span(&cells[c].span()) {
                report.support_violations.push(format!("{} meets cell {}", m.interval.id(), cells[c].id()));
            }
        }
        let ratio = norm / m.interval.len().powf(1.0 / r - 0.5);
        if ratio > report.sup_ratio {
            report.sup_ratio = ratio;
            report.argmax = Some(m.interval);
        }
    }
    Ok(report)
}

/// `Σ_I |⟨A e_I, f_I⟩|^p` for families indexed by the same intervals.
pub fn nwo_pairing_sum(a: &OperatorMatrix, e: &NwoFamily, f: &NwoFamily, p: f64) -> Result<f64> {
    check_p(p)?;
    if e.basis != *a.basis() || f.basis != *a.basis() {
        return Err(LabError::BasisMismatch("family and operator bases differ".into()));
    }
    if e.members.len() != f.members.len() {
        return Err(LabError::config("families have different lengths"));
    }
    let ec = e.coefficients()?;
    let fc = f.coefficients()?;
    let m = a.matrix();
    let terms: Vec<f64> = ec
        .par_iter()
        .zip(fc.par_iter())
        .map(|(ev, fv)| {
            let mut s = 0.0;
            for &(r, fr) in fv {
                let mut row = 0.0;
                for &(c, ecv) in ev {
                    row += m[(r, c)] * ecv;
                }
                s += fr * row;
            }
            s.abs().powf(p)
        })
        .collect();
    Ok(terms.iter().sum())
}

pub const BATTERY_SIZE: usize = 50;

/// Fixed battery of step functions on the basis cells: indicators of random
/// subintervals, random Haar sums, sampled powers `|x − c|^a`, and seeded noise.
pub fn test_battery(basis: &Basis, q: f64, seed: u64) -> Vec<Vec<f64>> {
    let n = basis.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = basis.window.cell_len();
    let mid = |i: usize| basis.window.lo + (i as f64 + 0.5) * h;
    let mut out = Vec::with_capacity(BATTERY_SIZE);
    for _ in 0..10 {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(a + 1..=n);
        out.push((0..n).map(|i| if (a..b).contains(&i) { 1.0 } else { 0.0 }).collect());
    }
    for _ in 0..10 {
        let mut v = vec![0.0; n];
        for _ in 0..8 {
            let len = 1usize << rng.gen_range(1..=n.trailing_zeros().max(1));
            let len = len.min(n);
            let start = rng.gen_range(0..=(n - len) / len) * len;
            let c: f64 = rng.gen_range(-1.0..1.0);
            for (i, x) in v[start..start + len].iter_mut().enumerate() {
                *x += if i < len / 2 { c } else { -c };
            }
        }
        out.push(v);
    }
    for _ in 0..10 {
        let center = rng.gen_range(basis.window.lo..basis.window.hi);
        let a = rng.gen_range(-0.9 / q..1.0);
        out.push((0..n).map(|i| (mid(i) - center).abs().powf(a)).collect());
    }
    while out.len() < BATTERY_SIZE {
        out.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    out
}

/// Battery sup of `‖M f‖_q / ‖f‖_q` with `M f = sup_I χ_I |⟨f, e_I⟩| / |I|^{1/2}`.
pub fn nwo_maximal_norm(family: &NwoFamily, q: f64, seed: u64) -> Result<f64> {
    if !(q > 1.0) || !q.is_finite() {
        return Err(LabError::param(format!("q must lie in (1, ∞), got {q}")));
    }
    let coeffs = family.coefficients()?;
    let cells = family.cells()?;
    let h = family.basis.window.cell_len();
    let root = h.sqrt();
    let battery = test_battery(&family.basis, q, seed);
    let ratios: Vec<f64> = battery
        .par_iter()
        .map(|f| {
            let mut mf = vec![0.0f64; f.len()];
            for (m, ec) in family.members.iter().zip(&coeffs) {
                let pairing: f64 = ec.iter().map(|&(c, v)| f[c] * root * v).sum();
                let val = pairing.abs() / m.interval.len().sqrt();
                let span = m.interval.span();
                for (c, cell) in cells.iter().enumerate() {
                    if span.contains_span(&cell.span()) {
                        mf[c] = mf[c].max(val);
                    }
                }
            }
            let lq = |v: &[f64]| (v.iter().map(|x| x.abs().powf(q) * h).sum::<f64>()).powf(1.0 / q);
            let denom = lq(f);
            if denom == 0.0 {
                0.0
            } else {
                lq(&mf) / denom
            }
        })
        .collect();
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Debug)]
pub struct MixedNormReport {
    /// `‖ ‖K(·,y)‖_{L^p(dx)} ‖_{L^{p′,∞}(dy)}`
    pub value: f64,
    /// Same for `K*`.
    pub adjoint_value: f64,
    pub weak_schatten: f64,
    /// `weak_schatten / √(value · adjoint_value)`
    pub ratio: f64,
    pub holds: bool,
}

/// `max_k (k h)^{1/p′} g*_k` for values `g` on cells of measure `h`.
pub fn weak_lp_quasinorm(g: &[f64], h: f64, p_prime: f64) -> f64 {
    let mut v: Vec<f64> = g.iter().map(|x| x.abs()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v.iter()
        .enumerate()
        .map(|(k, x)| ((k + 1) as f64 * h).powf(1.0 / p_prime) * x)
        .fold(0.0, f64::max)
}

fn column_mixed(k: &DMatrix<f64>, h: f64, p: f64) -> f64 {
    let cols: Vec<f64> = (0..k.ncols())
        .map(|j| k.column(j).iter().map(|x| x.abs().powf(p) * h).sum::<f64>().powf(1.0 / p))
        .collect();
    weak_lp_quasinorm(&cols, h, p / (p - 1.0))
}

/// Mixed norms of the kernel `K = T/|cell|` and the weak-Schatten check.
pub fn mixed_norm(t: &OperatorMatrix, p: f64) -> Result<MixedNormReport> {
    if !(p > 2.0) || !p.is_finite() {
        return Err(LabError::param(format!("mixed norm needs p > 2, got {p}")));
    }
    mixed_norm_with_spectrum(t, &singular_values(t)?, p)
}

/// [`mixed_norm`] with the spectrum of `t` already computed.
pub fn mixed_norm_with_spectrum(t: &OperatorMatrix, spec: &SingularSpectrum, p: f64) -> Result<MixedNormReport> {
    if !(p > 2.0) || !p.is_finite() {
        return Err(LabError::param(format!("mixed norm needs p > 2, got {p}")));
    }
    let h = t.basis().window.cell_len();
    let k = t.matrix() / h;
    let value = column_mixed(&k, h, p);
    let adjoint_value = column_mixed(&k.transpose(), h, p);
    let weak = weak_schatten(spec, p)?;
    let bound = (value * adjoint_value).sqrt();
    let ratio = if bound > 0.0 { weak / bound } else if weak == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(MixedNormReport { value, adjoint_value, weak_schatten: weak, ratio, holds: weak <= bound * (1.0 + 1e-12) })
}
