//! The certification suites E1–E8 and the Haar-multiplier non-degeneracy check.

use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::besov::{
    continuous_besov_norm_p2, continuous_besov_norm_unweighted, dyadic_besov_norm, form_ratio_report, BesovForm,
};
use crate::dyadic::{haar_eval, DyadicGrid, DyadicInterval, DyadicSystem, Span, TruncationWindow};
use crate::error::{LabError, Result};
use crate::lab::config::{ExperimentConfig, ExperimentId, GridSpec, SymbolSpec, WeightSpec, MAX_CELLS};
use crate::lab::report::{Check, ExperimentOutcome, RatioTable};
use crate::operators::{commutator, hilbert, multiplication, paraproduct, weight_conjugate, OperatorMatrix};
use crate::schatten::{
    mixed_norm_with_spectrum, necessity_input, necessity_output, nwo_maximal_norm, nwo_pairing_sum, nwo_r_criterion,
    schatten_norm, singular_values, sufficiency_input, sufficiency_output, NwoFamily,
};
use crate::symbols::{haar_coefficients, median_split, Symbol};
use crate::weights::{a2_constant, reverse_holder_exponent, IntervalFamily, Weight, WeightPair};

pub const E1_SPREAD: f64 = 10.0;
pub const E2_SPREAD: f64 = 4.0;
pub const E3_SPREAD: f64 = 4.0;
/// Pinned bound for the one-sided dyadic ≤ C·continuous inequality.
pub const E4_BOUND: f64 = 10.0;
/// Pinned bound for pairing sum / `‖A‖^p_{S^p}`.
pub const E5_BOUND: f64 = 10.0;
pub const E6_A2_SPREAD: f64 = 4.0;
pub const E6_GROWTH: f64 = 4.0;
pub const E7_MIXED_P: f64 = 4.0;
pub const E8_BOUND: f64 = 100.0;
/// Scales `j` of the intervals `Q` tested in E8.
pub const E8_SCALES: RangeInclusive<i32> = 2..=5;
/// Largest relative change of a ratio when `j_max` grows by one.
pub const REFINEMENT_CHANGE: f64 = 0.10;
pub const SINGLE_HAAR_TOL: f64 = 1e-9;
/// Default `C` in `|I₀| ≤ C|Q|`.
pub const NONDEGENERACY_C: f64 = 8.0;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentId::E1 => e1(cfg),
        ExperimentId::E2 => e2(cfg),
        ExperimentId::E3 => e3(cfg),
        ExperimentId::E4 => e4(cfg),
        ExperimentId::E5 => e5(cfg),
        ExperimentId::E6 => e6(cfg),
        ExperimentId::E7 => e7(cfg),
        ExperimentId::E8 => e8(cfg),
    }
}

struct Case {
    label: String,
    spec: SymbolSpec,
    symbol: Symbol,
    pair: WeightPair,
}

fn clean(s: String) -> String {
    s.replace(',', ";")
}

fn pair_label(pair: &WeightPair) -> String {
    clean(pair.label())
}

/// `(case, reason)`
type Skipped = Vec<(String, String)>;

/// Symbol × weight-pair cases, with constant symbols set aside.
fn cases(cfg: &ExperimentConfig) -> Result<(Vec<Case>, Skipped)> {
    let pairs = cfg.weights.iter().map(|w| w.build()).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for spec in &cfg.symbols {
        let symbol = spec.build();
        for pair in &pairs {
            let label = clean(format!("{}|{}", symbol.label(), pair.label()));
            if symbol.is_zero_constant() {
                skipped.push((label, "zero symbol".to_string()));
                continue;
            }
            out.push(Case { label, spec: spec.clone(), symbol: symbol.clone(), pair: pair.clone() });
        }
    }
    Ok((out, skipped))
}

fn refined(window: &TruncationWindow) -> Result<TruncationWindow> {
    let w = window.with_j_max(window.j_max + 1)?;
    if w.n_cells() > MAX_CELLS {
        return Err(LabError::Infeasible(format!("refinement needs {} cells, cap is {MAX_CELLS}", w.n_cells())));
    }
    Ok(w)
}

fn spread_check(name: &str, table: &RatioTable, bound: f64) -> Check {
    Check::at_most(name, table.summary().map_or(f64::NAN, |s| s.spread), bound)
}

fn max_ratio(table: &RatioTable) -> f64 {
    table.summary().map_or(f64::NAN, |s| s.max)
}

fn refinement_check(table: &RatioTable) -> Check {
    let worst = table.rows.iter().map(|r| (r.ratio - 1.0).abs()).fold(0.0, f64::max);
    Check::at_most("refinement: max relative change", worst, REFINEMENT_CHANGE)
}

fn p_label(p: f64) -> String {
    format!("p={p}")
}

/// `‖λ^{1/2} Π_b μ^{-1/2}‖_{S^p}` against `‖b‖_{B^p_{ν,d}}`.
fn e1(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let window = cfg.truncation_window()?;
    let (cases, skipped) = cases(cfg)?;
    let jobs: Vec<(&Case, GridSpec)> = cases.iter().flat_map(|c| cfg.grids.iter().map(move |g| (c, *g))).collect();
    let norms = |c: &Case, grid: DyadicGrid, w: TruncationWindow| -> Result<Vec<(f64, f64)>> {
        let sys = DyadicSystem::new(grid, w)?;
        let a = weight_conjugate(&paraproduct(&c.symbol, &sys)?, &c.pair.lambda, &c.pair.mu)?;
        let spec = singular_values(&a)?;
        cfg.p
            .iter()
            .map(|&p| {
                let s = schatten_norm(&spec, p)?;
                let b = dyadic_besov_norm(&c.symbol, &c.pair, p, &sys, BesovForm::Nu)?.value;
                Ok((s, b))
            })
            .collect()
    };
    let results = jobs
        .par_iter()
        .map(|(c, g)| {
            let base = norms(c, g.grid(), window)?;
            let fine = if c.spec.is_smooth() { Some(norms(c, g.grid(), refined(&window)?)?) } else { None };
            Ok((base, fine))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = ExperimentOutcome::default();
    let mut refinement = RatioTable::new("refinement");
    for (k, &p) in cfg.p.iter().enumerate() {
        let mut t = RatioTable::new(p_label(p));
        if k == 0 {
            t.skipped = skipped.clone();
        }
        for ((c, g), (base, fine)) in jobs.iter().zip(&results) {
            let case = format!("{}|{:?}|{}|N={}", c.label, g, p_label(p), window.n_cells());
            let (s, b) = base[k];
            t.push(case.clone(), s, b);
            if let Some(fine) = fine {
                refinement.push(case, fine[k].0 / fine[k].1, s / b);
            }
        }
        out.checks.push(spread_check(&format!("spread {}", p_label(p)), &t, E1_SPREAD));
        out.tables.push(t);
    }
    out.checks.push(refinement_check(&refinement));
    out.tables.push(refinement);

    let two = cfg.p.iter().position(|&p| p == 2.0);
    let haar = jobs.iter().position(|(c, g)| {
        c.spec == SymbolSpec::single_haar() && c.pair == WeightPair::unweighted() && *g == GridSpec::D0
    });
    if let (Some(k), Some(j)) = (two, haar) {
        let (s, b) = results[j].0[k];
        out.checks.push(Check::at_most("single Haar: |S2 norm - 1|", (s - 1.0).abs(), SINGLE_HAAR_TOL));
        out.checks.push(Check::at_most("single Haar: |Besov norm - 1|", (b - 1.0).abs(), SINGLE_HAAR_TOL));
    }
    Ok(out)
}

/// `‖λ^{1/2}[b,H]μ^{-1/2}‖_{S²}` (Frobenius) at one resolution.
fn commutator_s2(c: &Case, window: &TruncationWindow, h: &OperatorMatrix) -> Result<f64> {
    let sys = DyadicSystem::new(DyadicGrid::Standard, *window)?;
    let t = commutator(&multiplication(&c.symbol, &sys)?, h)?;
    Ok(weight_conjugate(&t, &c.pair.lambda, &c.pair.mu)?.frobenius())
}

/// `‖[b,H]‖_{S²(L²_μ→L²_λ)}` against the continuous `‖b‖_{B²_ν}`.
fn e2(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let window = cfg.truncation_window()?;
    let fine_window = refined(&window)?;
    let (cases, skipped) = cases(cfg)?;
    let h = hilbert(&window)?;
    let h_fine = hilbert(&fine_window)?;
    let results = cases
        .par_iter()
        .map(|c| {
            let base = (commutator_s2(c, &window, &h)?, continuous_besov_norm_p2(&c.symbol, &c.pair, &window)?.value);
            let fine = (
                commutator_s2(c, &fine_window, &h_fine)?,
                continuous_besov_norm_p2(&c.symbol, &c.pair, &fine_window)?.value,
            );
            Ok((base, fine))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut main = RatioTable::new("main");
    main.skipped = skipped;
    let mut refinement = RatioTable::new("refinement");
    for (c, (base, fine)) in cases.iter().zip(&results) {
        let case = format!("{}|p=2|N={}", c.label, window.n_cells());
        main.push(case.clone(), base.0, base.1);
        refinement.push(case, fine.0 / fine.1, base.0 / base.1);
    }
    let checks = vec![spread_check("spread", &main, E2_SPREAD), refinement_check(&refinement)];
    Ok(ExperimentOutcome { tables: vec![main, refinement], checks })
}

fn continuous_norms(cases: &[Case], window: &TruncationWindow) -> Result<Vec<f64>> {
    cases
        .par_iter()
        .map(|c| Ok(continuous_besov_norm_p2(&c.symbol, &c.pair, window)?.value))
        .collect()
}

fn dyadic_norms(cases: &[Case], grid: DyadicGrid, window: &TruncationWindow) -> Result<Vec<f64>> {
    let sys = DyadicSystem::new(grid, *window)?;
    cases
        .par_iter()
        .map(|c| Ok(dyadic_besov_norm(&c.symbol, &c.pair, 2.0, &sys, BesovForm::Nu)?.value))
        .collect()
}

/// Sum of the dyadic norms over the configured grids against the continuous norm.
fn e3(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let window = cfg.truncation_window()?;
    let (cases, skipped) = cases(cfg)?;
    let cont = continuous_norms(&cases, &window)?;
    let mut sum = vec![0.0; cases.len()];
    for g in &cfg.grids {
        for (s, v) in sum.iter_mut().zip(dyadic_norms(&cases, g.grid(), &window)?) {
            *s += v;
        }
    }
    let grids: Vec<String> = cfg.grids.iter().map(|g| format!("{g:?}")).collect();
    let mut main = RatioTable::new("main");
    main.skipped = skipped;
    for ((c, s), d) in cases.iter().zip(sum).zip(cont) {
        main.push(format!("{}|{}|p=2|N={}", c.label, grids.join("+"), window.n_cells()), s, d);
    }
    let checks = vec![spread_check("spread", &main, E3_SPREAD)];
    Ok(ExperimentOutcome { tables: vec![main], checks })
}

/// Each dyadic norm against the continuous norm, and the per-interval form ratios.
fn e4(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let window = cfg.truncation_window()?;
    let (cases, skipped) = cases(cfg)?;
    let cont = continuous_norms(&cases, &window)?;
    let mut out = ExperimentOutcome::default();
    let mut worst: f64 = 0.0;
    for (k, g) in cfg.grids.iter().enumerate() {
        let mut t = RatioTable::new(format!("{g:?}"));
        if k == 0 {
            t.skipped = skipped.clone();
        }
        for ((c, d), cn) in cases.iter().zip(dyadic_norms(&cases, g.grid(), &window)?).zip(&cont) {
            t.push(format!("{}|{g:?}|p=2|N={}", c.label, window.n_cells()), d, *cn);
        }
        worst = worst.max(max_ratio(&t));
        out.tables.push(t);
    }
    out.checks.push(Check::at_most("dyadic/continuous: recorded C", worst, E4_BOUND));

    let mut forms = RatioTable::new("forms");
    let mut violations = 0usize;
    let mut form_max: f64 = 0.0;
    for w in &cfg.weights {
        let pair = w.build()?;
        for g in &cfg.grids {
            let sys = DyadicSystem::new(g.grid(), window)?;
            let r = form_ratio_report(&pair, &sys)?;
            violations += r.cauchy_schwarz_violations.len();
            form_max = form_max.max(r.max_ratio);
            forms.push(format!("{}|{g:?}|intervals={}", pair_label(&pair), r.intervals), r.max_ratio, 1.0);
        }
    }
    out.checks.push(Check::at_most("form ratios: max (finite)", form_max, f64::MAX));
    out.checks.push(Check::at_most("form ratios: Cauchy-Schwarz violations", violations as f64, 0.0));
    out.tables.push(forms);
    Ok(out)
}

struct FamilyPair {
    label: &'static str,
    input: NwoFamily,
    output: NwoFamily,
}

/// Pairing sums of conjugated paraproducts and commutators against their Schatten norms.
fn e5(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let window = cfg.truncation_window()?;
    let grid = cfg.grids[0].grid();
    let sys = DyadicSystem::new(grid, window)?;
    let (cases, skipped) = cases(cfg)?;
    let pairs = cfg.weights.iter().map(|w| w.build()).collect::<Result<Vec<_>>>()?;

    let families = pairs
        .par_iter()
        .map(|pair| {
            Ok(vec![
                FamilyPair { label: "H->G", input: sufficiency_input(&sys, pair)?, output: sufficiency_output(&sys, pair)? },
                FamilyPair { label: "chi->h", input: necessity_input(&sys, pair)?, output: necessity_output(&sys, pair)? },
            ])
        })
        .collect::<Result<Vec<_>>>()?;

    // (label, pair index, operator)
    let mut ops: Vec<(String, usize, OperatorMatrix)> = Vec::new();
    for c in &cases {
        let k = pairs.iter().position(|p| *p == c.pair).unwrap_or(0);
        let a = weight_conjugate(&paraproduct(&c.symbol, &sys)?, &c.pair.lambda, &c.pair.mu)?;
        ops.push((format!("Pi|{}", c.label), k, a));
    }
    if let Some(first) = cases.first() {
        if grid == DyadicGrid::Standard {
            let h = hilbert(&window)?;
            let t = commutator(&multiplication(&first.symbol, &sys)?, &h)?;
            for (k, pair) in pairs.iter().enumerate() {
                let a = weight_conjugate(&t, &pair.lambda, &pair.mu)?;
                ops.push((clean(format!("[b;H]|{}|{}", first.symbol.label(), pair.label())), k, a));
            }
        }
    }

    let rows = ops
        .par_iter()
        .map(|(label, k, a)| {
            let spec = singular_values(a)?;
            let mut rows = Vec::new();
            for &p in &cfg.p {
                let s = schatten_norm(&spec, p)?.powf(p);
                for fam in &families[*k] {
                    let sum = nwo_pairing_sum(a, &fam.input, &fam.output, p)?;
                    rows.push((p, format!("{label}|{}|{}|N={}", fam.label, p_label(p), window.n_cells()), sum, s));
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = ExperimentOutcome::default();
    for (i, &p) in cfg.p.iter().enumerate() {
        let mut t = RatioTable::new(p_label(p));
        if i == 0 {
            t.skipped = skipped.clone();
        }
        for (rp, case, sum, s) in rows.iter().flatten() {
            if *rp == p {
                if *s > 0.0 {
                    t.push(case.clone(), *sum, *s);
                } else {
                    t.skip(case.clone(), "zero operator");
                }
            }
        }
        out.checks.push(Check::at_most(format!("pairing/Schatten {}: recorded C", p_label(p)), max_ratio(&t), E5_BOUND));
        out.tables.push(t);
    }

    let mut r_table = RatioTable::new("nwo_r");
    let mut maximal = RatioTable::new("maximal_q2");
    let mut violations = 0usize;
    for (pair, fams) in pairs.iter().zip(&families) {
        for fam in fams {
            for (side, f) in [("in", &fam.input), ("out", &fam.output)] {
                let case = format!("{}|{}|{side}", pair_label(pair), fam.label);
                // members carry w = ν^{±1/2}; ‖e_I‖_r is controlled by reverse Hölder for w²
                let carried = f.members.first().map_or_else(Weight::one, |m| m.weight.powf(2.0));
                let rh = reverse_holder_exponent(&carried, &window)?;
                match rh.best() {
                    Some((r, _)) => {
                        let rep = nwo_r_criterion(f, r)?;
                        violations += rep.support_violations.len();
                        r_table.push(format!("{case}|r={r}"), rep.sup_ratio, 1.0);
                    }
                    None => r_table.skip(case.clone(), "no qualifying reverse Holder exponent"),
                }
                maximal.push(case, nwo_maximal_norm(f, 2.0, cfg.seed)?, 1.0);
            }
        }
    }
    out.checks.push(Check::at_most("NWO support violations", violations as f64, 0.0));
    out.checks.push(Check::at_most("NWO r-criterion: max (finite)", max_ratio(&r_table), f64::MAX));
    out.checks.push(Check::at_most("NWO maximal battery: max (finite)", max_ratio(&maximal), f64::MAX));
    out.tables.push(r_table);
    out.tables.push(maximal);
    Ok(out)
}

/// A₂ estimates and `∫_{[0,1)} λ^r` along the pathological family.
fn e6(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let window = cfg.truncation_window()?;
    let family = IntervalFamily::dyadic_and_random(&window, IntervalFamily::DEFAULT_RANDOM, cfg.seed)?;
    let rows = cfg
        .weights
        .par_iter()
        .map(|spec| {
            let WeightSpec::Pathological { r, levels, .. } = spec.lambda else {
                return Err(LabError::config("E6 expects a pathological target weight in every pair"));
            };
            let lambda = spec.lambda.build()?;
            let a2 = a2_constant(&lambda, &family)?.constant;
            let a2_peak = lambda.peak_a2().unwrap_or(a2).max(a2);
            let integral = lambda.integral_pow(Span::new(0.0, 1.0), r)?;
            Ok((format!("{}|J={levels}", clean(lambda.label())), a2, a2_peak, integral))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut a2 = RatioTable::new("a2");
    let mut growth = RatioTable::new("integral_growth");
    let mut peak = RatioTable::new("a2_peak_resolved");
    for (k, (case, a, ap, int)) in rows.iter().enumerate() {
        a2.push(case.clone(), *a, rows[0].1);
        peak.push(case.clone(), *ap, *a);
        if k > 0 {
            growth.push(case.clone(), *int, rows[k - 1].3);
        }
    }
    let min_growth = growth.summary().map_or(f64::NAN, |s| s.min);
    let checks = vec![
        spread_check("A2 spread", &a2, E6_A2_SPREAD),
        Check::at_least("integral growth per level: min", min_growth, E6_GROWTH),
    ];
    Ok(ExperimentOutcome { tables: vec![a2, growth, peak], checks })
}

/// Unweighted `‖[b,H]‖_{S^p}` against the continuous p-integral, and the
/// mixed-norm weak-Schatten bound.
fn e7(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let window = cfg.truncation_window()?;
    let sys = DyadicSystem::new(DyadicGrid::Standard, window)?;
    let (cases, skipped) = cases(cfg)?;
    let h = hilbert(&window)?;
    let results = cases
        .par_iter()
        .map(|c| {
            let t = commutator(&multiplication(&c.symbol, &sys)?, &h)?;
            let t = weight_conjugate(&t, &c.pair.lambda, &c.pair.mu)?;
            let spec = singular_values(&t)?;
            let sweep = cfg
                .p
                .iter()
                .map(|&p| {
                    let cont = if p > 1.0 && c.pair == WeightPair::unweighted() {
                        Some(continuous_besov_norm_unweighted(&c.symbol, p, &window)?.value)
                    } else {
                        None
                    };
                    Ok((schatten_norm(&spec, p)?, cont))
                })
                .collect::<Result<Vec<_>>>()?;
            let mixed = mixed_norm_with_spectrum(&t, &spec, E7_MIXED_P)?;
            Ok((sweep, mixed))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = ExperimentOutcome::default();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (k, &p) in cfg.p.iter().enumerate() {
        let mut t = RatioTable::new(p_label(p));
        if k == 0 {
            t.skipped = skipped.clone();
        }
        for (c, (sweep, _)) in cases.iter().zip(&results) {
            let case = format!("{}|{}|N={}", c.label, p_label(p), window.n_cells());
            match sweep[k] {
                (s, Some(cont)) => t.push(case, s, cont),
                (_, None) => t.skip(case, "continuous p-integral needs p > 1 and no weights"),
            }
        }
        if let Some(s) = t.summary() {
            lo = lo.min(s.min);
            hi = hi.max(s.max);
        }
        out.tables.push(t);
    }
    let mut mixed = RatioTable::new("mixed_p4");
    for (c, (_, m)) in cases.iter().zip(&results) {
        mixed.push(
            format!("{}|p={E7_MIXED_P}|N={}", c.label, window.n_cells()),
            m.weak_schatten,
            (m.value * m.adjoint_value).sqrt(),
        );
    }
    out.checks.push(Check::at_least("p-sweep ratios: min (positive)", lo, f64::MIN_POSITIVE));
    out.checks.push(Check::at_most("p-sweep ratios: max (finite)", hi, f64::MAX));
    out.checks.push(Check::at_most("weak Schatten / mixed bound: max", max_ratio(&mixed), 1.0 + 1e-12));
    out.tables.push(mixed);
    Ok(out)
}

/// `|b̂(Q)|²|Q|/(λ⁻¹(Q)μ(Q))` against `Σ_{s,j} |⟨λ^{1/2}[b,H]μ^{-1/2} G_{Q̂}, H_Q⟩|²`.
fn e8(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let window = cfg.truncation_window()?;
    if cfg.grids.iter().any(|g| *g != GridSpec::D0) {
        return Err(LabError::config("E8 works on the standard grid only"));
    }
    let sys = DyadicSystem::new(DyadicGrid::Standard, window)?;
    let (cases, skipped) = cases(cfg)?;
    let h = hilbert(&window)?;
    let cell = window.cell_len();
    let root = cell.sqrt();
    let rows = cases
        .par_iter()
        .map(|c| {
            let (b, pair) = (&c.symbol, &c.pair);
            let t = commutator(&multiplication(b, &sys)?, &h)?;
            let a = weight_conjugate(&t, &pair.lambda, &pair.mu)?;
            let m = a.matrix();
            let coeffs = haar_coefficients(b, &sys);
            let largest = coeffs.values.iter().fold(0.0f64, |x, v| x.max(v.abs()));
            let g_cells = pair.mu.powf(0.5).cell_averages(sys.cells())?;
            let h_cells = pair.lambda.powf(-0.5).cell_averages(sys.cells())?;
            let mut rows = Vec::new();
            let mut skipped = Vec::new();
            for j in E8_SCALES {
                for q in sys.at_scale(j) {
                    let case = format!("Q={}|{}", q.id(), c.label);
                    let bq = coeffs.get(q).unwrap_or(0.0);
                    if bq.abs() <= 1e-12 * largest {
                        skipped.push((case, "vanishing coefficient".to_string()));
                        continue;
                    }
                    let qhat = q.sibling();
                    let split = median_split(b, q.span(), qhat.span(), &window)?;
                    let lam_inv = pair.lambda.integral_pow(q.span(), -1.0)?;
                    let lhs = bq * bq * q.len() / (lam_inv * pair.mu.integral(q.span())?);
                    let g_norm = pair.mu.integral(qhat.span())?.sqrt();
                    let h_norm = lam_inv.sqrt();
                    let (left, _) = q.children();
                    let mut rhs = 0.0;
                    for s in 1..=2 {
                        for first_child in [true, false] {
                            let mut pairing = 0.0;
                            for &r in split.e(s) {
                                let mid = window.lo + (r as f64 + 0.5) * cell;
                                if (mid < left.hi()) != first_child {
                                    continue;
                                }
                                let hr = h_cells[r] * root / h_norm;
                                let row: f64 = split.f(s).iter().map(|&y| m[(r, y)] * g_cells[y] * root / g_norm).sum();
                                pairing += hr * row;
                            }
                            rhs += pairing * pairing;
                        }
                    }
                    rows.push((case, lhs, rhs));
                }
            }
            Ok((rows, skipped))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut main = RatioTable::new("main");
    main.skipped = skipped;
    for (r, s) in rows {
        for (case, lhs, rhs) in r {
            main.push(case, lhs, rhs);
        }
        main.skipped.extend(s);
    }
    let checks = vec![Check::at_most("lower-bound certificate: recorded C", max_ratio(&main), E8_BOUND)];
    Ok(ExperimentOutcome { tables: vec![main], checks })
}

/// One admissible `(Q̂, I₀)` and `min_{x∈Q, y∈Q̂} |Σ_{I⊇I₀} ε_I h_I(x)h_I(y)|·|I₀|`.
#[derive(Clone, Debug, PartialEq)]
pub struct NondegeneracyCandidate {
    pub qhat: DyadicInterval,
    pub i0: DyadicInterval,
    pub min_scaled: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NondegeneracyReport {
    pub q: DyadicInterval,
    pub candidates: Vec<NondegeneracyCandidate>,
    /// Set when no admissible `(Q̂, I₀)` exists in the window.
    pub untestable: Option<String>,
}

impl NondegeneracyReport {
    pub fn best(&self) -> Option<&NondegeneracyCandidate> {
        self.candidates.iter().max_by(|a, b| a.min_scaled.total_cmp(&b.min_scaled))
    }

    /// The candidate with `Q̂` the sibling of `Q` and `I₀` its parent.
    pub fn sibling(&self) -> Option<&NondegeneracyCandidate> {
        self.candidates.iter().find(|c| c.qhat == self.q.sibling() && c.i0 == self.q.parent())
    }
}

/// `ε` is indexed like `sys.haar_intervals()`. `Q̂ ≠ Q` ranges over intervals of
/// the scale of `Q` within distance `|Q|`; `I₀` over Haar-resolvable ancestors of
/// `Q` containing `Q̂` with `|I₀| ≤ c|Q|`.
pub fn epsilon_nondegeneracy_check(
    eps: &[f64],
    sys: &DyadicSystem,
    q: &DyadicInterval,
    c: f64,
) -> Result<NondegeneracyReport> {
    let haar = sys.haar_intervals();
    if eps.len() != haar.len() {
        return Err(LabError::config(format!("{} signs for {} Haar intervals", eps.len(), haar.len())));
    }
    if sys.index_of(q).is_none() {
        return Err(LabError::param(format!("{} is not in the system", q.id())));
    }
    let sign = |i: &DyadicInterval| haar.iter().position(|h| h == i).map(|k| eps[k]);
    let mut ancestors = Vec::new();
    let mut a = q.parent();
    while let Some(e) = sign(&a) {
        ancestors.push((a, e));
        a = a.parent();
    }
    let mut report = NondegeneracyReport { q: *q, candidates: Vec::new(), untestable: None };
    if ancestors.is_empty() {
        report.untestable = Some("no ancestor of Q in the window".into());
        return Ok(report);
    }
    let cells = sys.cells();
    let cells_of = |iv: &DyadicInterval| -> Vec<f64> { sys.cell_range(iv).map(|k| cells[k].midpoint()).collect() };
    let xs = cells_of(q);
    for dk in [-2i64, -1, 1, 2] {
        let qhat = DyadicInterval::new(q.grid, q.j, q.k + dk);
        if sys.index_of(&qhat).is_none() {
            continue;
        }
        let ys = cells_of(&qhat);
        for (n, (i0, _)) in ancestors.iter().enumerate() {
            if i0.len() > c * q.len() * (1.0 + 1e-12) || !i0.contains(&qhat) {
                continue;
            }
            let chain = &ancestors[n..];
            let mut min = f64::INFINITY;
            for &x in &xs {
                for &y in &ys {
                    let s: f64 = chain.iter().map(|(i, e)| e * haar_eval(i, x) * haar_eval(i, y)).sum();
                    min = min.min(s.abs() * i0.len());
                }
            }
            report.candidates.push(NondegeneracyCandidate { qhat, i0: *i0, min_scaled: min });
        }
    }
    if report.candidates.is_empty() {
        report.untestable = Some(format!("no admissible (Q-hat, I0) with |I0| <= {c}|Q|"));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(j_min: i32, j_max: i32) -> DyadicSystem {
        DyadicSystem::new(DyadicGrid::Standard, TruncationWindow::new(0.0, 1.0, j_min, j_max).unwrap()).unwrap()
    }

    #[test]
    fn identity_signs_are_degenerate() {
        let s = sys(0, 8);
        let eps = vec![1.0; s.haar_intervals().len()];
        let q = DyadicInterval::new(DyadicGrid::Standard, 6, 17);
        let rep = epsilon_nondegeneracy_check(&eps, &s, &q, NONDEGENERACY_C).unwrap();
        // −1/|I₀| + Σ_{k=1}^{5} 2^{-k}/|I₀| with the parent at scale 5
        assert!((rep.sibling().unwrap().min_scaled - 2f64.powi(-5)).abs() < 1e-12);
    }

    #[test]
    fn flipped_parent_is_nondegenerate() {
        let s = sys(0, 8);
        let q = DyadicInterval::new(DyadicGrid::Standard, 6, 17);
        let eps: Vec<f64> = s.haar_intervals().iter().map(|i| if *i == q.parent() { -1.0 } else { 1.0 }).collect();
        let rep = epsilon_nondegeneracy_check(&eps, &s, &q, NONDEGENERACY_C).unwrap();
        assert!((rep.sibling().unwrap().min_scaled - (2.0 - 2f64.powi(-5))).abs() < 1e-12);
        assert!(rep.best().unwrap().min_scaled >= rep.sibling().unwrap().min_scaled);
    }

    #[test]
    fn single_scale_untestable() {
        let s = sys(0, 0);
        let q = DyadicInterval::new(DyadicGrid::Standard, 0, 0);
        let rep = epsilon_nondegeneracy_check(&[], &s, &q, NONDEGENERACY_C).unwrap();
        assert!(rep.untestable.is_some());
    }

    #[test]
    fn e6_flat_a2_and_growing_integrals() {
        let out = run_experiment(&ExperimentConfig::default_for(ExperimentId::E6)).unwrap();
        let growth = out.table("integral_growth").unwrap();
        assert_eq!(growth.rows.len(), 3);
        assert!(out.passed(), "{:?}", out.checks);
    }

    #[test]
    fn constant_symbol_is_skipped() {
        let mut cfg = ExperimentConfig::default_for(ExperimentId::E3);
        cfg.scales.j_max = 4;
        cfg.symbols = vec![SymbolSpec::Constant { value: 2.0 }, SymbolSpec::Parabola];
        cfg.weights.truncate(1);
        let out = run_experiment(&cfg).unwrap();
        let t = out.table("main").unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.skipped[0].1, "zero symbol");
    }
}
