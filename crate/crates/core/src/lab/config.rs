//! Experiment configuration and its TOML form.
//!
//! Top-level keys: `experiment`, `window`, `scales`, `grids`, `weights`,
//! `symbols`, `p`, `seed`, `out`. Unknown keys are rejected. Omitted keys take
//! the per-experiment defaults of [`ExperimentConfig::default_for`].

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicGrid, DyadicInterval, TruncationWindow};
use crate::error::{LabError, Result};
use crate::symbols::{SmoothKind, Symbol};
use crate::weights::{Weight, WeightPair, DEFAULT_CENTER};

/// Largest number of finest cells any experiment will build.
pub const MAX_CELLS: usize = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentId {
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
    E7,
    E8,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        ExperimentId::E1,
        ExperimentId::E2,
        ExperimentId::E3,
        ExperimentId::E4,
        ExperimentId::E5,
        ExperimentId::E6,
        ExperimentId::E7,
        ExperimentId::E8,
    ];

    pub fn describe(self) -> &'static str {
        match self {
            ExperimentId::E1 => "paraproduct Schatten norm vs dyadic Besov norm",
            ExperimentId::E2 => "Hilbert commutator S2 norm vs continuous Besov norm",
            ExperimentId::E3 => "two-grid dyadic Besov norm vs continuous Besov norm",
            ExperimentId::E4 => "one-sided dyadic vs continuous bound and per-interval form ratios",
            ExperimentId::E5 => "NWO pairing sums vs Schatten norms",
            ExperimentId::E6 => "pathological weight family",
            ExperimentId::E7 => "unweighted p-sweep and mixed-norm weak Schatten bound",
            ExperimentId::E8 => "median-split lower-bound certificate",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ExperimentId {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|e| e.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| LabError::config(format!("unknown experiment {s:?}; expected E1..E8")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleSpec {
    pub j_min: i32,
    pub j_max: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridSpec {
    D0,
    D1,
}

impl GridSpec {
    pub fn grid(self) -> DyadicGrid {
        match self {
            GridSpec::D0 => DyadicGrid::Standard,
            GridSpec::D1 => DyadicGrid::ThirdShift,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    One,
    Constant { value: f64 },
    /// `|x − center|^exponent`
    Power { exponent: f64, center: f64 },
    Pathological { r: f64, levels: u32, a: f64 },
}

impl WeightSpec {
    pub fn power(exponent: f64) -> Self {
        WeightSpec::Power { exponent, center: DEFAULT_CENTER }
    }

    pub fn build(&self) -> Result<Weight> {
        match *self {
            WeightSpec::One => Ok(Weight::one()),
            WeightSpec::Constant { value } => Weight::constant(value),
            WeightSpec::Power { exponent, center } => {
                if !(exponent > -1.0 && exponent < 1.0) {
                    return Err(LabError::DegenerateWeight(format!(
                        "|x-{center}|^{exponent} is not an A2 weight (exponent must lie in (-1, 1))"
                    )));
                }
                Ok(Weight::power(exponent, center))
            }
            WeightSpec::Pathological { r, levels, a } => Weight::pathological(r, levels, a),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightPairSpec {
    pub mu: WeightSpec,
    pub lambda: WeightSpec,
}

impl WeightPairSpec {
    pub fn new(mu: WeightSpec, lambda: WeightSpec) -> Self {
        WeightPairSpec { mu, lambda }
    }

    pub fn build(&self) -> Result<WeightPair> {
        Ok(WeightPair::new(self.mu.build()?, self.lambda.build()?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HaarTerm {
    pub j: i32,
    pub k: i64,
    pub coef: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolSpec {
    /// `sin(2π·freq·x)` on `[0, 1)`
    Sine { freq: u32 },
    /// `x(1 − x)` on `[0, 1)`
    Parabola,
    /// cubic ramps on `[0, 1/4]` and `[3/4, 1]`, 1 between
    Plateau,
    Linear,
    Constant { value: f64 },
    /// Finite sum over standard-grid intervals `2^{-j}[k, k+1)`.
    Haar { terms: Vec<HaarTerm> },
}

impl SymbolSpec {
    pub fn build(&self) -> Symbol {
        match self {
            SymbolSpec::Sine { freq } => Symbol::sine(*freq),
            SymbolSpec::Parabola => Symbol::smooth(SmoothKind::Parabola),
            SymbolSpec::Plateau => Symbol::smooth(SmoothKind::Plateau),
            SymbolSpec::Linear => Symbol::smooth(SmoothKind::Linear),
            SymbolSpec::Constant { value } => Symbol::constant(*value),
            SymbolSpec::Haar { terms } => Symbol::haar(
                terms
                    .iter()
                    .map(|t| (DyadicInterval::new(DyadicGrid::Standard, t.j, t.k), t.coef))
                    .collect(),
            ),
        }
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self, SymbolSpec::Haar { .. })
    }

    pub fn single_haar() -> Self {
        SymbolSpec::Haar { terms: vec![HaarTerm { j: 0, k: 0, coef: 1.0 }] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub window: WindowSpec,
    pub scales: ScaleSpec,
    pub grids: Vec<GridSpec>,
    pub weights: Vec<WeightPairSpec>,
    pub symbols: Vec<SymbolSpec>,
    pub p: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
}

/// Same keys as [`ExperimentConfig`], all optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialConfig {
    experiment: Option<ExperimentId>,
    window: Option<WindowSpec>,
    scales: Option<ScaleSpec>,
    grids: Option<Vec<GridSpec>>,
    weights: Option<Vec<WeightPairSpec>>,
    symbols: Option<Vec<SymbolSpec>>,
    p: Option<Vec<f64>>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

/// `{1, |x−1/3|^{±1/4}, |x−1/3|^{±1/2}, pathological}` arranged as `(μ, λ)` pairs.
pub fn weight_battery() -> Vec<WeightPairSpec> {
    use WeightSpec as W;
    vec![
        WeightPairSpec::new(W::One, W::One),
        WeightPairSpec::new(W::power(0.25), W::power(-0.25)),
        WeightPairSpec::new(W::power(-0.25), W::power(0.25)),
        WeightPairSpec::new(W::power(0.5), W::power(0.5)),
        WeightPairSpec::new(W::power(-0.5), W::One),
        WeightPairSpec::new(W::One, W::Pathological { r: 2.0, levels: 2, a: 9.0 }),
    ]
}

pub fn smooth_battery() -> Vec<SymbolSpec> {
    vec![SymbolSpec::Sine { freq: 1 }, SymbolSpec::Parabola, SymbolSpec::Plateau]
}

fn haar_battery() -> Vec<SymbolSpec> {
    vec![
        SymbolSpec::single_haar(),
        SymbolSpec::Haar {
            terms: vec![
                HaarTerm { j: 1, k: 0, coef: 1.0 },
                HaarTerm { j: 2, k: 3, coef: -0.5 },
                HaarTerm { j: 3, k: 2, coef: 0.25 },
            ],
        },
    ]
}

impl ExperimentConfig {
    pub fn default_for(id: ExperimentId) -> Self {
        use ExperimentId::*;
        let (window, scales) = match id {
            E1 | E5 => (WindowSpec { lo: 0.0, hi: 2.0 }, ScaleSpec { j_min: -1, j_max: 7 }),
            E2 | E3 | E4 => (WindowSpec { lo: -4.0, hi: 4.0 }, ScaleSpec { j_min: -2, j_max: 7 }),
            E6 => (WindowSpec { lo: -4.0, hi: 4.0 }, ScaleSpec { j_min: -2, j_max: 10 }),
            E7 => (WindowSpec { lo: -2.0, hi: 2.0 }, ScaleSpec { j_min: -1, j_max: 7 }),
            E8 => (WindowSpec { lo: -2.0, hi: 2.0 }, ScaleSpec { j_min: -1, j_max: 8 }),
        };
        let symbols = match id {
            E1 | E5 => [smooth_battery(), haar_battery()].concat(),
            E2 => [smooth_battery(), vec![SymbolSpec::Constant { value: 1.0 }]].concat(),
            E3 | E4 => smooth_battery(),
            E6 => Vec::new(),
            E7 => vec![
                SymbolSpec::Sine { freq: 1 },
                SymbolSpec::Sine { freq: 2 },
                SymbolSpec::Parabola,
                SymbolSpec::Plateau,
                SymbolSpec::Linear,
            ],
            E8 => vec![SymbolSpec::Sine { freq: 1 }],
        };
        let weights = match id {
            E1 | E5 => weight_battery()[..4].to_vec(),
            E6 => (1..=4)
                .map(|levels| WeightPairSpec::new(WeightSpec::One, WeightSpec::Pathological { r: 2.0, levels, a: 9.0 }))
                .collect(),
            E7 => vec![WeightPairSpec::new(WeightSpec::One, WeightSpec::One)],
            _ => weight_battery(),
        };
        let p = match id {
            E1 | E5 => vec![1.5, 2.0, 3.0],
            E7 => vec![1.5, 3.0, 4.0],
            _ => vec![2.0],
        };
        let grids = match id {
            E3 | E4 | E6 => vec![GridSpec::D0, GridSpec::D1],
            _ => vec![GridSpec::D0],
        };
        ExperimentConfig {
            experiment: id,
            window,
            scales,
            grids,
            weights,
            symbols,
            p,
            seed: 20240601,
            out: PathBuf::from("out"),
        }
    }

    /// Parse a TOML document; absent keys take the defaults of its `experiment`
    /// (or of `fallback` when the document names none).
    pub fn from_toml(text: &str, fallback: ExperimentId) -> Result<Self> {
        let part: PartialConfig = toml::from_str(text)?;
        let mut cfg = ExperimentConfig::default_for(part.experiment.unwrap_or(fallback));
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = part.$f { cfg.$f = v; } )* };
        }
        take!(window, scales, grids, weights, symbols, p, seed, out);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn truncation_window(&self) -> Result<TruncationWindow> {
        TruncationWindow::new(self.window.lo, self.window.hi, self.scales.j_min, self.scales.j_max)
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.truncation_window()?;
        if w.n_cells() > MAX_CELLS {
            return Err(LabError::Infeasible(format!(
                "{} cells exceed the cap of {MAX_CELLS}",
                w.n_cells()
            )));
        }
        if self.p.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
            return Err(LabError::config("every p must lie in (0, ∞)"));
        }
        if self.grids.is_empty() {
            return Err(LabError::config("at least one grid is required"));
        }
        for w in &self.weights {
            w.build()?;
        }
        Ok(())
    }
}

fn num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| LabError::config(format!("cannot read {what} from {s:?}")))
}

/// `one`, `const:C`, `pow:E` (center 1/3), `pow:E@CENTER` or `path:R:J:A`.
pub fn parse_weight(s: &str) -> Result<WeightSpec> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    match parts.as_slice() {
        ["one"] => Ok(WeightSpec::One),
        ["const", c] => Ok(WeightSpec::Constant { value: num(c, "constant")? }),
        ["pow", e] => match e.split_once('@') {
            Some((e, c)) => Ok(WeightSpec::Power { exponent: num(e, "exponent")?, center: num(c, "center")? }),
            None => Ok(WeightSpec::power(num(e, "exponent")?)),
        },
        ["path", r, j, a] => Ok(WeightSpec::Pathological { r: num(r, "r")?, levels: num(j, "levels")?, a: num(a, "A")? }),
        _ => Err(LabError::config(format!("unknown weight {s:?}"))),
    }
}

/// `MU/LAMBDA`.
pub fn parse_weight_pair(s: &str) -> Result<WeightPairSpec> {
    let (mu, lambda) = s.split_once('/').ok_or_else(|| LabError::config(format!("expected MU/LAMBDA, got {s:?}")))?;
    Ok(WeightPairSpec::new(parse_weight(mu)?, parse_weight(lambda)?))
}

/// `sine:F`, `parabola`, `plateau`, `linear`, `const:C` or `haar:J:K:COEF[+J:K:COEF…]`.
pub fn parse_symbol(s: &str) -> Result<SymbolSpec> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("haar:") {
        let terms = rest
            .split('+')
            .map(|t| match t.split(':').collect::<Vec<_>>().as_slice() {
                [j, k, c] => Ok(HaarTerm { j: num(j, "j")?, k: num(k, "k")?, coef: num(c, "coefficient")? }),
                _ => Err(LabError::config(format!("expected J:K:COEF, got {t:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(SymbolSpec::Haar { terms });
    }
    match s.split(':').collect::<Vec<_>>().as_slice() {
        ["sine", f] => Ok(SymbolSpec::Sine { freq: num(f, "frequency")? }),
        ["sine"] => Ok(SymbolSpec::Sine { freq: 1 }),
        ["parabola"] => Ok(SymbolSpec::Parabola),
        ["plateau"] => Ok(SymbolSpec::Plateau),
        ["linear"] => Ok(SymbolSpec::Linear),
        ["const", c] => Ok(SymbolSpec::Constant { value: num(c, "constant")? }),
        _ => Err(LabError::config(format!("unknown symbol {s:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        for id in ExperimentId::ALL {
            let cfg = ExperimentConfig::default_for(id);
            cfg.validate().unwrap();
            let text = cfg.to_toml().unwrap();
            assert_eq!(ExperimentConfig::from_toml(&text, ExperimentId::E1).unwrap(), cfg);
        }
    }

    #[test]
    fn partial_document_fills_defaults() {
        let cfg = ExperimentConfig::from_toml("experiment = \"E3\"\nseed = 5\n", ExperimentId::E1).unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.window, ExperimentConfig::default_for(ExperimentId::E3).window);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml("sede = 5\n", ExperimentId::E1).is_err());
        assert!(ExperimentConfig::from_toml("[window]\nlo = 0.0\nhi = 1.0\nmid = 0.5\n", ExperimentId::E1).is_err());
        let bad = "[[weights]]\nmu = { kind = \"power\", exponent = 0.5, centre = 0.0 }\nlambda = { kind = \"one\" }\n";
        assert!(ExperimentConfig::from_toml(bad, ExperimentId::E1).is_err());
    }

    #[test]
    fn short_forms() {
        assert_eq!(parse_weight("pow:0.25").unwrap(), WeightSpec::power(0.25));
        assert_eq!(
            parse_weight_pair("one/path:2:3:9").unwrap().lambda,
            WeightSpec::Pathological { r: 2.0, levels: 3, a: 9.0 }
        );
        assert_eq!(parse_symbol("haar:0:0:1").unwrap(), SymbolSpec::single_haar());
        assert_eq!(parse_symbol("sine:2").unwrap(), SymbolSpec::Sine { freq: 2 });
        assert!(parse_symbol("cosine").is_err());
        assert!(parse_weight("pow:x").is_err());
    }

    #[test]
    fn oversized_window_refused() {
        let text = "[scales]\nj_min = -1\nj_max = 13\n";
        assert!(matches!(ExperimentConfig::from_toml(text, ExperimentId::E1), Err(LabError::Infeasible(_))));
    }

    #[test]
    fn non_a2_power_named() {
        let text = "[[weights]]\nmu = { kind = \"power\", exponent = 1.5, center = 0.0 }\nlambda = { kind = \"one\" }\n";
        assert!(matches!(ExperimentConfig::from_toml(text, ExperimentId::E1), Err(LabError::DegenerateWeight(_))));
    }
}
