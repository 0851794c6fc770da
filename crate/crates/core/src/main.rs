use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use schatten_lab::besov::{continuous_besov_norm_p2, dyadic_besov_norm, BesovForm};
use schatten_lab::dyadic::{DyadicGrid, DyadicSystem};
use schatten_lab::error::{LabError, Result};
use schatten_lab::format::{csv, sig12};
use schatten_lab::lab::config::{parse_symbol, parse_weight_pair, ExperimentConfig, ExperimentId, GridSpec};
use schatten_lab::lab::{emit_report, run_experiment, ExperimentOutcome};
use schatten_lab::operators::{
    commutator, hilbert, multiplication, paraproduct, paraproduct_adjoint, petermichl_shift, weight_conjugate,
    OperatorMatrix,
};
use schatten_lab::schatten::singular_values;

#[derive(Parser)]
#[command(name = "schatten-lab", version, about = "Weighted Besov norms and Schatten classes of dyadic operators")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Each flag replaces the matching config key.
#[derive(Args, Default)]
struct Overrides {
    /// TOML config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// window as LO,HI
    #[arg(long, global = true, value_parser = parse_window)]
    window: Option<(f64, f64)>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    j_min: Option<i32>,
    #[arg(long, global = true)]
    j_max: Option<i32>,
    /// D0, D1 or both, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    grids: Option<Vec<GridArg>>,
    /// MU/LAMBDA with each weight one, const:C, pow:E[@CENTER] or path:R:J:A; repeatable
    #[arg(long = "weights", global = true, value_parser = parse_weight_arg)]
    weights: Vec<schatten_lab::lab::config::WeightPairSpec>,
    /// sine:F, parabola, plateau, linear, const:C or haar:J:K:COEF[+J:K:COEF...]; repeatable
    #[arg(long = "symbols", global = true, value_parser = parse_symbol_arg)]
    symbols: Vec<schatten_lab::lab::config::SymbolSpec>,
    /// exponents, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridArg {
    D0,
    D1,
}

#[derive(Subcommand)]
enum Command {
    /// Dyadic and continuous Besov norms for every symbol and weight pair
    Besov,
    /// Build a weight-conjugated operator for the first symbol and pair
    Operator {
        #[arg(long, value_enum, default_value = "commutator")]
        kind: OperatorKind,
        #[arg(long, value_enum, default_value = "binary")]
        format: MatrixFormat,
        /// file name inside the output directory
        #[arg(long, default_value = "operator.bin")]
        file: PathBuf,
    },
    /// Singular values of the operator as (index, sigma)
    Spectrum {
        #[arg(long, value_enum, default_value = "commutator")]
        kind: OperatorKind,
    },
    /// Run one experiment; exit 0 only if its acceptance predicate holds
    Certify {
        #[arg(value_parser = parse_experiment)]
        experiment: ExperimentId,
    },
    /// Run every experiment and write all reports
    Report,
}

#[derive(Clone, Copy, ValueEnum)]
enum OperatorKind {
    Paraproduct,
    ParaproductAdjoint,
    /// `[M_b, H]`
    Commutator,
    /// `[M_b, Ш]`
    ShiftCommutator,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixFormat {
    Binary,
    Csv,
}

fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

fn parse_weight_arg(s: &str) -> std::result::Result<schatten_lab::lab::config::WeightPairSpec, String> {
    parse_weight_pair(s).map_err(|e| e.to_string())
}

fn parse_symbol_arg(s: &str) -> std::result::Result<schatten_lab::lab::config::SymbolSpec, String> {
    parse_symbol(s).map_err(|e| e.to_string())
}

fn parse_experiment(s: &str) -> std::result::Result<ExperimentId, String> {
    s.parse().map_err(|e: LabError| e.to_string())
}

impl Overrides {
    fn load(&self, experiment: ExperimentId) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let cfg = ExperimentConfig::from_toml(&fs::read_to_string(path)?, experiment)?;
                if cfg.experiment != experiment {
                    return Err(LabError::InvalidConfiguration(format!(
                        "config file names {} but {} was requested",
                        cfg.experiment, experiment
                    )));
                }
                cfg
            }
            None => ExperimentConfig::default_for(experiment),
        };
        if let Some((lo, hi)) = self.window {
            cfg.window.lo = lo;
            cfg.window.hi = hi;
        }
        if let Some(j) = self.j_min {
            cfg.scales.j_min = j;
        }
        if let Some(j) = self.j_max {
            cfg.scales.j_max = j;
        }
        if let Some(g) = &self.grids {
            cfg.grids = g
                .iter()
                .map(|g| match g {
                    GridArg::D0 => GridSpec::D0,
                    GridArg::D1 => GridSpec::D1,
                })
                .collect();
        }
        if !self.weights.is_empty() {
            cfg.weights = self.weights.clone();
        }
        if !self.symbols.is_empty() {
            cfg.symbols = self.symbols.clone();
        }
        if let Some(p) = &self.p {
            cfg.p = p.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Config for the non-experiment subcommands; keys default to E2's.
    fn load_any(&self) -> Result<ExperimentConfig> {
        let base = match &self.config {
            Some(path) => ExperimentConfig::from_toml(&fs::read_to_string(path)?, ExperimentId::E2)?.experiment,
            None => ExperimentId::E2,
        };
        self.load(base)
    }
}

fn build_operator(cfg: &ExperimentConfig, kind: OperatorKind) -> Result<OperatorMatrix> {
    let window = cfg.truncation_window()?;
    let symbol = cfg.symbols.first().ok_or_else(|| LabError::InvalidConfiguration("no symbol configured".into()))?;
    let pair = cfg
        .weights
        .first()
        .ok_or_else(|| LabError::InvalidConfiguration("no weight pair configured".into()))?
        .build()?;
    let b = symbol.build();
    let grid = cfg.grids[0].grid();
    let sys = DyadicSystem::new(grid, window)?;
    let t = match kind {
        OperatorKind::Paraproduct => paraproduct(&b, &sys)?,
        OperatorKind::ParaproductAdjoint => paraproduct_adjoint(&b, &sys)?,
        OperatorKind::Commutator => {
            let std = DyadicSystem::new(DyadicGrid::Standard, window)?;
            commutator(&multiplication(&b, &std)?, &hilbert(&window)?)?
        }
        OperatorKind::ShiftCommutator => commutator(&multiplication(&b, &sys)?, &petermichl_shift(&sys)?)?,
    };
    weight_conjugate(&t, &pair.lambda, &pair.mu)
}

fn besov_table(cfg: &ExperimentConfig) -> Result<String> {
    let window = cfg.truncation_window()?;
    let mut rows = Vec::new();
    for s in &cfg.symbols {
        let b = s.build();
        for w in &cfg.weights {
            let pair = w.build()?;
            let case = format!("{}|{}", b.label(), pair.label()).replace(',', ";");
            for g in &cfg.grids {
                let sys = DyadicSystem::new(g.grid(), window)?;
                for &p in &cfg.p {
                    for form in BesovForm::ALL {
                        let r = dyadic_besov_norm(&b, &pair, p, &sys, form)?;
                        let norm = format!("dyadic-{g:?}-{}-p={p}", form.label());
                        rows.push(vec![case.clone(), norm, sig12(r.value), String::new()]);
                    }
                }
            }
            if b.lipschitz().is_some() {
                let r = continuous_besov_norm_p2(&b, &pair, &window)?;
                let err = r.error_estimate.map(sig12).unwrap_or_default();
                rows.push(vec![case.clone(), "continuous-p=2".into(), sig12(r.value), err]);
            }
        }
    }
    Ok(csv(&["case", "norm", "value", "error_estimate"], rows))
}

fn print_outcome(id: ExperimentId, outcome: &ExperimentOutcome) {
    for c in &outcome.checks {
        let rel = if c.at_least { ">=" } else { "<=" };
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        println!("{id} {verdict} {}: {} {rel} {}", c.name, sig12(c.value), sig12(c.threshold));
    }
}

fn certify(cfg: &ExperimentConfig) -> Result<bool> {
    let outcome = run_experiment(cfg)?;
    emit_report(&outcome, cfg, &cfg.out)?;
    print_outcome(cfg.experiment, &outcome);
    Ok(outcome.passed())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Besov => {
            let cfg = cli.overrides.load_any()?;
            print!("{}", besov_table(&cfg)?);
            Ok(true)
        }
        Command::Operator { kind, format, file } => {
            let cfg = cli.overrides.load_any()?;
            let t = build_operator(&cfg, kind)?;
            fs::create_dir_all(&cfg.out)?;
            let path = cfg.out.join(file);
            match format {
                MatrixFormat::Binary => t.write_binary(std::io::BufWriter::new(fs::File::create(&path)?))?,
                MatrixFormat::Csv => fs::write(&path, t.to_csv())?,
            }
            println!("{}", path.display());
            Ok(true)
        }
        Command::Spectrum { kind } => {
            let cfg = cli.overrides.load_any()?;
            let spec = singular_values(&build_operator(&cfg, kind)?)?;
            std::io::stdout().write_all(spec.to_csv().as_bytes())?;
            Ok(true)
        }
        Command::Certify { experiment } => certify(&cli.overrides.load(experiment)?),
        Command::Report => {
            if cli.overrides.config.is_some() {
                return Err(LabError::InvalidConfiguration(
                    "report runs every experiment from its defaults; use certify with --config".into(),
                ));
            }
            let mut all = true;
            for id in ExperimentId::ALL {
                all &= certify(&cli.overrides.load(id)?)?;
            }
            Ok(all)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
