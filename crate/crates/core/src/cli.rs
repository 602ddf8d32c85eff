//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure (including a failed `validate`),
//! 2 configuration or validation error, 3 infeasible optimization.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::model::{db_to_linear, validate_scenario, BandPlan, ChannelSet, Scenario};
use crate::multiplexing::{correlation, fit_alpha, FitOptions};
use crate::optimizer::{bado, ofdm_baseline, recover_powers, BadoOptions, Problem};
use crate::simulation::{sweep_power, sweep_threshold, write_csv, Method, RealizationBatch};

#[derive(Debug, Parser)]
#[command(name = "ctsf", version, about = "True/fake frequency multiplexing against interception")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Scenario TOML file, or `demo` for the built-in four-band scenario.
    #[arg(long, global = true, default_value = "demo")]
    config: String,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Repeatable. Sweeps default to all methods, `optimize` to `bado`.
    #[arg(long, global = true)]
    method: Vec<Method>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    dump_config: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize one channel realization and write result.json.
    Optimize {
        /// JSON channel set; realization 0 of the seeded batch otherwise.
        #[arg(long)]
        channels: Option<PathBuf>,
    },
    /// Monte-Carlo sweep over the total power, in dB.
    SweepPower {
        #[arg(long, value_delimiter = ',')]
        grid_db: Option<Vec<f64>>,
    },
    /// Monte-Carlo sweep over the deception threshold.
    SweepThreshold {
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Fit the multiplexing factor to target coefficients.
    FitAlpha {
        /// One value per line, or a bracketed array.
        #[arg(long)]
        targets: PathBuf,
        /// Defaults to the configured reference band.
        #[arg(long)]
        k_ref: Option<usize>,
        #[arg(long)]
        alpha0: Option<f64>,
    },
    /// Run the built-in oracle checks.
    Validate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Optimize { .. } => "optimize",
            Command::SweepPower { .. } => "sweep-power",
            Command::SweepThreshold { .. } => "sweep-threshold",
            Command::FitAlpha { .. } => "fit-alpha",
            Command::Validate => "validate",
        }
    }
}

impl clap::ValueEnum for Method {
    fn value_variants<'a>() -> &'a [Self] {
        &Method::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.name()))
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_path: &'a str,
    config_sha256: String,
    overrides: Vec<(String, String)>,
    seed: u64,
    trials: usize,
    methods: Vec<Method>,
    version: &'static str,
    outputs: Vec<String>,
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            let code = exit_code(&e);
            match e {
                Error::Precondition(msg) | Error::Config(msg) => {
                    for line in msg.split("; ") {
                        eprintln!("{line}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            code
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Precondition(_) | Error::AlphaOutOfRange(_) => 2,
        Error::Infeasible(_) => 3,
        _ => 1,
    }
}

fn load_config(g: &GlobalArgs) -> Result<(ScenarioConfig, Vec<(String, String)>)> {
    let mut cfg = if g.config == "demo" {
        ScenarioConfig::default()
    } else {
        ScenarioConfig::load(Path::new(&g.config))?
    };
    let mut overrides = Vec::new();
    if let Some(seed) = g.seed {
        cfg.seed = seed;
        overrides.push(("seed".to_string(), seed.to_string()));
    }
    if let Some(trials) = g.trials {
        cfg.trials = trials;
        overrides.push(("trials".to_string(), trials.to_string()));
    }
    let violations = validate_scenario(&cfg.to_scenario());
    if !violations.is_empty() {
        return Err(Error::Config(violations.join("; ")));
    }
    Ok((cfg, overrides))
}

fn dispatch(cli: Cli) -> Result<i32> {
    let g = &cli.global;
    let (cfg, overrides) = load_config(g)?;
    if g.dump_config {
        print!("{}", cfg.to_toml_string()?);
        return Ok(0);
    }
    let Some(command) = cli.command else {
        return Err(Error::Config("no subcommand given; see --help".into()));
    };
    let scenario = cfg.to_scenario();
    let mut manifest = Manifest {
        command: command.name(),
        config_path: &g.config,
        config_sha256: format!("{:x}", Sha256::digest(cfg.to_toml_string()?.as_bytes())),
        overrides,
        seed: scenario.seed,
        trials: scenario.trials,
        methods: g.method.clone(),
        version: env!("CARGO_PKG_VERSION"),
        outputs: Vec::new(),
    };

    let mut files: Vec<(&str, Vec<u8>)> = Vec::new();
    let mut code = 0;
    match &command {
        Command::Optimize { channels } => {
            let method = match g.method.as_slice() {
                [] => Method::Bado,
                [m] => *m,
                _ => return Err(Error::Config("optimize takes a single --method".into())),
            };
            manifest.methods = vec![method];
            let ch = match channels {
                Some(path) => read_channels(path)?,
                None => RealizationBatch::generate(&Scenario { trials: 1, ..scenario.clone() })
                    .realizations
                    .remove(0),
            };
            let result = optimize(&scenario, &ch, method)?;
            files.push(("result.json", to_json(&result)?));
        }
        Command::SweepPower { grid_db } => {
            let grid: Vec<f64> = grid_db
                .clone()
                .unwrap_or_else(|| (0..=10).map(|i| 2.0 * i as f64).collect())
                .into_iter()
                .map(db_to_linear)
                .collect();
            let methods = methods_or_all(&g.method);
            manifest.methods = methods.clone();
            let records = sweep_power(&scenario, &grid, &methods)?;
            files.push(("metrics.csv", csv_bytes(&records)?));
        }
        Command::SweepThreshold { grid } => {
            let grid = grid
                .clone()
                .unwrap_or_else(|| (0..=12).map(|i| i as f64 / 10.0).collect());
            let methods = methods_or_all(&g.method);
            manifest.methods = methods.clone();
            let records = sweep_threshold(&scenario, &grid, &methods)?;
            files.push(("metrics.csv", csv_bytes(&records)?));
        }
        Command::FitAlpha { targets, k_ref, alpha0 } => {
            let targets = read_targets(targets)?;
            let k_ref = match k_ref {
                Some(k) => *k,
                None if targets.len() == scenario.band_plan.num_bands => {
                    scenario.band_plan.reference_band().unwrap_or(0)
                }
                None => 0,
            };
            let mut opts = FitOptions::default();
            if let Some(a) = alpha0 {
                opts.alpha0 = *a;
            }
            let fit = fit_alpha(&targets, targets.len(), k_ref, &opts)?;
            let value = json!({
                "alpha_star": fit.alpha_star,
                "residual": fit.final_residual,
                "iterations": fit.iterations,
                "converged": fit.converged,
            });
            println!("{value}");
            files.push(("result.json", to_json(&value)?));
        }
        Command::Validate => {
            let suites = validate_suites(&scenario);
            let mut all = true;
            for (name, outcome) in &suites {
                match outcome {
                    Ok(()) => println!("PASS {name}"),
                    Err(why) => {
                        all = false;
                        println!("FAIL {name}: {why}");
                    }
                }
            }
            let value = json!(suites
                .iter()
                .map(|(name, o)| json!({"suite": name, "passed": o.is_ok()}))
                .collect::<Vec<_>>());
            files.push(("result.json", to_json(&value)?));
            if !all {
                code = 1;
            }
        }
    }

    manifest.outputs = files.iter().map(|(n, _)| n.to_string()).collect();
    manifest.outputs.push("manifest.json".into());
    files.push(("manifest.json", to_json(&manifest)?));
    write_outputs(&g.out, &files, g.force)?;
    Ok(code)
}

fn methods_or_all(methods: &[Method]) -> Vec<Method> {
    if methods.is_empty() {
        Method::ALL.to_vec()
    } else {
        methods.to_vec()
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn csv_bytes(records: &[crate::simulation::MetricsRecord]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    Ok(buf)
}

/// Checks every target before writing any, so a refusal leaves no partial
/// output behind.
fn write_outputs(dir: &Path, files: &[(&str, Vec<u8>)], force: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    if !force {
        let existing: Vec<String> = files
            .iter()
            .map(|(name, _)| dir.join(name))
            .filter(|p| p.exists())
            .map(|p| format!("{} exists, pass --force to overwrite", p.display()))
            .collect();
        if !existing.is_empty() {
            return Err(Error::Config(existing.join("; ")));
        }
    }
    for (name, bytes) in files {
        fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}

fn read_channels(path: &Path) -> Result<ChannelSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn read_targets(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let trimmed = text.trim();
    if trimmed.starts_with('[') {
        return serde_json::from_str(trimmed).map_err(|e| Error::Config(format!("{}: {e}", path.display())));
    }
    trimmed
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<f64>()
                .map_err(|_| Error::Config(format!("{}: bad target {l:?}", path.display())))
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct OptimizeOutput {
    method: Method,
    objective_bits: f64,
    iterations: usize,
    converged: bool,
    xi: Vec<f64>,
    powers: Vec<f64>,
    coefficients: Vec<f64>,
    alpha_star: Option<f64>,
    alpha_residual: Option<f64>,
    min_decoy_powers: Vec<f64>,
    band_rates: Vec<f64>,
    trace: Vec<f64>,
    channels: ChannelSet,
}

fn optimize(scenario: &Scenario, ch: &ChannelSet, method: Method) -> Result<OptimizeOutput> {
    let plan = &scenario.band_plan;
    let problem = Problem::new(ch.normalized(), plan.clone(), scenario.deception_threshold, scenario.total_power)?;
    let opts = BadoOptions::default();
    match method {
        Method::Bado | Method::BadoUnconstrained => {
            let problem = if method == Method::Bado {
                problem
            } else {
                problem.without_decoy_constraints()
            };
            let r = bado(&problem, &opts)?;
            if !r.converged {
                return Err(Error::Solver("alternating optimization did not converge".into()));
            }
            let rec = recover_powers(&problem, &r)?;
            Ok(OptimizeOutput {
                method,
                objective_bits: r.objective,
                iterations: r.iterations,
                converged: r.converged,
                xi: r.xi_star.0,
                powers: rec.powers.powers,
                coefficients: rec.coefficients,
                alpha_star: Some(rec.alpha_fit.alpha_star),
                alpha_residual: Some(rec.alpha_fit.final_residual),
                min_decoy_powers: rec.min_decoy_powers,
                band_rates: rec.band_rates,
                trace: r.trace,
                channels: ch.clone(),
            })
        }
        Method::Ofdm => {
            let r = ofdm_baseline(&problem, &opts)?;
            let k = plan.num_bands;
            Ok(OptimizeOutput {
                method,
                objective_bits: r.objective,
                iterations: r.iterations,
                converged: r.converged,
                powers: r.xi_star.0.clone(),
                xi: r.xi_star.0,
                coefficients: vec![1.0; k],
                alpha_star: None,
                alpha_residual: None,
                min_decoy_powers: Vec::new(),
                band_rates: Vec::new(),
                trace: r.trace,
                channels: ch.clone(),
            })
        }
        Method::Equal => Err(Error::Config("optimize does not support --method equal".into())),
    }
}

type SuiteOutcome = std::result::Result<(), String>;

fn validate_suites(scenario: &Scenario) -> Vec<(&'static str, SuiteOutcome)> {
    vec![
        ("substitution-identity", substitution_suite(scenario)),
        ("alpha-round-trip", round_trip_suite()),
        ("grid-search-equivalence", grid_suite(scenario)),
    ]
}

fn random_channels(rng: &mut ChaCha8Rng, k: usize) -> ChannelSet {
    let bob = (0..k).map(|_| rng.random_range(0.2..3.0)).collect();
    let eve = (0..k).map(|_| rng.random_range(0.2..3.0)).collect();
    ChannelSet::unit_noise(bob, eve)
}

fn substitution_suite(scenario: &Scenario) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    for k in [2usize, 4, 8] {
        let plan = BandPlan::interleaved(k, 0.5);
        for _ in 0..100 {
            let ch = random_channels(&mut rng, k);
            let problem = Problem::new(ch, plan.clone(), 0.0, 10.0).map_err(|e| e.to_string())?;
            let xi: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..10.0 / k as f64)).collect();
            let subs = problem.substitutions(&xi);
            let gap = (problem.objective_with(&xi, &subs) - problem.objective(&xi)).abs();
            if gap > 1e-9 {
                return Err(format!("K={k}: substituted objective off by {gap:e}"));
            }
        }
    }
    Ok(())
}

fn round_trip_suite() -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let k = rng.random_range(2..=6usize);
        let alpha = rng.random_range(0.05..0.95);
        let targets: Vec<f64> = (0..k)
            .map(|i| correlation(alpha, i, 0, k))
            .collect::<Result<_>>()
            .map_err(|e| e.to_string())?;
        let fit = fit_alpha(&targets, k, 0, &FitOptions::default()).map_err(|e| e.to_string())?;
        if (fit.alpha_star - alpha).abs() > 1e-6 {
            return Err(format!("K={k}, alpha={alpha}: recovered {}", fit.alpha_star));
        }
    }
    Ok(())
}

/// BADO against exhaustive search on two-band instances.
fn grid_suite(scenario: &Scenario) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed.wrapping_add(1));
    let plan = BandPlan::new(2, vec![0], vec![1], 0.5);
    let budget = 10.0;
    let steps = 400;
    for _ in 0..5 {
        let ch = random_channels(&mut rng, 2);
        let problem = Problem::new(ch, plan.clone(), 0.3, budget).map_err(|e| e.to_string())?;
        let r = match bado(&problem, &BadoOptions::default()) {
            Ok(r) => r,
            Err(Error::Infeasible(_)) => continue,
            Err(e) => return Err(e.to_string()),
        };
        let h = budget / steps as f64;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=steps {
            for j in 0..=steps - i {
                let xi = [i as f64 * h, j as f64 * h];
                if problem.constraint_violation(&xi) <= 1e-12 {
                    best = best.max(problem.objective(&xi));
                }
            }
        }
        if r.objective < best - 0.02 * best.abs() {
            return Err(format!("optimizer {} below grid optimum {best}", r.objective));
        }
    }
    Ok(())
}
