use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use betashrink::pipeline::{make_dyadic, Padding};
use betashrink::risk::{
    best_fitting_sigma, linspace, risk_table, write_risk_table, RiskTableConfig, RiskTableEntry,
    DEFAULT_HERMITE_ORDER, DEFAULT_LEGENDRE_ORDER,
};
use betashrink::signals::{add_noise, grid, rescale_to_sd};
use betashrink::sim::{self, ExportFormat};
use betashrink::{
    denoise_signal, BetaMixturePrior, BetaShrinkageRule, Execution, ExperimentScenario, Method, ShrinkageRule,
    TestFunction,
};

mod config;
mod input;
mod output;

use config::{AutoTag, DenoiseFile, EffectiveDenoise, Shapes, SigmaSpec};
use output::OutputSet;

#[derive(Parser)]
#[command(name = "betashrink", version, about = "Asymmetric Bayesian wavelet shrinkage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Denoise a signal read from CSV.
    Denoise(DenoiseArgs),
    /// Run a Monte-Carlo scenario and write per-run results.
    Simulate(SimulateArgs),
    /// Bayes-risk tables and classical-risk curves.
    Risk(RiskArgs),
    /// Sample a test function to CSV.
    Genfunc(GenfuncArgs),
}

#[derive(Args)]
struct DenoiseArgs {
    /// CSV with a header and one column, or an x,y pair.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Defaults to `<output stem>_diagnostics.json`.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// JSON file whose fields override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "daub8")]
    wavelet: String,
    #[arg(long, default_value = "beta")]
    method: Method,
    /// Beta shape a (give both --a and --b, or neither for skewness-guided shapes).
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    gamma: f64,
    #[arg(long)]
    j0: Option<usize>,
    /// Noise sd, or `auto` for the MAD estimate.
    #[arg(long, default_value = "auto")]
    sigma: SigmaSpec,
    #[arg(long, default_value = "truncate", value_parser = parse_padding)]
    pad: Padding,
    #[arg(long, default_value_t = betashrink::baselines::DEFAULT_FDR_Q)]
    fdr_q: f64,
    /// Accepted for symmetry with the other subcommands; denoising is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON; the flags below override its fields.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "csv")]
    format: ExportFormat,
    #[arg(long)]
    runs: Option<usize>,
    /// Base seed; run r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    wavelet: Option<String>,
    /// Use the full run counts (1000 for prior scenarios, 500 for test functions).
    #[arg(long, conflicts_with = "runs")]
    full_scale: bool,
    /// CSV (method,run,seed,mse) of externally computed methods to merge in.
    #[arg(long)]
    merge: Option<PathBuf>,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct RiskArgs {
    /// Risk table JSON (sigma, priors, optional targets and tolerance); overrides the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
    #[arg(long, default_value_t = 7.0)]
    a: f64,
    #[arg(long, default_value_t = 3.0)]
    b: f64,
    #[arg(long, default_value_t = 3.0)]
    m: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Bayes-risk table CSV; printed to stdout when omitted.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Classical-risk curve CSV (one file per prior, suffixed `_<i>` when several).
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long, default_value_t = 61)]
    points: usize,
    #[arg(long, default_value_t = DEFAULT_HERMITE_ORDER)]
    hermite_order: usize,
    #[arg(long, default_value_t = DEFAULT_LEGENDRE_ORDER)]
    legendre_order: usize,
    /// Fail (and report the best-fitting sigma) when a target is missed.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct GenfuncArgs {
    #[arg(long)]
    name: TestFunction,
    #[arg(long, default_value_t = 512)]
    n: usize,
    #[arg(long)]
    output: PathBuf,
    /// Add a noisy column `y` at this SNR.
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rescale the function to this standard deviation first.
    #[arg(long)]
    target_sd: Option<f64>,
}

fn parse_padding(s: &str) -> std::result::Result<Padding, String> {
    match s {
        "truncate" => Ok(Padding::Truncate),
        "reflect" => Ok(Padding::Reflect),
        other => Err(format!("unknown padding '{other}' (expected truncate or reflect)")),
    }
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Denoise(a) => denoise(a),
        Command::Simulate(a) => simulate(a),
        Command::Risk(a) => risk(a),
        Command::Genfunc(a) => genfunc(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn sibling(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("output");
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

fn denoise(args: DenoiseArgs) -> Result<()> {
    let mut eff = EffectiveDenoise {
        wavelet: args.wavelet,
        method: args.method,
        shapes: match (args.a, args.b) {
            (Some(a), Some(b)) => Shapes::Fixed([a, b]),
            (None, None) => Shapes::Auto(AutoTag::Auto),
            _ => bail!("give both --a and --b, or neither"),
        },
        gamma: args.gamma,
        j0: args.j0,
        sigma: args.sigma,
        pad: args.pad,
        fdr_q: args.fdr_q,
        quadrature_order: betashrink::shrinkage::DEFAULT_QUADRATURE_ORDER,
    };
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let file: DenoiseFile =
            serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        file.apply(&mut eff)?;
    }
    let config = eff.to_config();
    config.validate()?;

    let series = input::read_series(&args.input)?;
    let original = series.y.len();
    let data = make_dyadic(&series.y, eff.pad)?;
    let used = data.len().min(original);
    let denoised = denoise_signal(&data, &config, execution(args.sequential))?;
    let estimate = &denoised.estimate[..used];

    let diag_path = args.diagnostics.unwrap_or_else(|| sibling(&args.output, "_diagnostics", "json"));
    let mut outputs = OutputSet::new();
    outputs.write_with(&args.output, |w| {
        let mut csv = csv::Writer::from_writer(w);
        match &series.x {
            Some(x) => {
                csv.write_record([series.header[0].as_str(), "denoised"])?;
                for (xi, yi) in x.iter().zip(estimate) {
                    csv.write_record([xi.to_string(), yi.to_string()])?;
                }
            }
            None => {
                csv.write_record(["denoised"])?;
                for yi in estimate {
                    csv.write_record([yi.to_string()])?;
                }
            }
        }
        csv.flush()?;
        Ok(())
    })?;
    outputs.write_with(&diag_path, |w| {
        let report = serde_json::json!({
            "schema_version": config::DIAGNOSTICS_SCHEMA_VERSION,
            "input": args.input.display().to_string(),
            "input_length": original,
            "transform_length": data.len(),
            "output_length": used,
            "effective_config": &eff,
            "sigma_hat": denoised.diagnostics.sigma,
            "sigma_estimated": denoised.diagnostics.sigma_estimated,
            "skewness": denoised.diagnostics.skewness,
            "j0": denoised.diagnostics.j0,
            "shapes": denoised.diagnostics.shapes,
            "levels": denoised.diagnostics.levels,
            "thresholds": denoised.diagnostics.thresholds,
            "sparsity": denoised.diagnostics.sparsity,
        });
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w)?;
        Ok(())
    })?;
    for p in outputs.commit()? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut scenario = ExperimentScenario::from_path(&args.scenario)
        .with_context(|| format!("invalid scenario {}", args.scenario.display()))?;
    if let Some(r) = args.runs {
        scenario.runs = r;
    }
    if args.full_scale {
        scenario.runs = scenario.generator.full_runs();
    }
    if let Some(s) = args.seed {
        scenario.base_seed = s;
    }
    if let Some(s) = args.snr {
        scenario.snr = s;
    }
    if let Some(n) = args.n {
        scenario.n = n;
    }
    if let Some(w) = args.wavelet {
        scenario.wavelet = w;
    }
    scenario.validate()?;

    let mut result = sim::run_scenario_with(&scenario, execution(args.sequential))?;
    if let Some(path) = &args.merge {
        let external = sim::read_records_csv(path).with_context(|| format!("cannot read {}", path.display()))?;
        result.merge_external(external)?;
    }
    if !result.failures.is_empty() {
        eprintln!("warning: {} method run(s) failed and were excluded", result.failures.len());
    }

    let mut outputs = OutputSet::new();
    let tmp = outputs.stage(&args.output);
    let written = sim::export(&result, &tmp, args.format)?;
    if written.len() > 1 {
        // the CSV summary lands next to the temporary; track it under its final name
        let summary_tmp = &written[1];
        let staged = outputs.stage(&sim::summary_path(&args.output));
        std::fs::rename(summary_tmp, &staged)?;
    }
    for p in outputs.commit()? {
        println!("wrote {}", p.display());
    }
    println!("method,amse,runs");
    for (method, amse) in result.comparison_table() {
        println!("{method},{amse:.6},{}", result.mses(&method).len());
    }
    Ok(())
}

fn risk(args: RiskArgs) -> Result<()> {
    let cfg = match &args.config {
        Some(path) => RiskTableConfig::from_path(path).with_context(|| format!("invalid risk config {}", path.display()))?,
        None => RiskTableConfig {
            schema_version: betashrink::risk::RISK_SCHEMA_VERSION,
            sigma: args.sigma,
            priors: vec![RiskTableEntry {
                alpha: args.alpha,
                a: args.a,
                b: args.b,
                m: args.m,
                target: None,
            }],
            tolerance: None,
            hermite_order: args.hermite_order,
            legendre_order: args.legendre_order,
        },
    };
    cfg.validate()?;
    let exec = execution(args.sequential);
    let rows = risk_table(&cfg, exec)?;

    if args.check {
        let tol = cfg.tolerance.unwrap_or(0.015);
        let missed: Vec<_> = rows.iter().filter(|r| !r.within(tol)).collect();
        if !missed.is_empty() {
            let targets = cfg.targets()?;
            let (sigma, worst) = best_fitting_sigma(&cfg.analyzer(exec)?, &targets, 0.05, 20.0)?;
            for r in &missed {
                eprintln!(
                    "missed: alpha={} a={} b={} m={}: r={:.4} target={:.4}",
                    r.alpha,
                    r.a,
                    r.b,
                    r.m,
                    r.bayes_risk,
                    r.target.unwrap_or(f64::NAN)
                );
            }
            bail!("{} of {} targets outside ±{tol}; best-fitting sigma = {sigma:.4} (largest deviation there {worst:.4})", missed.len(), rows.len());
        }
    }

    let mut outputs = OutputSet::new();
    match &args.table {
        Some(path) => outputs.write_with(path, |w| Ok(write_risk_table(&rows, w)?))?,
        None => write_risk_table(&rows, std::io::stdout().lock())?,
    }
    if let Some(path) = &args.curve {
        let analyzer = cfg.analyzer(exec)?;
        for (i, e) in cfg.priors.iter().enumerate() {
            let prior = BetaMixturePrior::new(e.alpha, e.a, e.b, e.m)?;
            let rule = ShrinkageRule::Beta(BetaShrinkageRule::new(prior, cfg.sigma)?);
            let curve = analyzer.risk_curve(&rule, cfg.sigma, &linspace(-e.m, e.m, args.points))?;
            let target = if cfg.priors.len() == 1 {
                path.clone()
            } else {
                let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
                sibling(path, &format!("_{i}"), ext)
            };
            outputs.write_with(&target, |w| Ok(curve.write_csv(w)?))?;
        }
    }
    for p in outputs.commit()? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn genfunc(args: GenfuncArgs) -> Result<()> {
    let mut f = args.name.sample(args.n)?;
    if let Some(sd) = args.target_sd {
        f = rescale_to_sd(&f, sd)?;
    }
    let noisy = match args.snr {
        Some(snr) => Some(add_noise(&f, snr, args.seed)?),
        None => None,
    };
    let mut outputs = OutputSet::new();
    outputs.write_with(&args.output, |w| {
        let mut csv = csv::Writer::from_writer(w);
        match &noisy {
            Some(ns) => {
                csv.write_record(["x", "f", "y"])?;
                for ((x, fi), yi) in grid(args.n).zip(&f).zip(&ns.noisy) {
                    csv.write_record([x.to_string(), fi.to_string(), yi.to_string()])?;
                }
            }
            None => {
                csv.write_record(["x", "f"])?;
                for (x, fi) in grid(args.n).zip(&f) {
                    csv.write_record([x.to_string(), fi.to_string()])?;
                }
            }
        }
        csv.flush()?;
        Ok(())
    })?;
    for p in outputs.commit()? {
        println!("wrote {}", p.display());
    }
    if let Some(ns) = noisy {
        println!("sigma = {}", ns.sigma);
    }
    Ok(())
}
