//! Seeded Monte-Carlo experiments: per-run MSE and AMSE across methods.
//!
//! Run `r` uses seed `base_seed + r`, so any single run can be reproduced
//! alone and runs can execute in any order. Results are collected in run
//! order before aggregation.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{ThresholdScope, DEFAULT_FDR_Q};
use crate::dwt::{dyadic_levels, forward, inverse, CoefficientPyramid};
use crate::elicitation::{default_j0, ElicitationConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::pipeline::{denoise_pyramid, DenoiseConfig, Method};
use crate::prior::BetaMixturePrior;
use crate::shrinkage::DEFAULT_QUADRATURE_ORDER;
use crate::signals::{add_noise, generate_prior_coefficients, rescale_to_sd, TestFunction};

pub const SCHEMA_VERSION: u32 = 1;

/// Run counts used for full-scale studies.
pub const FULL_RUNS_PRIOR: usize = 1000;
pub const FULL_RUNS_FUNCTION: usize = 500;

/// Data generator of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    /// `θ` i.i.d. from the mixture prior; estimation in coefficient space.
    PriorCoefficients { alpha: f64, a: f64, b: f64, m: f64 },
    /// A sampled test function plus Gaussian noise. With `target_sd` the
    /// clean samples are first rescaled to that standard deviation.
    TestFunction {
        function: TestFunction,
        #[serde(default)]
        target_sd: Option<f64>,
    },
}

impl Generator {
    pub fn full_runs(&self) -> usize {
        match self {
            Generator::PriorCoefficients { .. } => FULL_RUNS_PRIOR,
            Generator::TestFunction { .. } => FULL_RUNS_FUNCTION,
        }
    }
}

/// Where MSE is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MseDomain {
    Coefficient,
    Function,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_wavelet() -> String {
    "daub8".into()
}

fn default_methods() -> Vec<Method> {
    vec![Method::Beta, Method::Univ, Method::Sure, Method::Fdr]
}

fn default_fdr_q() -> f64 {
    DEFAULT_FDR_Q
}

fn default_order() -> usize {
    DEFAULT_QUADRATURE_ORDER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentScenario {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub generator: Generator,
    pub n: usize,
    pub snr: f64,
    pub runs: usize,
    pub base_seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_wavelet")]
    pub wavelet: String,
    /// Settings of the beta rule; `sigma` is ignored here since every
    /// method estimates the noise level from the data.
    #[serde(default)]
    pub elicitation: ElicitationConfig,
    #[serde(default = "default_fdr_q")]
    pub fdr_q: f64,
    #[serde(default)]
    pub scope: ThresholdScope,
    /// Defaults to coefficient space for prior scenarios and function
    /// space for test functions.
    #[serde(default)]
    pub mse_domain: Option<MseDomain>,
    #[serde(default = "default_order")]
    pub quadrature_order: usize,
}

impl ExperimentScenario {
    pub fn new(generator: Generator, n: usize, snr: f64, runs: usize, base_seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: String::new(),
            generator,
            n,
            snr,
            runs,
            base_seed,
            methods: default_methods(),
            wavelet: default_wavelet(),
            elicitation: ElicitationConfig::default(),
            fdr_q: DEFAULT_FDR_Q,
            scope: ThresholdScope::default(),
            mse_domain: None,
            quadrature_order: DEFAULT_QUADRATURE_ORDER,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        dyadic_levels(self.n)?;
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if !(self.snr > 0.0) {
            return Err(Error::Config(format!("snr must be positive, got {}", self.snr)));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must not be empty".into()));
        }
        match self.generator {
            Generator::PriorCoefficients { alpha, a, b, m } => {
                BetaMixturePrior::new(alpha, a, b, m)?;
            }
            Generator::TestFunction {
                target_sd: Some(sd), ..
            } if !(sd > 0.0 && sd.is_finite()) => {
                return Err(Error::Config(format!("target_sd must be positive, got {sd}")));
            }
            Generator::TestFunction { .. } => {}
        }
        if self.elicitation.sigma.is_some() {
            return Err(Error::Config(
                "elicitation.sigma is not allowed in a scenario; the noise level is always estimated".into(),
            ));
        }
        let levels = dyadic_levels(self.n)?;
        if self.elicitation.resolved_j0(levels) >= levels {
            return Err(Error::Level {
                j0: self.elicitation.resolved_j0(levels),
                levels,
            });
        }
        self.denoise_config(Method::Beta).validate()
    }

    pub fn mse_domain(&self) -> MseDomain {
        self.mse_domain.unwrap_or(match self.generator {
            Generator::PriorCoefficients { .. } => MseDomain::Coefficient,
            Generator::TestFunction { .. } => MseDomain::Function,
        })
    }

    pub fn seed_for_run(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }

    fn denoise_config(&self, method: Method) -> DenoiseConfig {
        DenoiseConfig {
            wavelet: self.wavelet.clone(),
            method,
            elicitation: self.elicitation,
            fdr_q: self.fdr_q,
            scope: self.scope,
            quadrature_order: self.quadrature_order,
        }
    }

    fn j0(&self) -> usize {
        let levels = dyadic_levels(self.n).expect("validated");
        self.elicitation.j0.unwrap_or_else(|| default_j0(levels))
    }
}

/// Mean squared difference.
pub fn mse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::param(format!(
            "length mismatch: estimate has {}, truth has {}",
            estimate.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::param("MSE of empty vectors"));
    }
    let ss: f64 = estimate.iter().zip(truth).map(|(e, t)| (e - t).powi(2)).sum();
    Ok(ss / truth.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub run: usize,
    pub seed: u64,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub method: String,
    pub run: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub crate_version: String,
    pub execution: String,
    pub threads: usize,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema_version: u32,
    pub scenario: Option<ExperimentScenario>,
    pub per_run: Vec<RunRecord>,
    /// Mean per-run MSE of each method, failed runs excluded.
    pub amse: BTreeMap<String, f64>,
    pub failures: Vec<RunFailure>,
    pub metadata: Option<RunMetadata>,
}

/// Arithmetic mean of each method's MSEs, summed in record order.
pub fn amse_of(records: &[RunRecord]) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = acc.entry(r.method.clone()).or_insert((0.0, 0));
        e.0 += r.mse;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect()
}

impl ExperimentResult {
    pub fn from_records(per_run: Vec<RunRecord>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: None,
            amse: amse_of(&per_run),
            per_run,
            failures: Vec::new(),
            metadata: None,
        }
    }

    pub fn failure_count(&self, method: &str) -> usize {
        self.failures.iter().filter(|f| f.method == method).count()
    }

    pub fn mses(&self, method: &str) -> Vec<f64> {
        self.per_run.iter().filter(|r| r.method == method).map(|r| r.mse).collect()
    }

    /// Adds rows for methods computed elsewhere (for example CV or BAMS
    /// results from another package). Methods already present are rejected.
    pub fn merge_external(&mut self, records: Vec<RunRecord>) -> Result<()> {
        if let Some(r) = records.iter().find(|r| self.amse.contains_key(&r.method)) {
            return Err(Error::Config(format!("method '{}' is already present", r.method)));
        }
        self.per_run.extend(records);
        self.amse = amse_of(&self.per_run);
        Ok(())
    }

    /// `(method, AMSE)` sorted from best to worst.
    pub fn comparison_table(&self) -> Vec<(String, f64)> {
        let mut rows: Vec<_> = self.amse.iter().map(|(k, v)| (k.clone(), *v)).collect();
        rows.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        rows
    }

    /// Errors unless the stored AMSE map equals the mean of the records.
    pub fn check_aggregates(&self) -> Result<()> {
        let recomputed = amse_of(&self.per_run);
        if recomputed.len() != self.amse.len()
            || recomputed.iter().any(|(k, v)| self.amse.get(k).map(|x| x.to_bits()) != Some(v.to_bits()))
        {
            return Err(Error::Structure("stored AMSE does not match the per-run records".into()));
        }
        Ok(())
    }
}

struct RunData {
    truth: Vec<f64>,
    pyramid: CoefficientPyramid,
}

fn generate(scenario: &ExperimentScenario, seed: u64) -> Result<RunData> {
    let j0 = scenario.j0();
    match scenario.generator {
        Generator::PriorCoefficients { alpha, a, b, m } => {
            let prior = BetaMixturePrior::new(alpha, a, b, m)?;
            let pc = generate_prior_coefficients(&prior, scenario.n, scenario.snr, seed)?;
            Ok(RunData {
                pyramid: CoefficientPyramid::from_flat(&pc.d, j0)?,
                truth: pc.theta,
            })
        }
        Generator::TestFunction { function, target_sd } => {
            let mut clean = function.sample(scenario.n)?;
            if let Some(sd) = target_sd {
                clean = rescale_to_sd(&clean, sd)?;
            }
            let noisy = add_noise(&clean, scenario.snr, seed)?;
            let filter = crate::dwt::WaveletFilter::from_name(&scenario.wavelet)?;
            Ok(RunData {
                pyramid: forward(&noisy.noisy, &filter, j0)?,
                truth: clean,
            })
        }
    }
}

fn run_once(scenario: &ExperimentScenario, run: usize) -> Vec<std::result::Result<RunRecord, RunFailure>> {
    let seed = scenario.seed_for_run(run);
    let fail = |method: String, e: Error| RunFailure {
        method,
        run,
        seed,
        message: e.to_string(),
    };
    let data = match generate(scenario, seed) {
        Ok(d) => d,
        Err(e) => {
            return scenario
                .methods
                .iter()
                .map(|m| Err(fail(m.name().to_string(), Error::Numerical(format!("data generation: {e}")))))
                .collect()
        }
    };
    let filter = crate::dwt::WaveletFilter::from_name(&scenario.wavelet);
    let prior_domain = matches!(scenario.generator, Generator::PriorCoefficients { .. });
    scenario
        .methods
        .iter()
        .map(|&method| {
            let name = method.name().to_string();
            let outcome = (|| -> Result<f64> {
                let (shrunk, _) = denoise_pyramid(&data.pyramid, &scenario.denoise_config(method), Execution::Sequential)?;
                let filter = filter.as_ref().map_err(|e| Error::Config(e.to_string()))?;
                match (prior_domain, scenario.mse_domain()) {
                    (true, MseDomain::Coefficient) => mse(&shrunk.to_flat(), &data.truth),
                    (true, MseDomain::Function) => {
                        let truth = CoefficientPyramid::from_flat(&data.truth, data.pyramid.j0())?;
                        mse(&inverse(&shrunk, filter)?, &inverse(&truth, filter)?)
                    }
                    (false, MseDomain::Function) => mse(&inverse(&shrunk, filter)?, &data.truth),
                    (false, MseDomain::Coefficient) => {
                        let truth = forward(&data.truth, filter, data.pyramid.j0())?;
                        mse(&shrunk.to_flat(), &truth.to_flat())
                    }
                }
            })();
            match outcome {
                Ok(v) if v.is_finite() => Ok(RunRecord {
                    method: name,
                    run,
                    seed,
                    mse: v,
                }),
                Ok(v) => Err(fail(name, Error::Numerical(format!("MSE evaluated to {v}")))),
                Err(e) => Err(fail(name, e)),
            }
        })
        .collect()
}

pub fn run_scenario(scenario: &ExperimentScenario) -> Result<ExperimentResult> {
    run_scenario_with(scenario, Execution::default())
}

/// Runs every replicate; failed method runs are recorded, logged and left
/// out of the AMSE.
pub fn run_scenario_with(scenario: &ExperimentScenario, exec: Execution) -> Result<ExperimentResult> {
    scenario.validate()?;
    let start = Instant::now();
    let outcomes = exec.map_range(scenario.runs, |r| run_once(scenario, r));
    let mut per_run = Vec::with_capacity(scenario.runs * scenario.methods.len());
    let mut failures = Vec::new();
    for outcome in outcomes.into_iter().flatten() {
        match outcome {
            Ok(rec) => per_run.push(rec),
            Err(f) => failures.push(f),
        }
    }
    if !failures.is_empty() {
        log::warn!("{} method run(s) failed and were excluded from the AMSE", failures.len());
    }
    let threads = match exec {
        Execution::Sequential => 1,
        #[cfg(feature = "parallel")]
        Execution::Parallel => rayon::current_num_threads(),
    };
    Ok(ExperimentResult {
        schema_version: SCHEMA_VERSION,
        scenario: Some(scenario.clone()),
        amse: amse_of(&per_run),
        per_run,
        failures,
        metadata: Some(RunMetadata {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            execution: format!("{exec:?}").to_lowercase(),
            threads,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::param(format!("unknown format '{other}' (expected csv or json)"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SummaryRow {
    method: String,
    amse: f64,
    runs: usize,
    failed: usize,
}

/// Sibling file holding the AMSE summary of a CSV export: `runs.csv` →
/// `runs_amse.csv`.
pub fn summary_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("result");
    path.with_file_name(format!("{stem}_amse.csv"))
}

/// Writes the result. CSV produces the per-run table (`method,run,seed,mse`)
/// at `path` and the summary (`method,amse,runs,failed`) next to it; JSON
/// writes the whole result, scenario and metadata included. Returns the
/// files written.
pub fn export(result: &ExperimentResult, path: impl AsRef<Path>, format: ExportFormat) -> Result<Vec<PathBuf>> {
    let path = path.as_ref();
    match format {
        ExportFormat::Json => {
            let w = BufWriter::new(File::create(path)?);
            serde_json::to_writer_pretty(w, result)?;
            Ok(vec![path.to_path_buf()])
        }
        ExportFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            for r in &result.per_run {
                w.serialize(r)?;
            }
            w.flush()?;
            let summary = summary_path(path);
            let mut w = csv::Writer::from_path(&summary)?;
            for (method, amse) in &result.amse {
                w.serialize(SummaryRow {
                    method: method.clone(),
                    amse: *amse,
                    runs: result.per_run.iter().filter(|r| &r.method == method).count(),
                    failed: result.failure_count(method),
                })?;
            }
            w.flush()?;
            Ok(vec![path.to_path_buf(), summary])
        }
    }
}

/// Per-run records from a CSV with header `method,run,seed,mse`.
pub fn read_records_csv(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Reads back an export. For CSV the AMSE is recomputed from the records
/// and checked against the summary file when one exists.
pub fn import(path: impl AsRef<Path>, format: ExportFormat) -> Result<ExperimentResult> {
    let path = path.as_ref();
    let result = match format {
        ExportFormat::Json => serde_json::from_reader(BufReader::new(File::open(path)?))?,
        ExportFormat::Csv => {
            let mut result = ExperimentResult::from_records(read_records_csv(path)?);
            let summary = summary_path(path);
            if summary.exists() {
                let mut rdr = csv::Reader::from_path(&summary)?;
                let mut stored = BTreeMap::new();
                for row in rdr.deserialize::<SummaryRow>() {
                    let row = row?;
                    for run in 0..row.failed {
                        result.failures.push(RunFailure {
                            method: row.method.clone(),
                            run,
                            seed: 0,
                            message: "failure recorded in summary".into(),
                        });
                    }
                    stored.insert(row.method, row.amse);
                }
                result.amse = stored;
            }
            result
        }
    };
    result.check_aggregates()?;
    Ok(result)
}
