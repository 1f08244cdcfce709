//! End-to-end driver: simulate → filter → smooth → evaluate, single runs and
//! Monte Carlo batches.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backward::{backward_simulate, best_particle, Particle, SmootherParams};
use crate::error::{Error, Result};
use crate::metrics::{
    gospa_over_time, trajectory_estimates, GospaParams, GospaSeries, GospaSummary,
};
use crate::oracle::OracleParams;
use crate::pmb::{run_forward, FilterLog, FilterParams};
use crate::sim::{Scenario, ScenarioConfig};

/// Environment variable bounding the worker pool.
pub const WORKERS_ENV: &str = "TRAJSMOOTH_WORKERS";

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Scenario TOML, relative to the run config's directory.
    pub scenario: PathBuf,
    /// Base seed for Monte Carlo seed derivation; defaults to the scenario seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "one")]
    pub mc_runs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub filter: FilterParams,
    #[serde(default)]
    pub smoother: SmootherParams,
    #[serde(default)]
    pub metric: GospaParams,
    #[serde(default)]
    pub oracle: OracleParams,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| Error::config("run", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads the run config and the scenario it points to.
    pub fn load(path: &Path) -> Result<(Self, ScenarioConfig)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        let mut cfg = Self::from_toml(&text)?;
        if cfg.scenario.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.scenario = dir.join(&cfg.scenario);
            }
        }
        let scenario = ScenarioConfig::load(&cfg.scenario)?;
        Ok((cfg, scenario))
    }

    pub fn validate(&self) -> Result<()> {
        if self.mc_runs == 0 {
            return Err(Error::config("mc_runs", "must be >= 1"));
        }
        if self.smoother.particles == 0 {
            return Err(Error::config("smoother.particles", "must be >= 1"));
        }
        if self.smoother.m_best == 0 {
            return Err(Error::config("smoother.m_best", "must be >= 1"));
        }
        if self.filter.m_best == 0 {
            return Err(Error::config("filter.m_best", "must be >= 1"));
        }
        for (path, p) in [
            ("filter.gate_prob", self.filter.gate_prob),
            ("smoother.gate_prob", self.smoother.gate_prob),
        ] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::config(path, "must lie in (0, 1)"));
            }
        }
        for (path, v) in [
            ("filter.r_min", self.filter.r_min),
            ("filter.w_min", self.filter.w_min),
            ("smoother.w_hyp_min", self.smoother.w_hyp_min),
            ("filter.estimate_threshold", self.filter.estimate_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(path, "must lie in [0, 1]"));
            }
        }
        if !(self.metric.c > 0.0) || !(self.metric.p >= 1.0) {
            return Err(Error::config("metric", "needs c > 0 and p >= 1"));
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for Monte Carlo run `run` and purpose `tag` under `base`.
pub fn derive_seed(base: u64, run: usize, tag: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ run as u64) ^ tag)
}

const SCENARIO_TAG: u64 = 0x5ce7;
const SMOOTHER_TAG: u64 = 0x5a00;

/// Runs `f` on a pool sized by [`WORKERS_ENV`] (all cores when unset).
pub fn with_worker_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| Error::config(WORKERS_ENV, format!("`{v}` is not a worker count")))?;
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config(WORKERS_ENV, e.to_string()))?;
    Ok(pool.install(f))
}

pub fn filter_estimates(log: &FilterLog) -> Vec<Vec<DVector<f64>>> {
    log.steps.iter().map(|s| s.estimates.clone()).collect()
}

/// Per-step states of the highest-weight particle.
pub fn best_particle_estimates(
    particles: &[Particle],
    horizon: usize,
) -> Result<Vec<Vec<DVector<f64>>>> {
    Ok(trajectory_estimates(
        &best_particle(particles)?.trajectories,
        horizon,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run: usize,
    pub scenario_seed: u64,
    pub smoother_seed: u64,
    pub filter: GospaSeries,
    pub smoothed: GospaSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTimings {
    pub run: usize,
    pub simulate_s: f64,
    pub filter_s: f64,
    pub smooth_s: f64,
}

/// Filter-versus-smoother comparison over runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    /// Means over runs of each run's summed GOSPA components.
    pub filter: GospaSummary,
    pub smoothed: GospaSummary,
    /// Mean over runs of `filter.total − smoothed.total`.
    pub mean_improvement: f64,
    /// Standard error of that mean (zero for a single run).
    pub improvement_std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub scenario: ScenarioConfig,
    pub runs: Vec<RunResult>,
    pub aggregate: Aggregate,
}

fn mean_summary(items: &[GospaSummary]) -> GospaSummary {
    let n = items.len() as f64;
    let mut m = GospaSummary::default();
    for s in items {
        m.total += s.total;
        m.localisation += s.localisation;
        m.missed += s.missed;
        m.false_det += s.false_det;
        m.localisation_per_estimate += s.localisation_per_estimate;
        m.mean_total += s.mean_total;
        m.mean_localisation += s.mean_localisation;
        m.mean_missed += s.mean_missed;
        m.mean_false += s.mean_false;
    }
    m.total /= n;
    m.localisation /= n;
    m.missed /= n;
    m.false_det /= n;
    m.localisation_per_estimate /= n;
    m.mean_total /= n;
    m.mean_localisation /= n;
    m.mean_missed /= n;
    m.mean_false /= n;
    m
}

pub fn aggregate(runs: &[RunResult]) -> Aggregate {
    if runs.is_empty() {
        return Aggregate::default();
    }
    let f: Vec<GospaSummary> = runs.iter().map(|r| r.filter.summary).collect();
    let s: Vec<GospaSummary> = runs.iter().map(|r| r.smoothed.summary).collect();
    let d: Vec<f64> = runs
        .iter()
        .map(|r| r.filter.summary.total - r.smoothed.summary.total)
        .collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let se = if d.len() > 1 {
        let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Aggregate {
        runs: runs.len(),
        filter: mean_summary(&f),
        smoothed: mean_summary(&s),
        mean_improvement: mean,
        improvement_std_error: se,
    }
}

/// Everything one pipeline run produces.
pub struct RunOutput {
    pub scenario: Scenario,
    pub log: FilterLog,
    pub particles: Vec<Particle>,
    pub result: RunResult,
    pub timings: RunTimings,
}

/// simulate → filter → smooth → evaluate with explicit seeds.
pub fn run_once(
    scenario_cfg: &ScenarioConfig,
    cfg: &RunConfig,
    run: usize,
    scenario_seed: u64,
    smoother_seed: u64,
) -> Result<RunOutput> {
    let t0 = Instant::now();
    let mut sc_cfg = scenario_cfg.clone();
    sc_cfg.seed = scenario_seed;
    let scenario = Scenario::generate(&sc_cfg)?;
    let t1 = Instant::now();
    let log = run_forward(&scenario.measurements, &scenario.models, &cfg.filter)?;
    let t2 = Instant::now();
    let params = SmootherParams {
        seed: smoother_seed,
        ..cfg.smoother.clone()
    };
    let particles = backward_simulate(
        &log,
        &scenario.models.birth,
        &scenario.models.motion,
        &params,
    )?;
    let t3 = Instant::now();
    let k = scenario.horizon();
    let filter = gospa_over_time(&filter_estimates(&log), &scenario.truth, &cfg.metric)?;
    let smoothed = gospa_over_time(
        &best_particle_estimates(&particles, k)?,
        &scenario.truth,
        &cfg.metric,
    )?;
    Ok(RunOutput {
        result: RunResult {
            run,
            scenario_seed,
            smoother_seed,
            filter,
            smoothed,
        },
        timings: RunTimings {
            run,
            simulate_s: (t1 - t0).as_secs_f64(),
            filter_s: (t2 - t1).as_secs_f64(),
            smooth_s: (t3 - t2).as_secs_f64(),
        },
        scenario,
        log,
        particles,
    })
}

/// `mc_runs` independent pipeline runs with seeds derived from the base
/// seed and the run index. Results are ordered by run index.
pub fn monte_carlo(
    cfg: &RunConfig,
    scenario_cfg: &ScenarioConfig,
) -> Result<(RunReport, Vec<RunTimings>)> {
    cfg.validate()?;
    let base = cfg.seed.unwrap_or(scenario_cfg.seed);
    let outs: Vec<(RunResult, RunTimings)> = (0..cfg.mc_runs)
        .into_par_iter()
        .map(|run| {
            let (a, b) = (
                derive_seed(base, run, SCENARIO_TAG),
                derive_seed(base, run, SMOOTHER_TAG),
            );
            info!("run {run}: scenario seed {a}, smoother seed {b}");
            run_once(scenario_cfg, cfg, run, a, b)
                .map(|o| (o.result, o.timings))
                .map_err(|e| Error::Run {
                    run,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    let (runs, timings): (Vec<_>, Vec<_>) = outs.into_iter().unzip();
    Ok((
        RunReport {
            config: cfg.clone(),
            scenario: scenario_cfg.clone(),
            aggregate: aggregate(&runs),
            runs,
        },
        timings,
    ))
}

/// Serializes `value` as pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::config(path.display().to_string(), e.to_string()))
}
