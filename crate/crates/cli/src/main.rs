use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;

use trajsmooth::backward::{
    backward_simulate, best_particle, ParticleRecord, ParticleSetRecord, SmootherParams,
};
use trajsmooth::demo;
use trajsmooth::metrics::{
    gospa_over_time, particle_stats, write_gospa_csv, GospaParams, GospaSeries, ParticleStats,
};
use trajsmooth::oracle::{
    empirical_distribution, exact_smooth, structure_distribution, tv_distance,
    ExactPosteriorRecord, OracleParams,
};
use trajsmooth::pipeline::{
    best_particle_estimates, filter_estimates, monte_carlo, read_json, with_worker_pool,
    write_json, RunConfig,
};
use trajsmooth::pmb::{run_forward, FilterLog, FilterLogRecord, FilterParams};
use trajsmooth::sim::{Scenario, ScenarioConfig, ScenarioRecord};
use trajsmooth::{Error, Result};

/// Trajectory smoothing for multi-object tracking: simulate scenarios, run
/// the forward filter and backward particle smoother, compute exact
/// posteriors on small problems and evaluate with GOSPA.
#[derive(Parser)]
#[command(name = "trajsmooth", version)]
struct Cli {
    /// Directory all output files are written under.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    /// Run config (TOML); its sections supply defaults for the flags below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate ground truth and measurements from a scenario TOML.
    Simulate {
        /// Scenario TOML (or take it from the run config).
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "scenario.json")]
        out: PathBuf,
    },
    /// Run the forward filter over a simulated scenario.
    Filter {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        filter: FilterFlags,
        #[arg(long, default_value = "filter.json")]
        out: PathBuf,
    },
    /// Backward-simulate trajectory particles from a filter log.
    Smooth {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[command(flatten)]
        smoother: SmootherFlags,
        #[arg(long, default_value = "particles.json")]
        out: PathBuf,
        #[arg(long, default_value = "best.json")]
        best_out: PathBuf,
    },
    /// Enumerate the exact smoothing posterior of a small problem.
    Oracle {
        /// Built-in problem; otherwise pass --scenario and --log.
        #[arg(long, value_enum, conflicts_with_all = ["scenario", "log"])]
        example: Option<Example>,
        #[arg(long, requires = "log")]
        scenario: Option<PathBuf>,
        #[arg(long, requires = "scenario")]
        log: Option<PathBuf>,
        /// Particle file to compare against (total-variation distance).
        #[arg(long)]
        particles: Option<PathBuf>,
        #[arg(long)]
        prune: Option<f64>,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long, default_value = "oracle.json")]
        out: PathBuf,
    },
    /// GOSPA of filter or smoother estimates against the scenario truth.
    Evaluate {
        #[arg(long)]
        scenario: PathBuf,
        /// Filter log; its thresholded estimates are evaluated.
        #[arg(long, conflicts_with = "particles")]
        log: Option<PathBuf>,
        /// Particle file; the highest-weight particle is evaluated.
        #[arg(long)]
        particles: Option<PathBuf>,
        #[command(flatten)]
        metric: MetricFlags,
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
        #[arg(long, default_value = "gospa.csv")]
        csv: PathBuf,
    },
    /// Monte Carlo simulate → filter → smooth → evaluate (needs --config).
    Mc {
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "mc_report.json")]
        out: PathBuf,
        #[arg(long, default_value = "mc_timings.json")]
        timings_out: PathBuf,
        #[arg(long, default_value = "mc_steps.csv")]
        csv: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Example {
    /// 1-D crossing over eight steps.
    Crossing,
    /// Two certain objects over two steps.
    Pair,
    /// Three-step near-point-mass toy.
    Toy,
}

#[derive(Args)]
struct FilterFlags {
    #[arg(long)]
    m_forward: Option<usize>,
    #[arg(long)]
    filter_gate_prob: Option<f64>,
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    w_min: Option<f64>,
}

#[derive(Args)]
struct SmootherFlags {
    /// Number of particles T.
    #[arg(long)]
    particles: Option<usize>,
    /// Global hypotheses per backward step M.
    #[arg(long)]
    m_best: Option<usize>,
    #[arg(long)]
    gate_prob: Option<f64>,
    #[arg(long)]
    w_hyp_min: Option<f64>,
    /// Take Gaussian means instead of samples.
    #[arg(long)]
    dirac: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct MetricFlags {
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl FilterFlags {
    fn apply(self, p: &mut FilterParams) {
        set(&mut p.m_best, self.m_forward);
        set(&mut p.gate_prob, self.filter_gate_prob);
        set(&mut p.r_min, self.r_min);
        set(&mut p.w_min, self.w_min);
    }
}

impl SmootherFlags {
    fn apply(self, p: &mut SmootherParams) {
        set(&mut p.particles, self.particles);
        set(&mut p.m_best, self.m_best);
        set(&mut p.gate_prob, self.gate_prob);
        set(&mut p.w_hyp_min, self.w_hyp_min);
        set(&mut p.seed, self.seed);
        p.dirac_mode |= self.dirac;
    }
}

impl MetricFlags {
    fn apply(self, p: &mut GospaParams) {
        set(&mut p.c, self.c);
        set(&mut p.p, self.p);
    }
}

/// Run config from `--config`, or all defaults with no scenario.
fn run_config(path: Option<&Path>) -> Result<(RunConfig, Option<ScenarioConfig>)> {
    match path {
        Some(p) => RunConfig::load(p).map(|(c, s)| (c, Some(s))),
        None => Ok((RunConfig::from_toml("scenario = \"\"")?, None)),
    }
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    Scenario::from_record(&read_json::<ScenarioRecord>(path)?)
}

fn load_log(path: &Path) -> Result<FilterLog> {
    FilterLog::from_record(&read_json::<FilterLogRecord>(path)?)
}

fn write_csv(path: &Path, series: &GospaSeries) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    write_gospa_csv(series, BufWriter::new(File::create(path)?))
}

#[derive(Serialize)]
struct BestRecord {
    particle: ParticleRecord,
    /// Per-step state estimates, step 1 first.
    estimates: Vec<Vec<Vec<f64>>>,
}

#[derive(Serialize)]
struct EvaluateReport {
    source: &'static str,
    metric: GospaParams,
    series: GospaSeries,
    #[serde(skip_serializing_if = "Option::is_none")]
    particle_stats: Option<ParticleStats>,
}

#[derive(Serialize)]
struct OracleReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    tv_distance: Option<f64>,
    max_invariant_error: f64,
    posterior: ExactPosteriorRecord,
}

fn run(cli: Cli) -> Result<()> {
    let out = |p: &Path| cli.output_dir.join(p);
    let (mut cfg, cfg_scenario) = run_config(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::Simulate {
            scenario,
            seed,
            out: o,
        } => {
            let mut sc = match (scenario, cfg_scenario) {
                (Some(p), _) => ScenarioConfig::load(&p)?,
                (None, Some(s)) => s,
                (None, None) => {
                    return Err(Error::config("scenario", "pass --scenario or --config"))
                }
            };
            set(&mut sc.seed, seed);
            let s = Scenario::generate(&sc)?;
            info!(
                "simulated K = {} with {} objects",
                s.horizon(),
                s.truth.trajectories.len()
            );
            write_json(&out(&o), &s.to_record())
        }
        Cmd::Filter {
            scenario,
            filter,
            out: o,
        } => {
            filter.apply(&mut cfg.filter);
            cfg.validate()?;
            let s = load_scenario(&scenario)?;
            let log = run_forward(&s.measurements, &s.models, &cfg.filter)?;
            write_json(&out(&o), &log.to_record())
        }
        Cmd::Smooth {
            scenario,
            log,
            smoother,
            out: o,
            best_out,
        } => {
            smoother.apply(&mut cfg.smoother);
            cfg.validate()?;
            let s = load_scenario(&scenario)?;
            let log = load_log(&log)?;
            let particles = with_worker_pool(|| {
                backward_simulate(&log, &s.models.birth, &s.models.motion, &cfg.smoother)
            })??;
            let best = best_particle(&particles)?;
            let estimates = best_particle_estimates(&particles, log.horizon())?
                .into_iter()
                .map(|xs| xs.into_iter().map(|x| x.as_slice().to_vec()).collect())
                .collect();
            write_json(&out(&o), &ParticleSetRecord::from_particles(&particles))?;
            write_json(
                &out(&best_out),
                &BestRecord {
                    particle: best.into(),
                    estimates,
                },
            )
        }
        Cmd::Oracle {
            example,
            scenario,
            log,
            particles,
            prune,
            cap,
            out: o,
        } => {
            set(&mut cfg.oracle.prune, prune);
            set(&mut cfg.oracle.cap, cap);
            let params: OracleParams = cfg.oracle.clone();
            let problem = match (example, scenario, log) {
                (Some(Example::Crossing), ..) => demo::crossing()?,
                (Some(Example::Pair), ..) => demo::pair()?,
                (Some(Example::Toy), ..) => demo::toy(1e-4)?,
                (None, Some(s), Some(l)) => {
                    let s = load_scenario(&s)?;
                    demo::Problem {
                        log: load_log(&l)?,
                        birth: s.models.birth,
                        motion: s.models.motion,
                    }
                }
                _ => {
                    return Err(Error::config(
                        "oracle",
                        "pass --example or both --scenario and --log",
                    ))
                }
            };
            let post = exact_smooth(&problem.log, &problem.birth, &problem.motion, &params)?;
            let tv = match particles {
                Some(p) => {
                    let ps = read_json::<ParticleSetRecord>(&p)?.to_particles()?;
                    let d = tv_distance(
                        &structure_distribution(&post),
                        &empirical_distribution(&ps, &problem.log),
                    );
                    info!("total-variation distance to particles: {d:.5}");
                    Some(d)
                }
                None => None,
            };
            write_json(
                &out(&o),
                &OracleReport {
                    tv_distance: tv,
                    max_invariant_error: post.max_invariant_error,
                    posterior: (&post).into(),
                },
            )
        }
        Cmd::Evaluate {
            scenario,
            log,
            particles,
            metric,
            out: o,
            csv,
        } => {
            metric.apply(&mut cfg.metric);
            cfg.validate()?;
            let s = load_scenario(&scenario)?;
            let k = s.horizon();
            let (source, estimates, stats) = match (log, particles) {
                (Some(l), _) => ("filter", filter_estimates(&load_log(&l)?), None),
                (None, Some(p)) => {
                    let ps = read_json::<ParticleSetRecord>(&p)?.to_particles()?;
                    (
                        "best_particle",
                        best_particle_estimates(&ps, k)?,
                        Some(particle_stats(&ps, k)?),
                    )
                }
                (None, None) => {
                    warn!("no estimates given; evaluating the truth against itself");
                    (
                        "truth",
                        trajsmooth::metrics::trajectory_estimates(&s.truth.trajectories, k),
                        None,
                    )
                }
            };
            let series = gospa_over_time(&estimates, &s.truth, &cfg.metric)?;
            write_csv(&out(&csv), &series)?;
            write_json(
                &out(&o),
                &EvaluateReport {
                    source,
                    metric: cfg.metric.clone(),
                    series,
                    particle_stats: stats,
                },
            )
        }
        Cmd::Mc {
            runs,
            seed,
            out: o,
            timings_out,
            csv,
        } => {
            let sc = cfg_scenario.ok_or_else(|| Error::config("config", "mc needs --config"))?;
            set(&mut cfg.mc_runs, runs);
            if seed.is_some() {
                cfg.seed = seed;
            }
            let dir = cli
                .output_dir
                .join(cfg.output_dir.clone().unwrap_or_default());
            let (report, timings) = with_worker_pool(|| monte_carlo(&cfg, &sc))??;
            let a = &report.aggregate;
            info!(
                "{} runs: filter {:.3}, smoothed {:.3}, improvement {:.3} ± {:.3}",
                a.runs,
                a.filter.total,
                a.smoothed.total,
                a.mean_improvement,
                a.improvement_std_error
            );
            let mut text = String::from("run,k,filter_total,smoothed_total\n");
            for r in &report.runs {
                for (i, (f, s)) in r
                    .filter
                    .per_step
                    .iter()
                    .zip(&r.smoothed.per_step)
                    .enumerate()
                {
                    text += &format!("{},{},{},{}\n", r.run, i + 1, f.total, s.total);
                }
            }
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join(csv), text)?;
            write_json(&dir.join(timings_out), &timings)?;
            write_json(&dir.join(o), &report)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
