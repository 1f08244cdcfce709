//! Scenario configuration, ground-truth generation and measurement simulation.
//!
//! Measurement sets are stored as ordered lists (detections first, then
//! clutter). Nothing downstream depends on that order.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{GaussianDensity, GaussianMixture, LinearMotionModel, SqrtFactor};
use crate::models::{BirthModel, ClutterModel, MeasurementModel};
use crate::trajectory::{Trajectory, TrajectoryRecord};

pub type MeasurementSet = Vec<DVector<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ts: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Vec<f64>>>,
    pub ps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<Vec<f64>>>,
    pub pd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClutterConfig {
    pub rate: f64,
    pub region: Vec<[f64; 2]>,
}

/// Gaussian mixture given as parallel lists. Each component's covariance is
/// either a full matrix in `covs` or a diagonal in `cov_diags`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureConfig {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covs: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cov_diags: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub births: Vec<usize>,
    pub deaths: Vec<usize>,
    pub init_means: Vec<Vec<f64>>,
    /// Optional diagonal covariance for drawing each initial state around its mean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_cov_diag: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(rename = "K")]
    pub horizon: usize,
    pub seed: u64,
    pub motion: MotionConfig,
    pub measurement: MeasurementConfig,
    pub clutter: ClutterConfig,
    pub birth: MixtureConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_ppp: Option<MixtureConfig>,
    pub schedule: ScheduleConfig,
}

/// All models a scenario is generated with and filtered under.
#[derive(Debug, Clone, PartialEq)]
pub struct Models {
    pub motion: LinearMotionModel,
    pub measurement: MeasurementModel,
    pub clutter: ClutterModel,
    pub birth: BirthModel,
    /// Undetected-object intensity before the first step.
    pub initial_ppp: GaussianMixture,
}

fn matrix(rows: &[Vec<f64>], path: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(Error::config(
            path,
            "matrix rows must be non-empty and equal length",
        ));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn with_path<T>(r: Result<T>, path: &str) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::config(path, other.to_string()),
    })
}

impl MixtureConfig {
    pub fn build(&self, dim: usize, path: &str) -> Result<GaussianMixture> {
        let n = self.weights.len();
        if self.means.len() != n {
            return Err(Error::config(
                format!("{path}.means"),
                "length differs from weights",
            ));
        }
        let covs: Vec<DMatrix<f64>> = match (&self.covs, &self.cov_diags) {
            (Some(c), None) => c
                .iter()
                .enumerate()
                .map(|(i, m)| matrix(m, &format!("{path}.covs[{i}]")))
                .collect::<Result<_>>()?,
            (None, Some(d)) => d
                .iter()
                .map(|v| DMatrix::from_diagonal(&DVector::from_column_slice(v)))
                .collect(),
            _ => {
                return Err(Error::config(
                    path,
                    "exactly one of covs or cov_diags is required",
                ));
            }
        };
        if covs.len() != n {
            return Err(Error::config(path, "covariance count differs from weights"));
        }
        let mut comps = Vec::with_capacity(n);
        for (i, ((w, m), c)) in self.weights.iter().zip(&self.means).zip(covs).enumerate() {
            if m.len() != dim || c.nrows() != dim {
                return Err(Error::config(
                    format!("{path}[{i}]"),
                    format!("component dimension must be {dim}"),
                ));
            }
            let g = with_path(
                GaussianDensity::new(DVector::from_column_slice(m), c),
                &format!("{path}[{i}]"),
            )?;
            comps.push((*w, g));
        }
        with_path(GaussianMixture::new(comps), &format!("{path}.weights"))
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("scenario", e.message().to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn models(&self) -> Result<Models> {
        let mc = &self.motion;
        let motion = match (mc.model.as_deref(), &mc.f, &mc.q) {
            (Some("cv"), None, None) => {
                let ts = mc
                    .ts
                    .ok_or_else(|| Error::config("motion.ts", "required for cv"))?;
                let sq = mc
                    .sigma_q
                    .ok_or_else(|| Error::config("motion.sigma_q", "required for cv"))?;
                with_path(
                    LinearMotionModel::constant_velocity(2, ts, sq, mc.ps),
                    "motion",
                )?
            }
            (None, Some(f), Some(q)) => with_path(
                LinearMotionModel::new(matrix(f, "motion.f")?, matrix(q, "motion.q")?, mc.ps),
                "motion",
            )?,
            (Some(other), None, None) => {
                return Err(Error::config(
                    "motion.model",
                    format!("unknown model `{other}`"),
                ));
            }
            _ => {
                return Err(Error::config(
                    "motion",
                    "give either model=cv or both f and q",
                ))
            }
        };
        let nx = motion.dim();

        let me = &self.measurement;
        let measurement = match (me.model.as_deref(), &me.h, &me.r) {
            (Some("position"), None, None) => {
                let sr = me
                    .sigma_r
                    .ok_or_else(|| Error::config("measurement.sigma_r", "required"))?;
                if nx % 2 != 0 {
                    return Err(Error::config(
                        "measurement.model",
                        "position model needs [p, v] pairs",
                    ));
                }
                with_path(MeasurementModel::position(nx / 2, sr, me.pd), "measurement")?
            }
            (None, Some(h), Some(r)) => with_path(
                MeasurementModel::new(
                    matrix(h, "measurement.h")?,
                    matrix(r, "measurement.r")?,
                    me.pd,
                ),
                "measurement",
            )?,
            _ => {
                return Err(Error::config(
                    "measurement",
                    "give either model=position or both h and r",
                ))
            }
        };
        if measurement.state_dim() != nx {
            return Err(Error::config(
                "measurement.h",
                "column count must match state dimension",
            ));
        }

        let clutter = with_path(
            ClutterModel::new(
                self.clutter.rate,
                self.clutter.region.iter().map(|r| (r[0], r[1])).collect(),
            ),
            "clutter",
        )?;
        if clutter.region.len() != measurement.meas_dim() {
            return Err(Error::config(
                "clutter.region",
                "dimension must match measurements",
            ));
        }

        let birth = BirthModel::gaussian(self.birth.build(nx, "birth")?);
        let initial_ppp = match &self.initial_ppp {
            Some(m) => m.build(nx, "initial_ppp")?,
            None => birth.mixture.clone(),
        };
        Ok(Models {
            motion,
            measurement,
            clutter,
            birth,
            initial_ppp,
        })
    }

    pub fn schedule(&self, nx: usize) -> Result<TruthSchedule> {
        let s = &self.schedule;
        if s.births.len() != s.deaths.len() || s.births.len() != s.init_means.len() {
            return Err(Error::config(
                "schedule",
                "births, deaths and init_means must align",
            ));
        }
        let init_cov = s
            .init_cov_diag
            .as_ref()
            .map(|d| {
                if d.len() != nx {
                    return Err(Error::config("schedule.init_cov_diag", "wrong dimension"));
                }
                Ok(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
            })
            .transpose()?;
        let mut objects = Vec::with_capacity(s.births.len());
        for (i, ((b, d), m)) in s
            .births
            .iter()
            .zip(&s.deaths)
            .zip(&s.init_means)
            .enumerate()
        {
            if m.len() != nx {
                return Err(Error::config(
                    format!("schedule.init_means[{i}]"),
                    "wrong dimension",
                ));
            }
            objects.push(ScheduledObject {
                birth: *b,
                death: *d,
                init_mean: DVector::from_column_slice(m),
            });
        }
        Ok(TruthSchedule {
            horizon: self.horizon,
            objects,
            init_cov,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::config("K", "horizon must be positive"));
        }
        let models = self.models()?;
        self.schedule(models.motion.dim())?.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledObject {
    pub birth: usize,
    /// Last time step the object is alive.
    pub death: usize,
    pub init_mean: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthSchedule {
    pub horizon: usize,
    pub objects: Vec<ScheduledObject>,
    pub init_cov: Option<DMatrix<f64>>,
}

impl TruthSchedule {
    pub fn validate(&self) -> Result<()> {
        for (i, o) in self.objects.iter().enumerate() {
            if o.birth == 0 || o.birth > self.horizon {
                return Err(Error::config(
                    format!("schedule.births[{i}]"),
                    "outside 1..=K",
                ));
            }
            if o.death < o.birth {
                return Err(Error::config(
                    format!("schedule.deaths[{i}]"),
                    "death before birth",
                ));
            }
            if o.death > self.horizon {
                return Err(Error::config(format!("schedule.deaths[{i}]"), "after K"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub trajectories: Vec<Trajectory>,
    pub horizon: usize,
}

pub fn generate_truth<R: Rng + ?Sized>(
    schedule: &TruthSchedule,
    motion: &LinearMotionModel,
    rng: &mut R,
) -> Result<GroundTruth> {
    schedule.validate()?;
    let noise = SqrtFactor::new(&motion.q);
    let init = schedule.init_cov.as_ref().map(SqrtFactor::new);
    let zero = DVector::zeros(motion.dim());
    let mut trajectories = Vec::with_capacity(schedule.objects.len());
    for o in &schedule.objects {
        let mut x = match &init {
            Some(f) => f.sample(&o.init_mean, rng),
            None => o.init_mean.clone(),
        };
        let mut states = vec![x.clone()];
        for _ in o.birth..o.death {
            x = &motion.f * &x + noise.sample(&zero, rng);
            states.push(x.clone());
        }
        trajectories.push(Trajectory::new(o.birth, states)?);
    }
    Ok(GroundTruth {
        trajectories,
        horizon: schedule.horizon,
    })
}

pub fn generate_measurements<R: Rng + ?Sized>(
    truth: &GroundTruth,
    mm: &MeasurementModel,
    cm: &ClutterModel,
    rng: &mut R,
) -> Vec<MeasurementSet> {
    let noise = SqrtFactor::new(&mm.r);
    let zero = DVector::zeros(mm.meas_dim());
    let poisson = (cm.rate > 0.0).then(|| Poisson::new(cm.rate).expect("positive rate"));
    (1..=truth.horizon)
        .map(|k| {
            let mut z = Vec::new();
            for tr in &truth.trajectories {
                if let Some(x) = tr.state_at(k) {
                    if rng.gen::<f64>() < mm.pd {
                        z.push(&mm.h * x + noise.sample(&zero, rng));
                    }
                }
            }
            let n_clutter = poisson.as_ref().map_or(0, |p| p.sample(rng) as usize);
            for _ in 0..n_clutter {
                z.push(cm.sample_point(rng));
            }
            z
        })
        .collect()
}

/// Generator for stream `stream` of a seeded experiment.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const TRUTH_STREAM: u64 = 0;
const MEASUREMENT_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub models: Models,
    pub truth: GroundTruth,
    pub measurements: Vec<MeasurementSet>,
}

impl Scenario {
    /// Simulates truth and measurements from `config.seed`.
    pub fn generate(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let models = config.models()?;
        let schedule = config.schedule(models.motion.dim())?;
        let truth = generate_truth(
            &schedule,
            &models.motion,
            &mut stream_rng(config.seed, TRUTH_STREAM),
        )?;
        let measurements = generate_measurements(
            &truth,
            &models.measurement,
            &models.clutter,
            &mut stream_rng(config.seed, MEASUREMENT_STREAM),
        );
        Ok(Self {
            config: config.clone(),
            models,
            truth,
            measurements,
        })
    }

    pub fn horizon(&self) -> usize {
        self.truth.horizon
    }

    pub fn to_record(&self) -> ScenarioRecord {
        ScenarioRecord {
            config: self.config.clone(),
            truth: self.truth.trajectories.iter().map(Into::into).collect(),
            measurements: self
                .measurements
                .iter()
                .map(|zs| zs.iter().map(|z| z.as_slice().to_vec()).collect())
                .collect(),
        }
    }

    pub fn from_record(rec: &ScenarioRecord) -> Result<Self> {
        let models = rec.config.models()?;
        if rec.measurements.len() != rec.config.horizon {
            return Err(Error::Contract(format!(
                "scenario has {} measurement sets for K = {}",
                rec.measurements.len(),
                rec.config.horizon
            )));
        }
        let trajectories = rec
            .truth
            .iter()
            .map(Trajectory::try_from)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config: rec.config.clone(),
            models,
            truth: GroundTruth {
                trajectories,
                horizon: rec.config.horizon,
            },
            measurements: rec
                .measurements
                .iter()
                .map(|zs| zs.iter().map(|z| DVector::from_column_slice(z)).collect())
                .collect(),
        })
    }
}

/// JSON form of a scenario. Models are carried as the config that built them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub config: ScenarioConfig,
    pub truth: Vec<TrajectoryRecord>,
    pub measurements: Vec<Vec<Vec<f64>>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SCENARIO1: &str = include_str!("../../../configs/scenario1.toml");
    pub(crate) const SCENARIO2: &str = include_str!("../../../configs/scenario2.toml");

    #[test]
    fn scenario1_schedule_lengths() {
        let cfg = ScenarioConfig::from_toml(SCENARIO1).unwrap();
        let s = Scenario::generate(&cfg).unwrap();
        let lens: Vec<usize> = s.truth.trajectories.iter().map(Trajectory::len).collect();
        assert_eq!(lens, vec![41, 46, 51, 46, 51, 56]);
        let births: Vec<usize> = s.truth.trajectories.iter().map(|t| t.t).collect();
        assert_eq!(births, vec![1, 6, 11, 16, 21, 26]);
        assert_eq!(s.measurements.len(), 81);
    }

    #[test]
    fn scenario2_schedule_lengths() {
        let cfg = ScenarioConfig::from_toml(SCENARIO2).unwrap();
        let s = Scenario::generate(&cfg).unwrap();
        assert_eq!(s.truth.trajectories.len(), 4);
        assert!(s
            .truth
            .trajectories
            .iter()
            .all(|t| t.t == 1 && t.len() == 20));
    }

    #[test]
    fn zero_noise_truth_is_deterministic_sequence() {
        let motion = LinearMotionModel::new(
            LinearMotionModel::constant_velocity(1, 1.0, 0.0, 1.0)
                .unwrap()
                .f,
            DMatrix::zeros(2, 2),
            1.0,
        )
        .unwrap();
        let schedule = TruthSchedule {
            horizon: 5,
            objects: vec![ScheduledObject {
                birth: 2,
                death: 5,
                init_mean: DVector::from_vec(vec![0.0, 2.0]),
            }],
            init_cov: None,
        };
        let truth = generate_truth(&schedule, &motion, &mut stream_rng(3, 0)).unwrap();
        let tr = &truth.trajectories[0];
        let pos: Vec<f64> = tr.states.iter().map(|s| s[0]).collect();
        assert_eq!(pos, vec![0.0, 2.0, 4.0, 6.0]);
    }

    #[test]
    fn death_before_birth_is_config_error() {
        let schedule = TruthSchedule {
            horizon: 5,
            objects: vec![ScheduledObject {
                birth: 3,
                death: 2,
                init_mean: DVector::zeros(2),
            }],
            init_cov: None,
        };
        let motion = LinearMotionModel::constant_velocity(1, 1.0, 0.1, 1.0).unwrap();
        assert!(matches!(
            generate_truth(&schedule, &motion, &mut stream_rng(0, 0)),
            Err(Error::Config { .. })
        ));
    }

    fn one_object_truth() -> GroundTruth {
        GroundTruth {
            trajectories: vec![Trajectory::new(
                1,
                vec![DVector::from_vec(vec![1.0, 0.0, 2.0, 0.0]); 3],
            )
            .unwrap()],
            horizon: 3,
        }
    }

    #[test]
    fn no_sources_no_measurements() {
        let mm = MeasurementModel::position(2, 1.0, 0.0).unwrap();
        let cm = ClutterModel::new(0.0, vec![(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
        let z = generate_measurements(&one_object_truth(), &mm, &cm, &mut stream_rng(1, 1));
        assert!(z.iter().all(Vec::is_empty));
    }

    #[test]
    fn deterministic_detection() {
        let mm = MeasurementModel::position(2, 1e-10, 1.0).unwrap();
        let cm = ClutterModel::new(0.0, vec![(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
        let z = generate_measurements(&one_object_truth(), &mm, &cm, &mut stream_rng(1, 1));
        for zs in z {
            assert_eq!(zs.len(), 1);
            assert!((zs[0][0] - 1.0).abs() < 1e-8 && (zs[0][1] - 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn clutter_mean_count() {
        let mm = MeasurementModel::position(2, 1.0, 0.0).unwrap();
        let cm = ClutterModel::new(30.0, vec![(-100.0, 100.0), (-100.0, 100.0)]).unwrap();
        let truth = GroundTruth {
            trajectories: vec![],
            horizon: 10_000,
        };
        let z = generate_measurements(&truth, &mm, &cm, &mut stream_rng(42, 1));
        let mean = z.iter().map(Vec::len).sum::<usize>() as f64 / z.len() as f64;
        assert!((mean - 30.0).abs() < 1.0, "mean clutter count {mean}");
        assert!(z
            .iter()
            .flatten()
            .all(|p| p.iter().all(|c| (-100.0..100.0).contains(c))));
    }

    #[test]
    fn generation_is_reproducible() {
        let cfg = ScenarioConfig::from_toml(SCENARIO1).unwrap();
        let a = serde_json::to_string(&Scenario::generate(&cfg).unwrap().to_record()).unwrap();
        let b = serde_json::to_string(&Scenario::generate(&cfg).unwrap().to_record()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn record_roundtrip() {
        let cfg = ScenarioConfig::from_toml(SCENARIO2).unwrap();
        let s = Scenario::generate(&cfg).unwrap();
        let json = serde_json::to_string(&s.to_record()).unwrap();
        let back = Scenario::from_record(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn config_errors_carry_paths() {
        let cfg = ScenarioConfig::from_toml(SCENARIO2).unwrap();
        let mut bad = cfg.clone();
        bad.motion.ts = None;
        match bad.models() {
            Err(Error::Config { path, .. }) => assert_eq!(path, "motion.ts"),
            other => panic!("unexpected {other:?}"),
        }
        let mut bad = cfg.clone();
        bad.horizon = 0;
        assert!(matches!(bad.validate(), Err(Error::Config { .. })));
        let mut bad = cfg;
        bad.birth.means[0].pop();
        assert!(matches!(bad.models(), Err(Error::Config { .. })));
    }
}
