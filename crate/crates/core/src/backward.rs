//! Backward simulation of sets of trajectories from PMB filtering densities.

use log::warn;
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assign::{murty, Assignment, CostMatrix};
use crate::error::{Error, Result};
use crate::gauss::{
    chi2_gate, log_sum_exp, GaussianDensity, GaussianFactor, GaussianMixture, LinearMotionModel,
    TransitionFactor,
};
use crate::models::BirthModel;
use crate::pmb::{FilterLog, PmbDensity};
use crate::sim::stream_rng;
use crate::trajectory::{Trajectory, TrajectoryRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmootherParams {
    /// Number of particles `T`.
    pub particles: usize,
    /// Global hypotheses kept per backward step.
    pub m_best: usize,
    pub gate_prob: f64,
    pub w_hyp_min: f64,
    pub dirac_mode: bool,
    pub seed: u64,
    /// Floor a zero first-detection weight instead of failing.
    pub floor_unsupported: bool,
}

impl Default for SmootherParams {
    fn default() -> Self {
        Self {
            particles: 1000,
            m_best: 100,
            gate_prob: 0.9999,
            w_hyp_min: 1e-4,
            dirac_mode: false,
            seed: 0,
            floor_unsupported: true,
        }
    }
}

/// Splits `y` into trajectories born at `k + 1` and those born later.
pub fn split_y(y: &[Trajectory], k: usize) -> Result<(Vec<&Trajectory>, Vec<&Trajectory>)> {
    let mut present = Vec::new();
    let mut absent = Vec::new();
    for tr in y {
        match tr.t {
            t if t <= k => {
                return Err(Error::Contract(format!(
                    "trajectory born at {t} conditions the kernel at step {k}"
                )))
            }
            t if t == k + 1 => present.push(tr),
            _ => absent.push(tr),
        }
    }
    Ok((present, absent))
}

/// Density of the time-`k` head attached by a local hypothesis. `tail`
/// indexes the kernel's present trajectories (or absent ones for
/// `Unaltered`).
#[derive(Debug, Clone, PartialEq)]
pub enum HeadDensity {
    EndedAtK {
        g: GaussianDensity,
    },
    ContinuedSmoothed {
        g: GaussianDensity,
        tail: usize,
    },
    FirstDetected {
        w_keep: f64,
        w_extend: f64,
        /// Normalized smoothed heads from the undetected-object components.
        heads: GaussianMixture,
        tail: usize,
    },
    /// Never-existed Bernoulli: emits nothing.
    Empty,
    Unaltered {
        tail: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalHypothesis {
    pub assoc: Option<usize>,
    pub log_weight: f64,
    pub existence: f64,
    pub density: HeadDensity,
}

/// Backward kernel at step `k` given the trajectories over `k+1..K`.
///
/// `bernoullis` holds, in order: one list per forward Bernoulli (ended, then
/// one continued hypothesis per gated present trajectory), one list per
/// present trajectory (never-existed, first-detected), and one single-entry
/// list per absent trajectory.
#[derive(Debug, Clone)]
pub struct BackwardKernel {
    pub k: usize,
    pub n_forward: usize,
    pub present: Vec<Trajectory>,
    pub absent: Vec<Trajectory>,
    pub bernoullis: Vec<Vec<LocalHypothesis>>,
    /// `(1 − pS) λ^u_{k|k}`: undetected trajectories ending at `k`; never sampled.
    pub ppp_dead: GaussianMixture,
    /// `m × (n + m)` cost `−log[W1 W2]`.
    pub cost: CostMatrix,
}

impl BackwardKernel {
    pub fn m(&self) -> usize {
        self.present.len()
    }
}

/// Parts of the kernel at step `k` that do not depend on the conditioning
/// trajectories; shared read-only by every particle.
pub struct StepCache {
    k: usize,
    ps: f64,
    gate: f64,
    floor_unsupported: bool,
    bern: Vec<BernoulliFactor>,
    ppp: Vec<(f64, TransitionFactor)>,
    ppp_dead: GaussianMixture,
    birth_gauss: Vec<(f64, GaussianFactor)>,
    birth: BirthModel,
}

struct BernoulliFactor {
    ln_r: f64,
    ended_ln_w: f64,
    ended_existence: f64,
    filtered: GaussianDensity,
    tf: TransitionFactor,
}

impl StepCache {
    pub fn new(
        k: usize,
        pmb: &PmbDensity,
        birth: &BirthModel,
        m: &LinearMotionModel,
        gate: f64,
        floor_unsupported: bool,
    ) -> Result<Self> {
        let ps = m.ps;
        let bern = pmb
            .bernoullis
            .iter()
            .map(|b| {
                let w = 1.0 - b.r + b.r * (1.0 - ps);
                Ok(BernoulliFactor {
                    ln_r: b.r.ln(),
                    // pS = r = 1 leaves no room to end; clamp so the ratio stays finite.
                    ended_ln_w: w.max(f64::MIN_POSITIVE).ln(),
                    ended_existence: if w > 0.0 {
                        (b.r * (1.0 - ps) / w).clamp(0.0, 1.0)
                    } else {
                        0.0
                    },
                    filtered: b.density.clone(),
                    tf: TransitionFactor::new(&b.density, m)?,
                })
            })
            .collect::<Result<_>>()?;
        let ppp = pmb
            .ppp
            .components
            .iter()
            .filter(|(w, _)| *w > 0.0)
            .map(|(w, g)| Ok((*w, TransitionFactor::new(g, m)?)))
            .collect::<Result<_>>()?;
        let birth_gauss = birth
            .mixture
            .components
            .iter()
            .filter(|(w, _)| *w > 0.0)
            .map(|(w, g)| Ok((*w, GaussianFactor::new(g)?)))
            .collect::<Result<_>>()?;
        Ok(Self {
            k,
            ps,
            gate,
            floor_unsupported,
            bern,
            ppp,
            ppp_dead: pmb.ppp.scaled(1.0 - ps),
            birth_gauss,
            birth: birth.clone(),
        })
    }

    /// Birth part and undetected-extension parts of the first-detection
    /// weight at `y1`, optionally restricted to gated components.
    fn first_detection(&self, y1: &DVector<f64>, gated: bool) -> Result<(f64, Vec<(f64, usize)>)> {
        let mut birth = self.birth.uniform.as_ref().map_or(0.0, |u| u.eval(y1));
        for (w, f) in &self.birth_gauss {
            if !gated || f.smd(y1)? <= self.gate {
                birth += w * f.log_pdf(y1)?.exp();
            }
        }
        let mut extend = Vec::new();
        for (l, (w, tf)) in self.ppp.iter().enumerate() {
            if !gated || tf.smd(y1)? <= self.gate {
                let v = self.ps * w * tf.log_pdf(y1)?.exp();
                if v > 0.0 {
                    extend.push((v, l));
                }
            }
        }
        Ok((birth, extend))
    }

    pub fn kernel(&self, y: &[Trajectory]) -> Result<BackwardKernel> {
        let k = self.k;
        let (present, absent) = split_y(y, k)?;
        let n = self.bern.len();
        let m = present.len();
        let mut cost = CostMatrix::filled(m, n + m, f64::INFINITY);
        let mut bernoullis = Vec::with_capacity(n + m + absent.len());

        for (i, b) in self.bern.iter().enumerate() {
            let mut hyps = vec![LocalHypothesis {
                assoc: None,
                log_weight: b.ended_ln_w,
                existence: b.ended_existence,
                density: HeadDensity::EndedAtK {
                    g: b.filtered.clone(),
                },
            }];
            if self.ps > 0.0 && b.ln_r.is_finite() {
                for (j, tr) in present.iter().enumerate() {
                    let y1 = &tr.states[0];
                    if b.tf.smd(y1)? > self.gate {
                        continue;
                    }
                    let lw = b.ln_r + self.ps.ln() + b.tf.log_pdf(y1)?;
                    if lw == f64::NEG_INFINITY {
                        continue;
                    }
                    cost.set(j, i, -(lw - b.ended_ln_w));
                    hyps.push(LocalHypothesis {
                        assoc: Some(j),
                        log_weight: lw,
                        existence: 1.0,
                        density: HeadDensity::ContinuedSmoothed {
                            g: b.tf.smoothed(y1)?,
                            tail: j,
                        },
                    });
                }
            }
            bernoullis.push(hyps);
        }

        for (j, tr) in present.iter().enumerate() {
            let y1 = &tr.states[0];
            let (mut birth, mut extend) = self.first_detection(y1, true)?;
            if birth + extend.iter().map(|e| e.0).sum::<f64>() == 0.0 {
                (birth, extend) = self.first_detection(y1, false)?;
            }
            let ext_total: f64 = extend.iter().map(|e| e.0).sum();
            let mut w = birth + ext_total;
            let (w_keep, w_extend) = if w > 0.0 {
                let keep = birth / w;
                (keep, 1.0 - keep)
            } else if self.floor_unsupported {
                warn!(
                    "step {k}: trajectory {j} has no birth or undetected support; flooring its first-detection weight"
                );
                w = f64::MIN_POSITIVE;
                (1.0, 0.0)
            } else {
                return Err(Error::UnsupportedTrajectory(j));
            };
            let heads = GaussianMixture {
                components: extend
                    .iter()
                    .map(|(v, l)| Ok((v / ext_total, self.ppp[*l].1.smoothed(y1)?)))
                    .collect::<Result<_>>()?,
            };
            cost.set(j, n + j, -w.ln());
            bernoullis.push(vec![
                LocalHypothesis {
                    assoc: None,
                    log_weight: 0.0,
                    existence: 0.0,
                    density: HeadDensity::Empty,
                },
                LocalHypothesis {
                    assoc: Some(j),
                    log_weight: w.ln(),
                    existence: 1.0,
                    density: HeadDensity::FirstDetected {
                        w_keep,
                        w_extend,
                        heads,
                        tail: j,
                    },
                },
            ]);
        }

        for a in 0..absent.len() {
            bernoullis.push(vec![LocalHypothesis {
                assoc: None,
                log_weight: 0.0,
                existence: 1.0,
                density: HeadDensity::Unaltered { tail: a },
            }]);
        }

        Ok(BackwardKernel {
            k,
            n_forward: n,
            present: present.into_iter().cloned().collect(),
            absent: absent.into_iter().cloned().collect(),
            bernoullis,
            ppp_dead: self.ppp_dead.clone(),
            cost,
        })
    }
}

/// Backward kernel at step `k` from `f_{k|k}`, the birth intensity at `k+1`
/// and the trajectories `y` over `k+1..K`.
pub fn build_backward_kernel(
    k: usize,
    pmb: &PmbDensity,
    birth: &BirthModel,
    m: &LinearMotionModel,
    y: &[Trajectory],
    gate: f64,
) -> Result<BackwardKernel> {
    StepCache::new(k, pmb, birth, m, gate, true)?.kernel(y)
}

/// The top-`m_best` global hypotheses with normalized probabilities, after
/// dropping those below `w_hyp_min` (the most likely one is always kept).
pub fn global_hypotheses(
    kernel: &BackwardKernel,
    m_best: usize,
    w_hyp_min: f64,
) -> Result<Vec<(Assignment, f64)>> {
    let hyps = murty(&kernel.cost, m_best)?;
    let norm = log_sum_exp(hyps.iter().map(|a| -a.cost));
    let kept: Vec<(Assignment, f64)> = hyps
        .into_iter()
        .enumerate()
        .filter_map(|(idx, a)| {
            let p = (-a.cost - norm).exp();
            (idx == 0 || p >= w_hyp_min).then_some((a, p))
        })
        .collect();
    let total: f64 = kept.iter().map(|(_, p)| p).sum();
    Ok(kept.into_iter().map(|(a, p)| (a, p / total)).collect())
}

/// Draws one global hypothesis; returns it with its unnormalized log-weight
/// `ln ŵ_a = −cost`.
pub fn sample_global<R: Rng + ?Sized>(
    kernel: &BackwardKernel,
    m_best: usize,
    w_hyp_min: f64,
    rng: &mut R,
) -> Result<(Assignment, f64)> {
    let mut hyps = global_hypotheses(kernel, m_best, w_hyp_min)?;
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut pick = hyps.len() - 1;
    for (idx, (_, p)) in hyps.iter().enumerate() {
        acc += p;
        if u < acc {
            pick = idx;
            break;
        }
    }
    let (a, _) = hyps.swap_remove(pick);
    let lw = -a.cost;
    Ok((a, lw))
}

fn draw<R: Rng + ?Sized>(g: &GaussianDensity, dirac: bool, rng: &mut R) -> DVector<f64> {
    if dirac {
        g.mean.clone()
    } else {
        g.sample(rng)
    }
}

/// Samples the trajectory a local hypothesis contributes, if any.
pub fn sample_bernoulli<R: Rng + ?Sized>(
    h: &LocalHypothesis,
    kernel: &BackwardKernel,
    dirac_mode: bool,
    rng: &mut R,
) -> Option<Trajectory> {
    let k = kernel.k;
    match &h.density {
        HeadDensity::EndedAtK { g } => (rng.gen::<f64>() < h.existence)
            .then(|| Trajectory::single(k, draw(g, dirac_mode, rng))),
        HeadDensity::ContinuedSmoothed { g, tail } => {
            Some(kernel.present[*tail].prepend(draw(g, dirac_mode, rng)))
        }
        HeadDensity::FirstDetected {
            w_keep,
            heads,
            tail,
            ..
        } => {
            let tr = &kernel.present[*tail];
            if heads.is_empty() || rng.gen::<f64>() < *w_keep {
                return Some(tr.clone());
            }
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = heads.len() - 1;
            for (idx, (w, _)) in heads.components.iter().enumerate() {
                acc += w;
                if u < acc {
                    pick = idx;
                    break;
                }
            }
            Some(tr.prepend(draw(&heads.components[pick].1, dirac_mode, rng)))
        }
        HeadDensity::Empty => None,
        HeadDensity::Unaltered { tail } => Some(kernel.absent[*tail].clone()),
    }
}

/// Applies an assignment: one local hypothesis per kernel Bernoulli, then
/// samples each of them.
pub fn sample_from_assignment<R: Rng + ?Sized>(
    kernel: &BackwardKernel,
    a: &Assignment,
    dirac_mode: bool,
    rng: &mut R,
) -> Vec<Trajectory> {
    let n = kernel.n_forward;
    let m = kernel.m();
    let mut owner = vec![None; n];
    for (j, &col) in a.row_to_col.iter().enumerate() {
        if col < n {
            owner[col] = Some(j);
        }
    }
    let mut out = Vec::new();
    for (i, hyps) in kernel.bernoullis.iter().enumerate() {
        let h = if i < n {
            hyps.iter()
                .find(|h| h.assoc == owner[i])
                .expect("assigned pair is gated")
        } else if i < n + m {
            let j = i - n;
            &hyps[usize::from(a.row_to_col[j] == n + j)]
        } else {
            &hyps[0]
        };
        if let Some(tr) = sample_bernoulli(h, kernel, dirac_mode, rng) {
            out.push(tr);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub trajectories: Vec<Trajectory>,
    /// Accumulated unnormalized global-hypothesis log-weight.
    pub log_weight_acc: f64,
}

fn init_from_last<R: Rng + ?Sized>(
    pmb: &PmbDensity,
    k: usize,
    dirac_mode: bool,
    rng: &mut R,
) -> Vec<Trajectory> {
    pmb.bernoullis
        .iter()
        .filter_map(|b| {
            let u: f64 = rng.gen();
            (u < b.r).then(|| Trajectory::single(k, draw(&b.density, dirac_mode, rng)))
        })
        .collect()
}

/// Samples one particle given precomputed per-step caches (`caches[k − 1]`
/// belongs to step `k`).
pub fn simulate_particle(
    log: &FilterLog,
    caches: &[StepCache],
    params: &SmootherParams,
    rng: &mut ChaCha8Rng,
) -> Result<Particle> {
    let big_k = log.horizon();
    let mut y = init_from_last(log.filtered(big_k), big_k, params.dirac_mode, rng);
    let mut c = 0.0;
    for k in (1..big_k).rev() {
        let kernel = caches[k - 1].kernel(&y)?;
        let (a, lw) = sample_global(&kernel, params.m_best, params.w_hyp_min, rng)?;
        c += lw;
        y = sample_from_assignment(&kernel, &a, params.dirac_mode, rng);
    }
    Ok(Particle {
        trajectories: y,
        log_weight_acc: c,
    })
}

/// Builds the per-step kernel caches for `k = 1..K−1`.
pub fn step_caches(
    log: &FilterLog,
    birth: &BirthModel,
    m: &LinearMotionModel,
    params: &SmootherParams,
) -> Result<Vec<StepCache>> {
    let gate = chi2_gate(params.gate_prob, m.dim())?;
    (1..log.horizon())
        .into_par_iter()
        .map(|k| StepCache::new(k, log.filtered(k), birth, m, gate, params.floor_unsupported))
        .collect()
}

/// Draws `params.particles` independent sets of trajectories over `1..K`.
/// Particle `ι` uses its own RNG stream `ι` under `params.seed`.
pub fn backward_simulate(
    log: &FilterLog,
    birth: &BirthModel,
    m: &LinearMotionModel,
    params: &SmootherParams,
) -> Result<Vec<Particle>> {
    if log.horizon() == 0 || params.particles == 0 || params.m_best == 0 {
        return Err(Error::Contract(
            "backward simulation needs K >= 1, T >= 1 and M >= 1".into(),
        ));
    }
    let caches = step_caches(log, birth, m, params)?;
    (0..params.particles)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(params.seed, i as u64);
            simulate_particle(log, &caches, params, &mut rng)
        })
        .collect()
}

/// The particle with the largest accumulated log-weight; ties go to the
/// lowest index.
pub fn best_particle(particles: &[Particle]) -> Result<&Particle> {
    let mut best: Option<&Particle> = None;
    for p in particles {
        if best.is_none_or(|b| p.log_weight_acc > b.log_weight_acc) {
            best = Some(p);
        }
    }
    best.ok_or_else(|| Error::Contract("best_particle needs at least one particle".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleRecord {
    pub c: f64,
    pub trajectories: Vec<TrajectoryRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleSetRecord {
    pub particles: Vec<ParticleRecord>,
}

impl From<&Particle> for ParticleRecord {
    fn from(p: &Particle) -> Self {
        Self {
            c: p.log_weight_acc,
            trajectories: p.trajectories.iter().map(TrajectoryRecord::from).collect(),
        }
    }
}

impl TryFrom<&ParticleRecord> for Particle {
    type Error = Error;

    fn try_from(rec: &ParticleRecord) -> Result<Self> {
        Ok(Self {
            log_weight_acc: rec.c,
            trajectories: rec
                .trajectories
                .iter()
                .map(Trajectory::try_from)
                .collect::<Result<_>>()?,
        })
    }
}

impl ParticleSetRecord {
    pub fn from_particles(ps: &[Particle]) -> Self {
        Self {
            particles: ps.iter().map(ParticleRecord::from).collect(),
        }
    }

    pub fn to_particles(&self) -> Result<Vec<Particle>> {
        self.particles.iter().map(Particle::try_from).collect()
    }
}
