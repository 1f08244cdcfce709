//! Exact backward smoothing by exhaustive hypothesis enumeration.
//!
//! Filtering densities are treated as point masses: each Bernoulli sits at
//! its mean and each undetected-intensity component is an atom of weight
//! `w` at its mean. States of every enumerated trajectory are therefore
//! atoms, and hypotheses are identified by their discrete labels.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::backward::Particle;
use crate::error::{Error, Result};
use crate::gauss::{log_sum_exp, GaussianDensity, LinearMotionModel, TransitionFactor};
use crate::models::BirthModel;
use crate::pmb::FilterLog;
use crate::trajectory::{Trajectory, TrajectoryRecord};

/// Which support point of `f_{k|k}` a state came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    /// Bernoulli `i` at step `k`.
    Bernoulli { k: usize, i: usize },
    /// Undetected-intensity component `l` at step `k`.
    Undetected { k: usize, l: usize },
}

/// Canonical discrete abstraction of a set of trajectories: sorted
/// `(birth time, label path)` pairs. The death time is implied by the path.
pub type Signature = Vec<(usize, Vec<Label>)>;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySetHypothesis {
    /// Normalized log-probability.
    pub log_weight: f64,
    pub trajectories: Vec<Trajectory>,
    pub labels: Vec<Vec<Label>>,
}

impl TrajectorySetHypothesis {
    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }

    pub fn signature(&self) -> Signature {
        let mut sig: Signature = self
            .trajectories
            .iter()
            .zip(&self.labels)
            .map(|(t, l)| (t.t, l.clone()))
            .collect();
        sig.sort();
        sig
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactPosterior {
    /// Sorted by descending weight.
    pub hypotheses: Vec<TrajectorySetHypothesis>,
    pub prune_threshold: f64,
    /// Hypothesis count before pruning, per backward step `k = K−1..1`.
    pub enumerated: Vec<usize>,
    /// Largest `|Σ children − parent|` over all steps (normalized weights).
    pub max_invariant_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    pub prune: f64,
    pub cap: usize,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            prune: 1e-6,
            cap: 1_000_000,
        }
    }
}

#[derive(Debug, Clone)]
struct Hyp {
    lw: f64,
    trajs: Vec<Trajectory>,
    labels: Vec<Vec<Label>>,
}

/// Point-mass view of `f_{k|k}`.
struct Atoms {
    k: usize,
    bern: Vec<(f64, DVector<f64>, TransitionFactor)>,
    ppp: Vec<(f64, DVector<f64>, TransitionFactor)>,
}

impl Atoms {
    fn new(log: &FilterLog, k: usize, m: &LinearMotionModel) -> Result<Self> {
        let pmb = log.filtered(k);
        let point = |x: &DVector<f64>| -> Result<TransitionFactor> {
            let n = x.len();
            TransitionFactor::new(
                &GaussianDensity {
                    mean: x.clone(),
                    cov: nalgebra::DMatrix::zeros(n, n),
                },
                m,
            )
        };
        Ok(Self {
            k,
            bern: pmb
                .bernoullis
                .iter()
                .map(|b| Ok((b.r, b.density.mean.clone(), point(&b.density.mean)?)))
                .collect::<Result<_>>()?,
            ppp: pmb
                .ppp
                .components
                .iter()
                .map(|(w, g)| Ok((*w, g.mean.clone(), point(&g.mean)?)))
                .collect::<Result<_>>()?,
        })
    }

    fn ppp_mass(&self) -> f64 {
        self.ppp.iter().map(|(w, _, _)| w).sum()
    }
}

/// `ln f_{k+1|k}(ys)` for the predicted PMB of a point-mass `f_{k|k}`,
/// by summing over every assignment of `ys` to predicted Bernoullis or the
/// predicted Poisson part.
fn log_predicted_density(
    atoms: &Atoms,
    ys: &[&DVector<f64>],
    birth: &BirthModel,
    ps: f64,
) -> Result<f64> {
    let n = atoms.bern.len();
    let mut ln_ppp = Vec::with_capacity(ys.len());
    let mut ln_bern = vec![vec![f64::NEG_INFINITY; n]; ys.len()];
    for (j, y) in ys.iter().enumerate() {
        let mut v = birth.eval(y)?;
        for (w, _, tf) in &atoms.ppp {
            v += ps * w * tf.log_pdf(y)?.exp();
        }
        ln_ppp.push(v.ln());
        for (i, (r, _, tf)) in atoms.bern.iter().enumerate() {
            ln_bern[j][i] = (r * ps).ln() + tf.log_pdf(y)?;
        }
    }
    let ln_miss: Vec<f64> = atoms
        .bern
        .iter()
        .map(|(r, _, _)| (1.0 - r * ps).ln())
        .collect();

    fn rec(
        j: usize,
        used: &mut [bool],
        acc: f64,
        ln_ppp: &[f64],
        ln_bern: &[Vec<f64>],
        ln_miss: &[f64],
        out: &mut Vec<f64>,
    ) {
        if acc == f64::NEG_INFINITY {
            return;
        }
        if j == ln_ppp.len() {
            let miss: f64 = used
                .iter()
                .zip(ln_miss)
                .filter(|(u, _)| !**u)
                .map(|(_, l)| l)
                .sum();
            out.push(acc + miss);
            return;
        }
        rec(j + 1, used, acc + ln_ppp[j], ln_ppp, ln_bern, ln_miss, out);
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                rec(
                    j + 1,
                    used,
                    acc + ln_bern[j][i],
                    ln_ppp,
                    ln_bern,
                    ln_miss,
                    out,
                );
                used[i] = false;
            }
        }
    }
    let mut terms = Vec::new();
    rec(
        0,
        &mut vec![false; n],
        0.0,
        &ln_ppp,
        &ln_bern,
        &ln_miss,
        &mut terms,
    );
    let void = -(birth.total_weight() + ps * atoms.ppp_mass());
    Ok(void + log_sum_exp(terms))
}

/// One option for a Bernoulli or an unclaimed present trajectory.
#[derive(Clone, Copy)]
enum Choice {
    Absent,
    Ended,
    Continue(usize),
    Born,
    Extend(usize),
}

fn expand(
    parent: &Hyp,
    atoms: &Atoms,
    birth: &BirthModel,
    ps: f64,
    budget: &mut usize,
    cap: usize,
    out: &mut Vec<Hyp>,
) -> Result<()> {
    let k = atoms.k;
    let present: Vec<usize> = (0..parent.trajs.len())
        .filter(|&a| parent.trajs[a].t == k + 1)
        .collect();
    let ys: Vec<&DVector<f64>> = present
        .iter()
        .map(|&a| &parent.trajs[a].states[0])
        .collect();
    let m = ys.len();
    let n = atoms.bern.len();

    // Per-Bernoulli option log-weights.
    let mut bern_opts: Vec<Vec<(Choice, f64)>> = Vec::with_capacity(n);
    for (r, _, tf) in &atoms.bern {
        let mut o = vec![
            (Choice::Absent, (1.0 - r).ln()),
            (Choice::Ended, (r * (1.0 - ps)).ln()),
        ];
        for (j, y) in ys.iter().enumerate() {
            o.push((Choice::Continue(j), (r * ps).ln() + tf.log_pdf(y)?));
        }
        o.retain(|(_, lw)| *lw > f64::NEG_INFINITY);
        bern_opts.push(o);
    }
    let mut free_opts: Vec<Vec<(Choice, f64)>> = Vec::with_capacity(m);
    for y in &ys {
        let mut o = vec![(Choice::Born, birth.eval(y)?.ln())];
        for (l, (w, _, tf)) in atoms.ppp.iter().enumerate() {
            o.push((Choice::Extend(l), (w * ps).ln() + tf.log_pdf(y)?));
        }
        o.retain(|(_, lw)| *lw > f64::NEG_INFINITY);
        free_opts.push(o);
    }
    let base = parent.lw
        - (birth.total_weight() + ps * atoms.ppp_mass())
        - log_predicted_density(atoms, &ys, birth, ps)?;

    let mut picks: Vec<Choice> = Vec::with_capacity(n + m);
    let mut claimed = vec![false; m];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        idx: usize,
        lw: f64,
        picks: &mut Vec<Choice>,
        claimed: &mut [bool],
        bern_opts: &[Vec<(Choice, f64)>],
        free_opts: &[Vec<(Choice, f64)>],
        emit: &mut dyn FnMut(&[Choice], f64) -> Result<()>,
    ) -> Result<()> {
        let n = bern_opts.len();
        if idx < n {
            for &(c, w) in &bern_opts[idx] {
                if let Choice::Continue(j) = c {
                    if claimed[j] {
                        continue;
                    }
                    claimed[j] = true;
                    picks.push(c);
                    rec(idx + 1, lw + w, picks, claimed, bern_opts, free_opts, emit)?;
                    picks.pop();
                    claimed[j] = false;
                } else {
                    picks.push(c);
                    rec(idx + 1, lw + w, picks, claimed, bern_opts, free_opts, emit)?;
                    picks.pop();
                }
            }
            return Ok(());
        }
        let j = idx - n;
        if j == claimed.len() {
            return emit(picks, lw);
        }
        if claimed[j] {
            picks.push(Choice::Absent);
            rec(idx + 1, lw, picks, claimed, bern_opts, free_opts, emit)?;
            picks.pop();
            return Ok(());
        }
        for &(c, w) in &free_opts[j] {
            picks.push(c);
            rec(idx + 1, lw + w, picks, claimed, bern_opts, free_opts, emit)?;
            picks.pop();
        }
        Ok(())
    }

    let mut emit = |picks: &[Choice], lw: f64| -> Result<()> {
        *budget += 1;
        if *budget > cap {
            return Err(Error::SizeCap {
                count: *budget,
                cap,
            });
        }
        let mut trajs = Vec::with_capacity(parent.trajs.len() + n);
        let mut labels = Vec::with_capacity(parent.trajs.len() + n);
        let mut is_present = vec![false; parent.trajs.len()];
        for &a in &present {
            is_present[a] = true;
        }
        for (i, c) in picks[..n].iter().enumerate() {
            let x = &atoms.bern[i].1;
            let lab = Label::Bernoulli { k, i };
            match *c {
                Choice::Ended => {
                    trajs.push(Trajectory::single(k, x.clone()));
                    labels.push(vec![lab]);
                }
                Choice::Continue(j) => {
                    let a = present[j];
                    trajs.push(parent.trajs[a].prepend(x.clone()));
                    labels.push(
                        std::iter::once(lab)
                            .chain(parent.labels[a].iter().copied())
                            .collect(),
                    );
                }
                _ => {}
            }
        }
        for (j, c) in picks[n..].iter().enumerate() {
            let a = present[j];
            match *c {
                Choice::Born => {
                    trajs.push(parent.trajs[a].clone());
                    labels.push(parent.labels[a].clone());
                }
                Choice::Extend(l) => {
                    trajs.push(parent.trajs[a].prepend(atoms.ppp[l].1.clone()));
                    labels.push(
                        std::iter::once(Label::Undetected { k, l })
                            .chain(parent.labels[a].iter().copied())
                            .collect(),
                    );
                }
                _ => {}
            }
        }
        for (a, tr) in parent.trajs.iter().enumerate() {
            if !is_present[a] {
                trajs.push(tr.clone());
                labels.push(parent.labels[a].clone());
            }
        }
        out.push(Hyp {
            lw: base + lw,
            trajs,
            labels,
        });
        Ok(())
    };
    rec(
        0,
        0.0,
        &mut picks,
        &mut claimed,
        &bern_opts,
        &free_opts,
        &mut emit,
    )
}

fn normalize_and_prune(hyps: &mut Vec<Hyp>, prune: f64) {
    let norm = log_sum_exp(hyps.iter().map(|h| h.lw));
    for h in hyps.iter_mut() {
        h.lw -= norm;
    }
    let best = hyps.iter().map(|h| h.lw).fold(f64::NEG_INFINITY, f64::max);
    hyps.retain(|h| h.lw.exp() >= prune || h.lw == best);
    let norm = log_sum_exp(hyps.iter().map(|h| h.lw));
    for h in hyps.iter_mut() {
        h.lw -= norm;
    }
}

/// Exact smoothing posterior over sets of detected trajectories.
pub fn exact_smooth(
    log: &FilterLog,
    birth: &BirthModel,
    m: &LinearMotionModel,
    params: &OracleParams,
) -> Result<ExactPosterior> {
    let big_k = log.horizon();
    if big_k == 0 {
        return Err(Error::Contract("exact smoothing needs K >= 1".into()));
    }
    let ps = m.ps;

    // Existence patterns of f_{K|K}.
    let last = log.filtered(big_k);
    let mut hyps = vec![Hyp {
        lw: 0.0,
        trajs: vec![],
        labels: vec![],
    }];
    for (i, b) in last.bernoullis.iter().enumerate() {
        let mut next = Vec::with_capacity(hyps.len() * 2);
        for h in &hyps {
            if b.r < 1.0 {
                next.push(Hyp {
                    lw: h.lw + (1.0 - b.r).ln(),
                    ..h.clone()
                });
            }
            if b.r > 0.0 {
                let mut g = h.clone();
                g.lw += b.r.ln();
                g.trajs
                    .push(Trajectory::single(big_k, b.density.mean.clone()));
                g.labels.push(vec![Label::Bernoulli { k: big_k, i }]);
                next.push(g);
            }
        }
        if next.len() > params.cap {
            return Err(Error::SizeCap {
                count: next.len(),
                cap: params.cap,
            });
        }
        hyps = next;
    }
    normalize_and_prune(&mut hyps, params.prune);

    let mut enumerated = Vec::new();
    let mut max_err: f64 = 0.0;
    for k in (1..big_k).rev() {
        let atoms = Atoms::new(log, k, m)?;
        let mut budget = 0;
        let mut next = Vec::new();
        for parent in &hyps {
            let start = next.len();
            expand(
                parent,
                &atoms,
                birth,
                ps,
                &mut budget,
                params.cap,
                &mut next,
            )?;
            let sum = log_sum_exp(next[start..].iter().map(|h| h.lw)).exp();
            max_err = max_err.max((sum - parent.lw.exp()).abs());
        }
        enumerated.push(next.len());
        hyps = next;
        normalize_and_prune(&mut hyps, params.prune);
    }

    let mut hypotheses: Vec<TrajectorySetHypothesis> = hyps
        .into_iter()
        .map(|h| TrajectorySetHypothesis {
            log_weight: h.lw,
            trajectories: h.trajs,
            labels: h.labels,
        })
        .collect();
    hypotheses.sort_by(|a, b| {
        b.log_weight
            .total_cmp(&a.log_weight)
            .then_with(|| a.signature().cmp(&b.signature()))
    });
    Ok(ExactPosterior {
        hypotheses,
        prune_threshold: params.prune,
        enumerated,
        max_invariant_error: max_err,
    })
}

/// Total normalized weight of hypotheses with signature `sig`.
pub fn structure_probability(post: &ExactPosterior, sig: &Signature) -> f64 {
    post.hypotheses
        .iter()
        .filter(|h| &h.signature() == sig)
        .map(TrajectorySetHypothesis::weight)
        .sum()
}

pub fn structure_distribution(post: &ExactPosterior) -> BTreeMap<Signature, f64> {
    let mut d = BTreeMap::new();
    for h in &post.hypotheses {
        *d.entry(h.signature()).or_insert(0.0) += h.weight();
    }
    d
}

/// Labels each sampled state by the nearest support point of `f_{k|k}`.
pub fn particle_signature(p: &Particle, log: &FilterLog) -> Signature {
    let label_at = |k: usize, x: &DVector<f64>| -> Label {
        let pmb = log.filtered(k);
        let mut best = (f64::INFINITY, Label::Bernoulli { k, i: usize::MAX });
        for (i, b) in pmb.bernoullis.iter().enumerate() {
            let d = (x - &b.density.mean).norm_squared();
            if d < best.0 {
                best = (d, Label::Bernoulli { k, i });
            }
        }
        for (l, (_, g)) in pmb.ppp.components.iter().enumerate() {
            let d = (x - &g.mean).norm_squared();
            if d < best.0 {
                best = (d, Label::Undetected { k, l });
            }
        }
        best.1
    };
    let mut sig: Signature = p
        .trajectories
        .iter()
        .map(|t| {
            (
                t.t,
                t.states
                    .iter()
                    .enumerate()
                    .map(|(o, x)| label_at(t.t + o, x))
                    .collect(),
            )
        })
        .collect();
    sig.sort();
    sig
}

/// Empirical structure distribution of equally weighted particles.
pub fn empirical_distribution(particles: &[Particle], log: &FilterLog) -> BTreeMap<Signature, f64> {
    let mut d = BTreeMap::new();
    let w = 1.0 / particles.len() as f64;
    for p in particles {
        *d.entry(particle_signature(p, log)).or_insert(0.0) += w;
    }
    d
}

pub fn tv_distance(p: &BTreeMap<Signature, f64>, q: &BTreeMap<Signature, f64>) -> f64 {
    let mut total = 0.0;
    for (s, a) in p {
        total += (a - q.get(s).copied().unwrap_or(0.0)).abs();
    }
    for (s, b) in q {
        if !p.contains_key(s) {
            total += b;
        }
    }
    0.5 * total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisRecord {
    pub weight: f64,
    pub trajectories: Vec<TrajectoryRecord>,
    pub signature: Signature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactPosteriorRecord {
    pub prune_threshold: f64,
    pub enumerated: Vec<usize>,
    pub hypotheses: Vec<HypothesisRecord>,
}

impl From<&ExactPosterior> for ExactPosteriorRecord {
    fn from(p: &ExactPosterior) -> Self {
        Self {
            prune_threshold: p.prune_threshold,
            enumerated: p.enumerated.clone(),
            hypotheses: p
                .hypotheses
                .iter()
                .map(|h| HypothesisRecord {
                    weight: h.weight(),
                    trajectories: h.trajectories.iter().map(TrajectoryRecord::from).collect(),
                    signature: h.signature(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::GaussianMixture;
    use crate::pmb::{BernoulliComponent, FilterStep, PmbDensity};
    use nalgebra::DMatrix;

    fn point(x: f64) -> GaussianDensity {
        GaussianDensity::new(DVector::from_element(1, x), DMatrix::zeros(1, 1)).unwrap()
    }

    fn step(bs: &[(f64, f64)], ppp: &[(f64, f64)]) -> FilterStep {
        FilterStep {
            updated: PmbDensity {
                ppp: GaussianMixture {
                    components: ppp.iter().map(|(w, x)| (*w, point(*x))).collect(),
                },
                bernoullis: bs
                    .iter()
                    .map(|(r, x)| BernoulliComponent::new(*r, point(*x)).unwrap())
                    .collect(),
            },
            predicted_ppp: GaussianMixture::empty(),
            estimates: vec![],
        }
    }

    fn motion(ps: f64) -> LinearMotionModel {
        LinearMotionModel::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            ps,
        )
        .unwrap()
    }

    fn birth() -> BirthModel {
        BirthModel::gaussian(GaussianMixture::single(
            0.1,
            GaussianDensity::from_slices(&[0.0], &[100.0]).unwrap(),
        ))
    }

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    fn closed_form(n: usize, m: usize, l: usize) -> usize {
        (0..=n.min(m))
            .map(|s| {
                let fact: usize = (1..=s).product();
                binom(n, s)
                    * binom(m, s)
                    * fact
                    * 2usize.pow((n - s) as u32)
                    * (1 + l).pow((m - s) as u32)
            })
            .sum()
    }

    #[test]
    fn single_step_single_bernoulli() {
        let log = FilterLog {
            steps: vec![step(&[(1.0, 3.0)], &[])],
        };
        let post = exact_smooth(&log, &birth(), &motion(0.9), &OracleParams::default()).unwrap();
        assert_eq!(post.hypotheses.len(), 1);
        assert!((post.hypotheses[0].weight() - 1.0).abs() < 1e-15);
        assert_eq!(
            post.hypotheses[0].trajectories,
            vec![Trajectory::single(1, DVector::from_element(1, 3.0))]
        );
    }

    #[test]
    fn two_certain_objects_give_seven() {
        let log = FilterLog {
            steps: vec![
                step(&[(1.0, -1.0), (1.0, 1.0)], &[]),
                step(&[(1.0, -0.9), (1.0, 1.1)], &[]),
            ],
        };
        let post = exact_smooth(
            &log,
            &birth(),
            &motion(0.95),
            &OracleParams {
                prune: 0.0,
                cap: 1000,
            },
        )
        .unwrap();
        assert_eq!(post.enumerated, vec![7]);
        assert_eq!(post.hypotheses.len(), 7);
        let total: f64 = post.hypotheses.iter().map(|h| h.weight()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(post.max_invariant_error < 1e-12);
        // Two unbroken tracks is the most likely structure.
        let map = &post.hypotheses[0];
        assert_eq!(map.trajectories.len(), 2);
        assert!(map.trajectories.iter().all(|t| t.t == 1 && t.len() == 2));
    }

    #[test]
    fn count_matches_closed_form() {
        for (n, m, l) in [(1, 1, 0), (2, 1, 1), (2, 2, 2), (3, 2, 1)] {
            let xs: Vec<(f64, f64)> = (0..n).map(|i| (0.7, i as f64)).collect();
            let ys: Vec<(f64, f64)> = (0..m).map(|j| (1.0, j as f64 + 0.2)).collect();
            let ppp: Vec<(f64, f64)> = (0..l).map(|a| (0.3, -(a as f64) - 1.0)).collect();
            let log = FilterLog {
                steps: vec![step(&xs, &ppp), step(&ys, &[])],
            };
            let post = exact_smooth(
                &log,
                &birth(),
                &motion(0.9),
                &OracleParams {
                    prune: 0.0,
                    cap: 100_000,
                },
            )
            .unwrap();
            assert_eq!(
                post.enumerated,
                vec![closed_form(n, m, l)],
                "n={n} m={m} l={l}"
            );
            assert!(post.max_invariant_error < 1e-12);
        }
    }

    #[test]
    fn size_cap() {
        let xs: Vec<(f64, f64)> = (0..4).map(|i| (0.5, i as f64)).collect();
        let log = FilterLog {
            steps: vec![step(&xs, &[(0.2, 0.0)]), step(&xs, &[])],
        };
        let err = exact_smooth(
            &log,
            &birth(),
            &motion(0.9),
            &OracleParams {
                prune: 0.0,
                cap: 50,
            },
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn structure_queries() {
        let log = FilterLog {
            steps: vec![step(&[(0.8, 0.0)], &[(0.5, 5.0)]), step(&[(0.9, 0.5)], &[])],
        };
        let post = exact_smooth(&log, &birth(), &motion(0.9), &OracleParams::default()).unwrap();
        let dist = structure_distribution(&post);
        let total: f64 = dist.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for (sig, p) in &dist {
            assert!((structure_probability(&post, sig) - p).abs() < 1e-15);
        }
        let none: Signature = vec![(9, vec![])];
        assert_eq!(structure_probability(&post, &none), 0.0);
        assert_eq!(tv_distance(&dist, &dist), 0.0);
        let rec = ExactPosteriorRecord::from(&post);
        let json = serde_json::to_string(&rec).unwrap();
        let back: ExactPosteriorRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn particle_labels_use_nearest_support() {
        let log = FilterLog {
            steps: vec![step(&[(0.8, 0.0)], &[(0.5, 5.0)]), step(&[(0.9, 0.5)], &[])],
        };
        let p = Particle {
            trajectories: vec![Trajectory::new(
                1,
                vec![
                    DVector::from_element(1, 4.9),
                    DVector::from_element(1, 0.51),
                ],
            )
            .unwrap()],
            log_weight_acc: 0.0,
        };
        assert_eq!(
            particle_signature(&p, &log),
            vec![(
                1,
                vec![
                    Label::Undetected { k: 1, l: 0 },
                    Label::Bernoulli { k: 2, i: 0 }
                ]
            )]
        );
    }
}
