//! GOSPA metric, estimate extraction and particle statistics.

use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::assign::{solve_lap, CostMatrix};
use crate::backward::Particle;
use crate::error::{Error, Result};
use crate::pmb::PmbDensity;
use crate::sim::GroundTruth;
use crate::trajectory::{states_at, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GospaParams {
    pub c: f64,
    pub p: f64,
    /// State components the base distance uses; `None` means all.
    pub positions: Option<Vec<usize>>,
}

impl Default for GospaParams {
    fn default() -> Self {
        Self {
            c: 20.0,
            p: 1.0,
            positions: Some(vec![0, 2]),
        }
    }
}

impl GospaParams {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !(self.p >= 1.0) || !self.p.is_finite() {
            return Err(Error::Contract(format!(
                "GOSPA needs c > 0 and 1 <= p < inf, got c={} p={}",
                self.c, self.p
            )));
        }
        Ok(())
    }

    fn distance(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        match &self.positions {
            Some(idx) => idx
                .iter()
                .map(|&i| (a[i] - b[i]).powi(2))
                .sum::<f64>()
                .sqrt(),
            None => (a - b).norm(),
        }
    }
}

/// GOSPA with `α = 2`, reported unrooted (sums of `d^p` and `c^p / 2` terms)
/// so that `total = localisation + missed + false_det`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GospaResult {
    pub total: f64,
    pub localisation: f64,
    pub missed: f64,
    pub false_det: f64,
    pub n_matched: usize,
    pub n_missed: usize,
    pub n_false: usize,
}

impl GospaResult {
    pub fn rooted(&self, p: f64) -> f64 {
        self.total.powf(1.0 / p)
    }
}

/// GOSPA between ground truth `x` and estimates `y`.
pub fn gospa(x: &[DVector<f64>], y: &[DVector<f64>], params: &GospaParams) -> Result<GospaResult> {
    params.validate()?;
    let cp = params.c.powf(params.p);
    let (n, m) = (x.len(), y.len());
    let mut matched = Vec::new();
    if n > 0 && m > 0 {
        // Rows: truth. Columns: estimates, then one "unmatched" slot per row.
        // A pair only helps when d^p < c^p, so its cost is min(d^p − c^p, 0).
        let mut c = CostMatrix::filled(n, m + n, 0.0);
        let mut dp = vec![0.0; n * m];
        for (i, xi) in x.iter().enumerate() {
            for (j, yj) in y.iter().enumerate() {
                let d = params.distance(xi, yj).min(params.c).powf(params.p);
                dp[i * m + j] = d;
                c.set(i, j, (d - cp).min(0.0));
            }
        }
        let a = solve_lap(&c)?;
        for (i, &j) in a.row_to_col.iter().enumerate() {
            if j < m && dp[i * m + j] < cp {
                matched.push(dp[i * m + j]);
            }
        }
    }
    let k = matched.len();
    let localisation: f64 = matched.iter().sum();
    let missed = (n - k) as f64 * cp / 2.0;
    let false_det = (m - k) as f64 * cp / 2.0;
    Ok(GospaResult {
        total: localisation + missed + false_det,
        localisation,
        missed,
        false_det,
        n_matched: k,
        n_missed: n - k,
        n_false: m - k,
    })
}

/// Means of Bernoullis with existence at least `threshold`.
pub fn extract_estimates(pmb: &PmbDensity, threshold: f64) -> Vec<DVector<f64>> {
    pmb.estimates(threshold)
}

/// Per-step state sets of a trajectory-set estimate over `1..=horizon`.
pub fn trajectory_estimates(trajectories: &[Trajectory], horizon: usize) -> Vec<Vec<DVector<f64>>> {
    (1..=horizon).map(|k| states_at(trajectories, k)).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GospaSummary {
    pub total: f64,
    pub localisation: f64,
    pub missed: f64,
    pub false_det: f64,
    /// Localisation divided by the number of estimates, over the whole run.
    pub localisation_per_estimate: f64,
    pub mean_total: f64,
    pub mean_localisation: f64,
    pub mean_missed: f64,
    pub mean_false: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GospaSeries {
    pub per_step: Vec<GospaResult>,
    pub summary: GospaSummary,
}

pub fn gospa_over_time(
    estimates: &[Vec<DVector<f64>>],
    truth: &GroundTruth,
    params: &GospaParams,
) -> Result<GospaSeries> {
    if estimates.len() != truth.horizon {
        return Err(Error::Contract(format!(
            "estimates cover {} steps but the truth covers {}",
            estimates.len(),
            truth.horizon
        )));
    }
    let per_step = estimates
        .iter()
        .enumerate()
        .map(|(i, est)| gospa(&states_at(&truth.trajectories, i + 1), est, params))
        .collect::<Result<Vec<_>>>()?;
    let mut s = GospaSummary::default();
    let mut n_est = 0usize;
    for r in &per_step {
        s.total += r.total;
        s.localisation += r.localisation;
        s.missed += r.missed;
        s.false_det += r.false_det;
        n_est += r.n_matched + r.n_false;
    }
    let k = per_step.len().max(1) as f64;
    s.mean_total = s.total / k;
    s.mean_localisation = s.localisation / k;
    s.mean_missed = s.missed / k;
    s.mean_false = s.false_det / k;
    s.localisation_per_estimate = if n_est > 0 {
        s.localisation / n_est as f64
    } else {
        0.0
    };
    Ok(GospaSeries {
        per_step,
        summary: s,
    })
}

/// Writes `k,total,localisation,missed,false` rows.
pub fn write_gospa_csv<W: Write>(series: &GospaSeries, mut w: W) -> Result<()> {
    writeln!(w, "k,total,localisation,missed,false")?;
    for (i, r) in series.per_step.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{}",
            i + 1,
            r.total,
            r.localisation,
            r.missed,
            r.false_det
        )?;
    }
    Ok(())
}

/// Diagnostic only: number of times a truth trajectory's optimally matched
/// estimate trajectory changes between consecutive steps where it is matched.
pub fn track_switches(
    truth: &[Trajectory],
    estimate: &[Trajectory],
    horizon: usize,
    params: &GospaParams,
) -> Result<usize> {
    params.validate()?;
    let mut last: Vec<Option<usize>> = vec![None; truth.len()];
    let mut switches = 0;
    for k in 1..=horizon {
        let xs: Vec<usize> = (0..truth.len()).filter(|&i| truth[i].alive_at(k)).collect();
        let ys: Vec<usize> = (0..estimate.len())
            .filter(|&j| estimate[j].alive_at(k))
            .collect();
        if xs.is_empty() || ys.is_empty() {
            continue;
        }
        let mut c = CostMatrix::filled(xs.len(), ys.len() + xs.len(), 0.0);
        for (a, &i) in xs.iter().enumerate() {
            for (b, &j) in ys.iter().enumerate() {
                let d = params.distance(
                    truth[i].state_at(k).expect("alive"),
                    estimate[j].state_at(k).expect("alive"),
                );
                c.set(
                    a,
                    b,
                    (d.min(params.c).powf(params.p) - params.c.powf(params.p)).min(0.0),
                );
            }
        }
        let sol = solve_lap(&c)?;
        for (a, &col) in sol.row_to_col.iter().enumerate() {
            if col < ys.len() && c.get(a, col) < 0.0 {
                let j = ys[col];
                let i = xs[a];
                if last[i].is_some_and(|prev| prev != j) {
                    switches += 1;
                }
                last[i] = Some(j);
            }
        }
    }
    Ok(switches)
}

/// Cardinality, birth-time and death-time distributions of equally
/// weighted particles. `birth_dist[k − 1][n]` is the probability of exactly
/// `n` trajectories born at step `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleStats {
    pub card_dist: Vec<f64>,
    pub birth_dist: Vec<Vec<f64>>,
    pub death_dist: Vec<Vec<f64>>,
}

pub fn particle_stats(particles: &[Particle], horizon: usize) -> Result<ParticleStats> {
    if particles.is_empty() {
        return Err(Error::Contract(
            "particle_stats needs at least one particle".into(),
        ));
    }
    let max_n = particles
        .iter()
        .map(|p| p.trajectories.len())
        .max()
        .unwrap_or(0);
    let mut card = vec![0usize; max_n + 1];
    let mut births = vec![vec![0usize; max_n + 1]; horizon];
    let mut deaths = vec![vec![0usize; max_n + 1]; horizon];
    for p in particles {
        card[p.trajectories.len()] += 1;
        let mut b = vec![0usize; horizon];
        let mut d = vec![0usize; horizon];
        for t in &p.trajectories {
            if t.t == 0 || t.end() > horizon {
                return Err(Error::Contract(format!(
                    "trajectory over {}..={} outside horizon {horizon}",
                    t.t,
                    t.end()
                )));
            }
            b[t.t - 1] += 1;
            d[t.end() - 1] += 1;
        }
        for k in 0..horizon {
            births[k][b[k]] += 1;
            deaths[k][d[k]] += 1;
        }
    }
    let t = particles.len() as f64;
    let norm = |v: Vec<usize>| -> Vec<f64> {
        let mut out: Vec<f64> = v.into_iter().map(|c| c as f64 / t).collect();
        while out.len() > 1 && out.last() == Some(&0.0) {
            out.pop();
        }
        out
    };
    Ok(ParticleStats {
        card_dist: norm(card),
        birth_dist: births.into_iter().map(norm).collect(),
        death_dist: deaths.into_iter().map(norm).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::{GaussianDensity, GaussianMixture};
    use crate::pmb::BernoulliComponent;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn plain() -> GospaParams {
        GospaParams {
            positions: None,
            ..GospaParams::default()
        }
    }

    #[test]
    fn unit_values() {
        let p = plain();
        assert_eq!(
            gospa(&[v(&[0.0, 0.0])], &[v(&[0.0, 0.0])], &p)
                .unwrap()
                .total,
            0.0
        );
        let r = gospa(&[v(&[0.0, 0.0])], &[], &p).unwrap();
        assert_eq!((r.total, r.missed), (10.0, 10.0));
        let r = gospa(&[v(&[0.0])], &[v(&[3.0])], &p).unwrap();
        assert_eq!((r.total, r.localisation), (3.0, 3.0));
        let r = gospa(&[], &[v(&[1.0]), v(&[2.0])], &p).unwrap();
        assert_eq!((r.total, r.false_det, r.n_false), (20.0, 20.0, 2));
        // Beyond the cut-off, a pair counts as one miss plus one false.
        let r = gospa(&[v(&[0.0])], &[v(&[30.0])], &p).unwrap();
        assert_eq!((r.missed, r.false_det, r.localisation), (10.0, 10.0, 0.0));
        assert!(gospa(&[], &[], &GospaParams { c: 0.0, ..p }).is_err());
    }

    #[test]
    fn position_projection() {
        let p = GospaParams::default();
        let r = gospa(
            &[v(&[0.0, 5.0, 0.0, 5.0])],
            &[v(&[3.0, -5.0, 4.0, 0.0])],
            &p,
        )
        .unwrap();
        assert!((r.total - 5.0).abs() < 1e-15);
    }

    #[test]
    fn estimates_threshold() {
        let g = GaussianDensity::from_slices(&[1.0], &[1.0]).unwrap();
        let pmb = PmbDensity {
            ppp: GaussianMixture::empty(),
            bernoullis: vec![
                BernoulliComponent::new(0.6, g.clone()).unwrap(),
                BernoulliComponent::new(0.4, g).unwrap(),
            ],
        };
        assert_eq!(extract_estimates(&pmb, 0.5).len(), 1);
        assert_eq!(extract_estimates(&pmb, 0.0).len(), 2);
        assert!(extract_estimates(&PmbDensity::default(), 0.5).is_empty());
    }

    fn tr(t: usize, xs: &[f64]) -> Trajectory {
        Trajectory::new(t, xs.iter().map(|x| v(&[*x])).collect()).unwrap()
    }

    #[test]
    fn over_time() {
        let truth = GroundTruth {
            trajectories: vec![tr(1, &[0.0; 10]), tr(1, &[5.0; 10])],
            horizon: 10,
        };
        let p = plain();
        let s = gospa_over_time(&vec![vec![]; 10], &truth, &p).unwrap();
        assert_eq!(s.summary.total, 200.0);
        assert_eq!(s.summary.missed, 200.0);
        let perfect = trajectory_estimates(&truth.trajectories, 10);
        assert_eq!(
            gospa_over_time(&perfect, &truth, &p).unwrap().summary.total,
            0.0
        );
        assert!(gospa_over_time(&vec![vec![]; 9], &truth, &p).is_err());

        let est: Vec<Vec<DVector<f64>>> = (0..10).map(|k| vec![v(&[k as f64 * 0.3])]).collect();
        let s = gospa_over_time(&est, &truth, &p).unwrap();
        let direct: f64 = (0..10)
            .map(|k| {
                gospa(&states_at(&truth.trajectories, k + 1), &est[k], &p)
                    .unwrap()
                    .total
            })
            .sum();
        assert!((s.summary.total - direct).abs() < 1e-12);
        let mut buf = Vec::new();
        write_gospa_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,total,localisation,missed,false\n1,"));
        assert_eq!(text.lines().count(), 11);
    }

    #[test]
    fn switches() {
        let truth = vec![
            tr(1, &[0.0, 0.0, 0.0, 0.0]),
            tr(1, &[10.0, 10.0, 10.0, 10.0]),
        ];
        let est = vec![tr(1, &[0.1, 0.1, 9.9, 9.9]), tr(1, &[9.9, 9.9, 0.1, 0.1])];
        assert_eq!(track_switches(&truth, &est, 4, &plain()).unwrap(), 2);
        assert_eq!(track_switches(&truth, &truth, 4, &plain()).unwrap(), 0);
    }

    #[test]
    fn stats_examples() {
        let one = Particle {
            trajectories: vec![tr(1, &[0.0, 1.0])],
            log_weight_acc: 0.0,
        };
        let s = particle_stats(std::slice::from_ref(&one), 2).unwrap();
        assert_eq!(s.card_dist, vec![0.0, 1.0]);
        assert_eq!(s.birth_dist[0], vec![0.0, 1.0]);
        assert_eq!(s.death_dist[1], vec![0.0, 1.0]);

        let empty = Particle {
            trajectories: vec![],
            log_weight_acc: 0.0,
        };
        assert_eq!(
            particle_stats(&[empty.clone(), empty], 3)
                .unwrap()
                .card_dist,
            vec![1.0]
        );

        let two = Particle {
            trajectories: vec![tr(1, &[0.0]), tr(2, &[1.0])],
            log_weight_acc: 0.0,
        };
        assert_eq!(
            particle_stats(&[one, two], 2).unwrap().card_dist,
            vec![0.0, 0.5, 0.5]
        );
        assert!(particle_stats(&[], 2).is_err());
    }

    fn arb_set() -> impl Strategy<Value = Vec<DVector<f64>>> {
        prop::collection::vec(prop::collection::vec(-30.0f64..30.0, 2), 0..5)
            .prop_map(|s| s.into_iter().map(DVector::from_vec).collect())
    }

    proptest! {
        #[test]
        fn metric_axioms(x in arb_set(), y in arb_set(), z in arb_set()) {
            let p = plain();
            let dxy = gospa(&x, &y, &p).unwrap();
            let dyx = gospa(&y, &x, &p).unwrap();
            prop_assert!((dxy.total - dyx.total).abs() < 1e-9);
            prop_assert!((dxy.missed - dyx.false_det).abs() < 1e-9);
            prop_assert!(gospa(&x, &x, &p).unwrap().total.abs() < 1e-12);
            let dxz = gospa(&x, &z, &p).unwrap().total;
            let dzy = gospa(&z, &y, &p).unwrap().total;
            prop_assert!(dxy.total <= dxz + dzy + 1e-9);
            prop_assert!((dxy.total - (dxy.localisation + dxy.missed + dxy.false_det)).abs() < 1e-12);
            let mut yr = y.clone();
            yr.reverse();
            prop_assert!((gospa(&x, &yr, &p).unwrap().total - dxy.total).abs() < 1e-9);
        }
    }
}
