//! Track-oriented Poisson multi-Bernoulli forward filter.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::assign::{murty, CostMatrix};
use crate::error::{Error, Result};
use crate::gauss::{
    chi2_gate, factor_spd, log_sum_exp, moment_match, predict_gaussian, symmetrize,
    ComponentRecord, GaussianDensity, GaussianMixture, GaussianRecord, LinearMotionModel, LN_2PI,
};
use crate::models::{BirthModel, ClutterModel, MeasurementModel};
use crate::sim::{MeasurementSet, Models};

#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliComponent {
    pub r: f64,
    pub density: GaussianDensity,
}

impl BernoulliComponent {
    pub fn new(r: f64, density: GaussianDensity) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Contract(format!(
                "existence probability {r} outside [0, 1]"
            )));
        }
        Ok(Self { r, density })
    }
}

/// Undetected objects (PPP intensity) plus detected ones (multi-Bernoulli).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PmbDensity {
    pub ppp: GaussianMixture,
    pub bernoullis: Vec<BernoulliComponent>,
}

impl PmbDensity {
    /// Means of Bernoullis with `r >= threshold`.
    pub fn estimates(&self, threshold: f64) -> Vec<DVector<f64>> {
        self.bernoullis
            .iter()
            .filter(|b| b.r >= threshold)
            .map(|b| b.density.mean.clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterParams {
    /// Global hypotheses enumerated per association cluster.
    pub m_best: usize,
    pub gate_prob: f64,
    pub r_min: f64,
    pub w_min: f64,
    pub estimate_threshold: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            m_best: 100,
            gate_prob: 0.9999,
            r_min: 1e-4,
            w_min: 1e-5,
            estimate_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterStep {
    /// `f_{k|k}`.
    pub updated: PmbDensity,
    /// `λ^u_{k|k−1}`.
    pub predicted_ppp: GaussianMixture,
    pub estimates: Vec<DVector<f64>>,
}

/// One entry per time step `1..=K`; `steps[k − 1]` belongs to step `k`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterLog {
    pub steps: Vec<FilterStep>,
}

impl FilterLog {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    /// `f_{k|k}` for 1-based `k`.
    pub fn filtered(&self, k: usize) -> &PmbDensity {
        &self.steps[k - 1].updated
    }

    pub fn to_record(&self) -> FilterLogRecord {
        FilterLogRecord {
            steps: self
                .steps
                .iter()
                .enumerate()
                .map(|(i, s)| StepRecord {
                    k: i + 1,
                    ppp: s.updated.ppp.to_records(),
                    bernoullis: s
                        .updated
                        .bernoullis
                        .iter()
                        .map(|b| BernoulliRecord {
                            r: b.r,
                            g: (&b.density).into(),
                        })
                        .collect(),
                    predicted_ppp: s.predicted_ppp.to_records(),
                    estimates: s.estimates.iter().map(|e| e.as_slice().to_vec()).collect(),
                })
                .collect(),
        }
    }

    pub fn from_record(rec: &FilterLogRecord) -> Result<Self> {
        let mut steps = Vec::with_capacity(rec.steps.len());
        for (i, s) in rec.steps.iter().enumerate() {
            if s.k != i + 1 {
                return Err(Error::Contract(format!(
                    "filter log step {} out of order",
                    s.k
                )));
            }
            let bernoullis = s
                .bernoullis
                .iter()
                .map(|b| BernoulliComponent::new(b.r, GaussianDensity::try_from(&b.g)?))
                .collect::<Result<_>>()?;
            steps.push(FilterStep {
                updated: PmbDensity {
                    ppp: GaussianMixture::from_records(&s.ppp)?,
                    bernoullis,
                },
                predicted_ppp: GaussianMixture::from_records(&s.predicted_ppp)?,
                estimates: s
                    .estimates
                    .iter()
                    .map(|e| DVector::from_column_slice(e))
                    .collect(),
            });
        }
        Ok(Self { steps })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliRecord {
    pub r: f64,
    #[serde(flatten)]
    pub g: GaussianRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub ppp: Vec<ComponentRecord>,
    pub bernoullis: Vec<BernoulliRecord>,
    pub predicted_ppp: Vec<ComponentRecord>,
    pub estimates: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterLogRecord {
    pub steps: Vec<StepRecord>,
}

pub fn predict_pmb(pmb: &PmbDensity, m: &LinearMotionModel, b: &BirthModel) -> Result<PmbDensity> {
    if b.uniform.is_some() {
        return Err(Error::Contract(
            "the forward filter needs a Gaussian-mixture birth model".into(),
        ));
    }
    let bernoullis = pmb
        .bernoullis
        .iter()
        .map(|c| {
            Ok(BernoulliComponent {
                r: c.r * m.ps,
                density: predict_gaussian(&c.density, m)?,
            })
        })
        .collect::<Result<_>>()?;
    let mut components = Vec::with_capacity(pmb.ppp.len() + b.mixture.len());
    for (w, g) in &pmb.ppp.components {
        components.push((w * m.ps, predict_gaussian(g, m)?));
    }
    components.extend(b.mixture.components.iter().cloned());
    Ok(PmbDensity {
        ppp: GaussianMixture { components },
        bernoullis,
    })
}

/// Measurement-independent parts of a Kalman update of one prior.
struct DetectionFactor {
    z_pred: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
    prior_mean: DVector<f64>,
    gain: DMatrix<f64>,
    post_cov: DMatrix<f64>,
}

impl DetectionFactor {
    fn new(g: &GaussianDensity, mm: &MeasurementModel) -> Result<Self> {
        let hp = &mm.h * &g.cov;
        let s = symmetrize(&hp * mm.h.transpose() + &mm.r);
        let chol = factor_spd(&s, "innovation covariance")?;
        let log_det = 2.0
            * chol
                .l_dirty()
                .diagonal()
                .iter()
                .map(|d| d.ln())
                .sum::<f64>();
        let gain = chol.solve(&hp).transpose();
        let post_cov = symmetrize(&g.cov - &gain * &hp);
        Ok(Self {
            z_pred: &mm.h * &g.mean,
            chol,
            log_det,
            prior_mean: g.mean.clone(),
            gain,
            post_cov,
        })
    }

    fn smd(&self, z: &DVector<f64>) -> f64 {
        let r = z - &self.z_pred;
        r.dot(&self.chol.solve(&r)).max(0.0)
    }

    fn log_pdf(&self, z: &DVector<f64>) -> f64 {
        -0.5 * (z.len() as f64 * LN_2PI + self.log_det + self.smd(z))
    }

    fn posterior(&self, z: &DVector<f64>) -> GaussianDensity {
        GaussianDensity {
            mean: &self.prior_mean + &self.gain * (z - &self.z_pred),
            cov: self.post_cov.clone(),
        }
    }
}

fn check_measurements(z: &MeasurementSet, mm: &MeasurementModel) -> Result<()> {
    if let Some(bad) = z.iter().find(|z| z.len() != mm.meas_dim()) {
        return Err(Error::DimensionMismatch {
            context: "update_pmb",
            expected: mm.meas_dim(),
            actual: bad.len(),
        });
    }
    Ok(())
}

/// Groups measurement rows that share a gated Bernoulli column.
fn clusters(n_meas: usize, gated: &[Vec<usize>], n_bern: usize) -> Vec<Vec<usize>> {
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut parent: Vec<usize> = (0..n_meas).collect();
    let mut owner = vec![usize::MAX; n_bern];
    for (j, cols) in gated.iter().enumerate() {
        for &i in cols {
            if owner[i] == usize::MAX {
                owner[i] = j;
            } else {
                let (a, b) = (find(&mut parent, owner[i]), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n_meas];
    for j in 0..n_meas {
        let root = find(&mut parent, j);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(j);
    }
    groups
}

/// Point-object PMB update followed by track-oriented marginalization.
///
/// Measurements are split into clusters that share no gated Bernoulli; the
/// `m_best` global hypotheses are enumerated independently per cluster, which
/// is exact when `m_best` covers every hypothesis of each cluster.
pub fn update_pmb(
    pmb: &PmbDensity,
    z: &MeasurementSet,
    mm: &MeasurementModel,
    cm: &ClutterModel,
    gate: f64,
    m_best: usize,
) -> Result<PmbDensity> {
    if !(gate > 0.0) || m_best == 0 {
        return Err(Error::Contract("update needs gate > 0 and M >= 1".into()));
    }
    check_measurements(z, mm)?;
    let pd = mm.pd;
    let n = pmb.bernoullis.len();
    let m = z.len();

    let factors = pmb
        .bernoullis
        .iter()
        .map(|b| DetectionFactor::new(&b.density, mm))
        .collect::<Result<Vec<_>>>()?;
    let ppp_factors = pmb
        .ppp
        .components
        .iter()
        .map(|(_, g)| DetectionFactor::new(g, mm))
        .collect::<Result<Vec<_>>>()?;

    let miss_w: Vec<f64> = pmb
        .bernoullis
        .iter()
        .map(|b| 1.0 - b.r + b.r * (1.0 - pd))
        .collect();
    let ln_miss: Vec<f64> = miss_w
        .iter()
        .map(|w| w.max(f64::MIN_POSITIVE).ln())
        .collect();

    // Detection log-weights ln(r pD N(z; Hx, S)) for gated pairs.
    let mut gated: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut det_ln: Vec<Vec<f64>> = vec![Vec::new(); m];
    if pd > 0.0 {
        for (j, zj) in z.iter().enumerate() {
            for (i, f) in factors.iter().enumerate() {
                let r = pmb.bernoullis[i].r;
                if r > 0.0 && f.smd(zj) <= gate {
                    gated[j].push(i);
                    det_ln[j].push(r.ln() + pd.ln() + f.log_pdf(zj));
                }
            }
        }
    }

    // New Bernoulli per measurement from clutter ∪ undetected objects.
    let clutter = cm.density();
    let mut new_ln = Vec::with_capacity(m);
    let mut new_bern: Vec<Option<BernoulliComponent>> = Vec::with_capacity(m);
    for zj in z {
        let mut parts = Vec::new();
        let mut e = 0.0;
        if pd > 0.0 {
            for ((w, _), f) in pmb.ppp.components.iter().zip(&ppp_factors) {
                if *w > 0.0 && f.smd(zj) <= gate {
                    let wc = w * pd * f.log_pdf(zj).exp();
                    if wc > 0.0 {
                        e += wc;
                        parts.push((wc, f.posterior(zj)));
                    }
                }
            }
        }
        let weight = clutter + e;
        new_ln.push(weight.max(f64::MIN_POSITIVE).ln());
        new_bern.push(if e > 0.0 {
            let refs: Vec<(f64, &GaussianDensity)> = parts.iter().map(|(w, g)| (*w, g)).collect();
            Some(BernoulliComponent {
                r: (e / weight).min(1.0),
                density: moment_match(&refs)?,
            })
        } else {
            None
        });
    }

    // Marginal association probabilities: beta[i][0] missed, beta[i][1 + j] detected by j.
    let mut beta: Vec<Vec<f64>> = vec![vec![0.0; m + 1]; n];
    let mut beta_new = vec![0.0; m];
    let mut touched = vec![false; n];
    for rows in clusters(m, &gated, n) {
        let mut cols: Vec<usize> = rows
            .iter()
            .flat_map(|&j| gated[j].iter().copied())
            .collect();
        cols.sort_unstable();
        cols.dedup();
        let nc = cols.len();
        let mut c = CostMatrix::filled(rows.len(), nc + rows.len(), f64::INFINITY);
        for (rj, &j) in rows.iter().enumerate() {
            for (&i, &ln_w) in gated[j].iter().zip(&det_ln[j]) {
                let ci = cols.binary_search(&i).expect("gated column present");
                c.set(rj, ci, -(ln_w - ln_miss[i]));
            }
            c.set(rj, nc + rj, -new_ln[j]);
        }
        let hyps = murty(&c, m_best)?;
        let log_norm = log_sum_exp(hyps.iter().map(|a| -a.cost));
        for a in &hyps {
            let p = (-a.cost - log_norm).exp();
            let mut detected = vec![false; nc];
            for (rj, &col) in a.row_to_col.iter().enumerate() {
                if col < nc {
                    detected[col] = true;
                    beta[cols[col]][1 + rows[rj]] += p;
                } else {
                    beta_new[rows[rj]] += p;
                }
            }
            for (ci, d) in detected.iter().enumerate() {
                if !d {
                    beta[cols[ci]][0] += p;
                }
            }
        }
        for &i in &cols {
            touched[i] = true;
        }
    }

    let mut bernoullis = Vec::with_capacity(n + m);
    for (i, b) in pmb.bernoullis.iter().enumerate() {
        if !touched[i] {
            beta[i][0] = 1.0;
        }
        let r_miss = if miss_w[i] > 0.0 {
            b.r * (1.0 - pd) / miss_w[i]
        } else {
            0.0
        };
        let mut parts: Vec<(f64, GaussianDensity)> = Vec::new();
        let mut r = 0.0;
        let w0 = beta[i][0] * r_miss;
        if w0 > 0.0 {
            r += w0;
            parts.push((w0, b.density.clone()));
        }
        for (j, zj) in z.iter().enumerate() {
            let w = beta[i][1 + j];
            if w > 0.0 {
                r += w;
                parts.push((w, factors[i].posterior(zj)));
            }
        }
        let density = if parts.is_empty() {
            b.density.clone()
        } else {
            let refs: Vec<(f64, &GaussianDensity)> = parts.iter().map(|(w, g)| (*w, g)).collect();
            moment_match(&refs)?
        };
        bernoullis.push(BernoulliComponent {
            r: r.clamp(0.0, 1.0),
            density,
        });
    }
    for (j, nb) in new_bern.into_iter().enumerate() {
        if let Some(nb) = nb {
            bernoullis.push(BernoulliComponent {
                r: (beta_new[j] * nb.r).clamp(0.0, 1.0),
                density: nb.density,
            });
        }
    }
    Ok(PmbDensity {
        ppp: pmb.ppp.scaled(1.0 - pd),
        bernoullis,
    })
}

pub fn prune_pmb(pmb: &PmbDensity, r_min: f64, w_min: f64) -> PmbDensity {
    PmbDensity {
        ppp: GaussianMixture {
            components: pmb
                .ppp
                .components
                .iter()
                .filter(|(w, _)| *w >= w_min)
                .cloned()
                .collect(),
        },
        bernoullis: pmb
            .bernoullis
            .iter()
            .filter(|b| b.r >= r_min)
            .cloned()
            .collect(),
    }
}

/// Runs predict → update → prune over `measurements`.
///
/// `models.initial_ppp` is taken as the predicted undetected intensity at the
/// first step; no prediction is applied before step 1.
pub fn run_forward(
    measurements: &[MeasurementSet],
    models: &Models,
    params: &FilterParams,
) -> Result<FilterLog> {
    let gate = chi2_gate(params.gate_prob, models.measurement.meas_dim())?;
    let mut steps = Vec::with_capacity(measurements.len());
    let mut current: Option<PmbDensity> = None;
    for z in measurements {
        let predicted = match &current {
            None => PmbDensity {
                ppp: models.initial_ppp.clone(),
                bernoullis: vec![],
            },
            Some(prev) => predict_pmb(prev, &models.motion, &models.birth)?,
        };
        let updated = update_pmb(
            &predicted,
            z,
            &models.measurement,
            &models.clutter,
            gate,
            params.m_best,
        )?;
        let updated = prune_pmb(&updated, params.r_min, params.w_min);
        steps.push(FilterStep {
            estimates: updated.estimates(params.estimate_threshold),
            predicted_ppp: predicted.ppp,
            updated: updated.clone(),
        });
        current = Some(updated);
    }
    Ok(FilterLog { steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Scenario, ScenarioConfig};

    fn g1(mean: f64, var: f64) -> GaussianDensity {
        GaussianDensity::from_slices(&[mean], &[var]).unwrap()
    }

    fn scalar_models(pd: f64, rate: f64) -> (MeasurementModel, ClutterModel) {
        (
            MeasurementModel::new(
                DMatrix::from_element(1, 1, 1.0),
                DMatrix::from_element(1, 1, 1.0),
                pd,
            )
            .unwrap(),
            ClutterModel::new(rate, vec![(-50.0, 50.0)]).unwrap(),
        )
    }

    fn bern(r: f64, g: GaussianDensity) -> BernoulliComponent {
        BernoulliComponent::new(r, g).unwrap()
    }

    #[test]
    fn predict_examples() {
        let m = LinearMotionModel::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            0.5,
        )
        .unwrap();
        let birth = BirthModel::gaussian(GaussianMixture::single(0.05, g1(0.0, 1.0)));
        let pmb = PmbDensity {
            ppp: GaussianMixture::empty(),
            bernoullis: vec![bern(0.6, g1(0.0, 1.0))],
        };
        let p = predict_pmb(&pmb, &m, &birth).unwrap();
        assert!((p.bernoullis[0].r - 0.3).abs() < 1e-15);
        assert_eq!(p.ppp.len(), 1);
        assert_eq!(p.ppp.components[0].0, 0.05);

        let m98 = LinearMotionModel { ps: 0.98, ..m };
        let pmb = PmbDensity {
            ppp: GaussianMixture::single(1.0, g1(0.0, 1.0)),
            bernoullis: vec![],
        };
        let w: Vec<f64> = predict_pmb(&pmb, &m98, &birth)
            .unwrap()
            .ppp
            .components
            .iter()
            .map(|c| c.0)
            .collect();
        assert_eq!(w, vec![0.98, 0.05]);
    }

    #[test]
    fn missed_detection_only() {
        let (mm, cm) = scalar_models(0.5, 1.0);
        let pmb = PmbDensity {
            ppp: GaussianMixture::single(2.0, g1(0.0, 1.0)),
            bernoullis: vec![bern(0.5, g1(0.0, 1.0))],
        };
        let out = update_pmb(
            &pmb,
            &vec![DVector::from_element(1, 40.0)],
            &mm,
            &cm,
            9.0,
            10,
        )
        .unwrap();
        assert!((out.bernoullis[0].r - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(out.ppp.components[0].0, 1.0);

        let empty = update_pmb(&pmb, &vec![], &mm, &cm, 9.0, 10).unwrap();
        assert_eq!(empty.bernoullis.len(), 1);
        assert!((empty.bernoullis[0].r - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(empty.bernoullis[0].density, pmb.bernoullis[0].density);
    }

    #[test]
    fn two_hypothesis_marginals() {
        // One Bernoulli, one measurement, no undetected objects: either the
        // Bernoulli generated z, or z is clutter and the Bernoulli was missed.
        let (mm, cm) = scalar_models(0.8, 2.0);
        let (r, pd, lc) = (0.7, 0.8, cm.density());
        let prior = g1(0.0, 2.0);
        let zv = 0.5;
        let pmb = PmbDensity {
            ppp: GaussianMixture::empty(),
            bernoullis: vec![bern(r, prior.clone())],
        };
        let out = update_pmb(
            &pmb,
            &vec![DVector::from_element(1, zv)],
            &mm,
            &cm,
            100.0,
            10,
        )
        .unwrap();
        let lik = (-(zv * zv) / 6.0).exp() / (2.0 * std::f64::consts::PI * 3.0).sqrt();
        let h_det = r * pd * lik;
        let w0 = 1.0 - r + r * (1.0 - pd);
        let h_miss = w0 * lc;
        let p_det = h_det / (h_det + h_miss);
        let r_miss = r * (1.0 - pd) / w0;
        let want_r = p_det + (1.0 - p_det) * r_miss;
        assert_eq!(out.bernoullis.len(), 1, "no PPP means no new Bernoulli");
        assert!((out.bernoullis[0].r - want_r).abs() < 1e-12);
        // Mean: detected posterior mean 2/3·z weighted against the prior mean 0.
        let det_mean = 2.0 / 3.0 * zv;
        let want_mean = p_det * det_mean / want_r;
        assert!((out.bernoullis[0].density.mean[0] - want_mean).abs() < 1e-12);
    }

    #[test]
    fn new_bernoulli_from_ppp() {
        let (mm, cm) = scalar_models(0.9, 1.0);
        let pmb = PmbDensity {
            ppp: GaussianMixture::single(0.5, g1(0.0, 4.0)),
            bernoullis: vec![],
        };
        let out = update_pmb(
            &pmb,
            &vec![DVector::from_element(1, 1.0)],
            &mm,
            &cm,
            100.0,
            5,
        )
        .unwrap();
        let e = 0.5 * 0.9 * (-(1.0f64) / 10.0).exp() / (2.0 * std::f64::consts::PI * 5.0).sqrt();
        assert!((out.bernoullis[0].r - e / (e + cm.density())).abs() < 1e-12);
        assert!((out.bernoullis[0].density.mean[0] - 0.8).abs() < 1e-12);
        assert!((out.ppp.components[0].0 - 0.05).abs() < 1e-15);
    }

    #[test]
    fn marginals_stay_normalized_under_contention() {
        // Two Bernoullis competing for two measurements, plus PPP support.
        let (mm, cm) = scalar_models(0.9, 3.0);
        let pmb = PmbDensity {
            ppp: GaussianMixture::single(1.0, g1(0.0, 10.0)),
            bernoullis: vec![bern(0.9, g1(0.0, 1.0)), bern(0.6, g1(1.0, 1.0))],
        };
        let z = vec![DVector::from_element(1, 0.2), DVector::from_element(1, 0.9)];
        let out = update_pmb(&pmb, &z, &mm, &cm, 1e3, 100).unwrap();
        assert_eq!(out.bernoullis.len(), 4);
        for b in &out.bernoullis {
            assert!((0.0..=1.0).contains(&b.r));
        }
    }

    #[test]
    fn clusters_split_independent_rows() {
        let gated = vec![vec![0], vec![], vec![0, 1], vec![2]];
        assert_eq!(clusters(4, &gated, 3), vec![vec![0, 2], vec![1], vec![3]]);
    }

    #[test]
    fn prune_examples() {
        let pmb = PmbDensity {
            ppp: GaussianMixture::new(vec![(0.5, g1(0.0, 1.0)), (1e-6, g1(1.0, 1.0))]).unwrap(),
            bernoullis: vec![bern(5e-5, g1(0.0, 1.0)), bern(0.2, g1(0.0, 1.0))],
        };
        let p = prune_pmb(&pmb, 1e-4, 1e-4);
        assert_eq!(p.bernoullis.len(), 1);
        assert_eq!(
            p.ppp.components.iter().map(|c| c.0).collect::<Vec<_>>(),
            vec![0.5]
        );
        assert_eq!(prune_pmb(&pmb, 0.0, 0.0), pmb);
    }

    fn kalman_scenario() -> Scenario {
        let text = r#"
K = 15
seed = 7
[motion]
model = "cv"
ts = 1.0
sigma_q = 0.5
ps = 0.99
[measurement]
model = "position"
sigma_r = 1.0
pd = 1.0
[clutter]
rate = 0.0
region = [[-100.0, 100.0], [-100.0, 100.0]]
[birth]
weights = [0.1]
means = [[0.0, 1.0, 0.0, 1.0]]
cov_diags = [[100.0, 4.0, 100.0, 4.0]]
[schedule]
births = [1]
deaths = [15]
init_means = [[2.0, 1.0, -3.0, 0.5]]
"#;
        Scenario::generate(&ScenarioConfig::from_toml(text).unwrap()).unwrap()
    }

    #[test]
    fn matches_kalman_filter_single_object() {
        let sc = kalman_scenario();
        let log = run_forward(&sc.measurements, &sc.models, &FilterParams::default()).unwrap();
        assert_eq!(log.horizon(), 15);
        let mm = &sc.models.measurement;
        let mo = &sc.models.motion;
        let mut kf = sc.models.birth.mixture.components[0].1.clone();
        for (k, z) in sc.measurements.iter().enumerate() {
            if k > 0 {
                kf = predict_gaussian(&kf, mo).unwrap();
            }
            assert_eq!(z.len(), 1);
            kf = DetectionFactor::new(&kf, mm).unwrap().posterior(&z[0]);
            let step = &log.steps[k];
            let tracks: Vec<_> = step
                .updated
                .bernoullis
                .iter()
                .filter(|b| b.r > 0.5)
                .collect();
            assert_eq!(tracks.len(), 1);
            assert!(tracks[0].r > 0.99);
            assert!((&tracks[0].density.mean - &kf.mean).amax() < 1e-8);
            assert!((&tracks[0].density.cov - &kf.cov).amax() < 1e-8);
        }
    }

    #[test]
    fn empty_horizon_and_log_roundtrip() {
        let sc = kalman_scenario();
        assert_eq!(
            run_forward(&[], &sc.models, &FilterParams::default())
                .unwrap()
                .horizon(),
            0
        );
        let log = run_forward(&sc.measurements, &sc.models, &FilterParams::default()).unwrap();
        let json = serde_json::to_string(&log.to_record()).unwrap();
        let back: FilterLogRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(FilterLog::from_record(&back).unwrap(), log);
    }

    #[test]
    fn scenario2_runs() {
        let cfg =
            ScenarioConfig::from_toml(include_str!("../../../configs/scenario2.toml")).unwrap();
        let sc = Scenario::generate(&cfg).unwrap();
        let params = FilterParams {
            m_best: 20,
            ..FilterParams::default()
        };
        let log = run_forward(&sc.measurements, &sc.models, &params).unwrap();
        assert_eq!(log.horizon(), 20);
        for s in &log.steps {
            assert!(s
                .updated
                .bernoullis
                .iter()
                .all(|b| (0.0..=1.0).contains(&b.r)));
        }
    }
}
