//! Small hand-built smoothing problems with point-mass or near-point-mass
//! filtering densities, used by the oracle command and the test suites.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::gauss::{GaussianDensity, GaussianMixture, LinearMotionModel};
use crate::models::{BirthModel, UniformBox};
use crate::pmb::{BernoulliComponent, FilterLog, FilterStep, PmbDensity};

/// A filtering-density sequence together with the models the backward pass needs.
#[derive(Debug, Clone)]
pub struct Problem {
    pub log: FilterLog,
    pub birth: BirthModel,
    pub motion: LinearMotionModel,
}

fn step_from(bernoullis: Vec<BernoulliComponent>, ppp: GaussianMixture) -> FilterStep {
    let updated = PmbDensity { ppp, bernoullis };
    FilterStep {
        estimates: updated.estimates(0.5),
        predicted_ppp: GaussianMixture::empty(),
        updated,
    }
}

fn certain(x: &[f64]) -> Result<BernoulliComponent> {
    let n = x.len();
    BernoulliComponent::new(
        1.0,
        GaussianDensity::new(DVector::from_column_slice(x), DMatrix::zeros(n, n))?,
    )
}

/// 1-D nearly-constant-velocity model with `σ² = 1/900` on the unit interval.
pub fn crossing_motion() -> Result<LinearMotionModel> {
    let q = DMatrix::from_row_slice(2, 2, &[1.0 / 3.0, 0.5, 0.5, 1.0]) / 900.0;
    let f = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    LinearMotionModel::new(f, q, 0.95)
}

/// `0.1 × Uniform` over position `[−1, 1]` and velocity `[−1, 1]`.
pub fn crossing_birth() -> Result<BirthModel> {
    Ok(BirthModel::uniform(UniformBox::new(
        0.1,
        vec![-1.0, -1.0],
        vec![1.0, 1.0],
    )?))
}

/// Noise-free `[p, v]` states with `p_{k+1} = p_k + v_k`.
fn integrate(p1: f64, v: &[f64]) -> Vec<[f64; 2]> {
    let mut p = p1;
    v.iter()
        .map(|&vk| {
            let s = [p, vk];
            p += vk;
            s
        })
        .collect()
}

/// Two objects approach, pause for one step and then cross, over `K = 8`.
/// The filtering density at every step is a pair of certain point masses.
///
/// Each object stops abruptly before its pause: a velocity drop of `dv`
/// has squared Mahalanobis distance `3600 dv²` under this model, so the
/// drops (0.079 and 0.073) make "the track ended and a new one was born"
/// a plausible but less likely explanation than one unbroken track.
pub fn crossing() -> Result<Problem> {
    let a = integrate(-0.45, &[0.079, 0.079, 0.079, 0.0, 0.05, 0.1, 0.15, 0.15]);
    let b = integrate(
        0.42,
        &[-0.073, -0.073, -0.073, 0.0, -0.05, -0.1, -0.15, -0.15],
    );
    let steps = a
        .iter()
        .zip(&b)
        .map(|(xa, xb)| {
            Ok(step_from(
                vec![certain(xa)?, certain(xb)?],
                GaussianMixture::empty(),
            ))
        })
        .collect::<Result<_>>()?;
    Ok(Problem {
        log: FilterLog { steps },
        birth: crossing_birth()?,
        motion: crossing_motion()?,
    })
}

/// The first two steps of [`crossing`]: two certain point masses per step.
pub fn pair() -> Result<Problem> {
    let mut p = crossing()?;
    p.log.steps.truncate(2);
    Ok(p)
}

/// Near-point-mass toy problem over three steps with at most two
/// Bernoullis per step, an undetected-object atom at the first two steps
/// and a single-component Gaussian birth. `sigma` is the standard
/// deviation of every filtering Gaussian.
pub fn toy(sigma: f64) -> Result<Problem> {
    let s2 = sigma * sigma;
    let g = |x: f64| GaussianDensity::from_slices(&[x], &[s2]);
    let bern = |r: f64, x: f64| -> Result<BernoulliComponent> { BernoulliComponent::new(r, g(x)?) };
    let steps = vec![
        step_from(
            vec![bern(0.9, 0.0)?, bern(0.6, 2.0)?],
            GaussianMixture::new(vec![(0.3, g(1.0)?)])?,
        ),
        step_from(
            vec![bern(0.95, 0.3)?, bern(0.7, 2.2)?],
            GaussianMixture::new(vec![(0.3, g(-1.0)?)])?,
        ),
        step_from(
            vec![bern(0.8, 0.5)?, bern(0.6, 1.5)?],
            GaussianMixture::empty(),
        ),
    ];
    Ok(Problem {
        log: FilterLog { steps },
        birth: BirthModel::gaussian(GaussianMixture::single(
            0.2,
            GaussianDensity::from_slices(&[0.0], &[4.0])?,
        )),
        motion: LinearMotionModel::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            0.9,
        )?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::TransitionFactor;

    #[test]
    fn crossing_geometry() {
        let p = crossing().unwrap();
        assert_eq!(p.log.horizon(), 8);
        let xa = |k: usize| p.log.filtered(k).bernoullis[0].density.mean.clone();
        let xb = |k: usize| p.log.filtered(k).bernoullis[1].density.mean.clone();
        assert!(
            xa(7)[0] < xb(7)[0] && xa(8)[0] > xb(8)[0],
            "objects cross between 7 and 8"
        );
        assert_eq!(xa(4)[0], xa(5)[0], "pause");
        for k in 1..=8 {
            for x in [xa(k), xb(k)] {
                assert!(x.iter().all(|v| v.abs() <= 1.0));
            }
        }
        let point = |x: DVector<f64>| GaussianDensity::new(x, DMatrix::zeros(2, 2)).unwrap();
        let smd = |x, y| {
            TransitionFactor::new(&point(x), &p.motion)
                .unwrap()
                .smd(&y)
                .unwrap()
        };
        assert!((smd(xa(3), xa(4)) - 3600.0 * 0.079f64.powi(2)).abs() < 1e-6);
        assert!((smd(xb(3), xb(4)) - 3600.0 * 0.073f64.powi(2)).abs() < 1e-6);
    }

    #[test]
    fn toy_shape() {
        let p = toy(1e-4).unwrap();
        assert_eq!(p.log.horizon(), 3);
        assert!(p.log.steps.iter().all(|s| s.updated.bernoullis.len() <= 2));
        assert_eq!(p.birth.mixture.len(), 1);
    }
}
