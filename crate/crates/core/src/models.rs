//! Birth, measurement and clutter model containers.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::gauss::{log_gaussian_pdf, symmetrize, GaussianMixture};

/// Constant-density intensity over an axis-aligned box of the state space.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformBox {
    pub weight: f64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl UniformBox {
    pub fn new(weight: f64, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                context: "UniformBox::new",
                expected: lo.len(),
                actual: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(b > a)) {
            return Err(Error::Contract(
                "uniform box must have positive volume".into(),
            ));
        }
        if !(weight >= 0.0) {
            return Err(Error::Contract("uniform box weight must be >= 0".into()));
        }
        Ok(Self { weight, lo, hi })
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.len() == self.lo.len()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        if self.contains(x) {
            self.weight / self.volume()
        } else {
            0.0
        }
    }
}

/// Poisson birth intensity `λ^B`, time-invariant. The optional uniform part is
/// only usable by the backward smoother and the exact oracle; the forward
/// filter needs a pure Gaussian mixture.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BirthModel {
    pub mixture: GaussianMixture,
    pub uniform: Option<UniformBox>,
}

impl BirthModel {
    pub fn gaussian(mixture: GaussianMixture) -> Self {
        Self {
            mixture,
            uniform: None,
        }
    }

    pub fn uniform(b: UniformBox) -> Self {
        Self {
            mixture: GaussianMixture::empty(),
            uniform: Some(b),
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<f64> {
        let u = self.uniform.as_ref().map_or(0.0, |b| b.eval(x));
        Ok(self.mixture.eval(x)? + u)
    }

    pub fn log_eval(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.eval(x)?.ln())
    }

    /// `⟨λ^B, 1⟩`.
    pub fn total_weight(&self) -> f64 {
        self.mixture.total_weight() + self.uniform.as_ref().map_or(0.0, |b| b.weight)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    pub h: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub pd: f64,
}

impl MeasurementModel {
    pub fn new(h: DMatrix<f64>, r: DMatrix<f64>, pd: f64) -> Result<Self> {
        if r.nrows() != h.nrows() || !r.is_square() {
            return Err(Error::DimensionMismatch {
                context: "MeasurementModel::new",
                expected: h.nrows(),
                actual: r.nrows(),
            });
        }
        if !(0.0..=1.0).contains(&pd) {
            return Err(Error::Contract(format!(
                "detection probability {pd} outside [0, 1]"
            )));
        }
        let r = symmetrize(r);
        if r.clone().cholesky().is_none() {
            return Err(Error::Contract(
                "measurement noise covariance must be PD".into(),
            ));
        }
        Ok(Self { h, r, pd })
    }

    /// Position-only observation of a `[p1, v1, p2, v2, ...]` state.
    pub fn position(dims: usize, sigma_r: f64, pd: f64) -> Result<Self> {
        let h1 = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let eye = DMatrix::<f64>::identity(dims, dims);
        Self::new(eye.kronecker(&h1), eye * (sigma_r * sigma_r), pd)
    }

    pub fn meas_dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.h.ncols()
    }
}

/// Poisson clutter, uniform over an axis-aligned region of measurement space.
#[derive(Debug, Clone, PartialEq)]
pub struct ClutterModel {
    pub rate: f64,
    pub region: Vec<(f64, f64)>,
}

impl ClutterModel {
    pub fn new(rate: f64, region: Vec<(f64, f64)>) -> Result<Self> {
        if !(rate >= 0.0) {
            return Err(Error::Contract(format!("clutter rate {rate} is negative")));
        }
        if region.is_empty() || region.iter().any(|(a, b)| !(b > a)) {
            return Err(Error::Contract(
                "clutter region must have positive volume".into(),
            ));
        }
        Ok(Self { rate, region })
    }

    pub fn volume(&self) -> f64 {
        self.region.iter().map(|(a, b)| b - a).product()
    }

    /// Clutter intensity per unit volume, `λ^C / V`.
    pub fn density(&self) -> f64 {
        self.rate / self.volume()
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        DVector::from_iterator(
            self.region.len(),
            self.region.iter().map(|(a, b)| rng.gen_range(*a..*b)),
        )
    }
}

/// `ln N(z; H x, H P Hᵀ + R)` for a Gaussian prior.
pub fn log_predicted_likelihood(
    z: &DVector<f64>,
    prior: &crate::gauss::GaussianDensity,
    mm: &MeasurementModel,
) -> Result<f64> {
    let g = crate::gauss::GaussianDensity {
        mean: &mm.h * &prior.mean,
        cov: symmetrize(&mm.h * &prior.cov * mm.h.transpose() + &mm.r),
    };
    log_gaussian_pdf(z, &g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::GaussianDensity;

    #[test]
    fn uniform_birth_density() {
        let b = UniformBox::new(0.1, vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let bm = BirthModel::uniform(b);
        assert_eq!(bm.total_weight(), 0.1);
        assert!((bm.eval(&DVector::from_vec(vec![0.0, 0.5])).unwrap() - 0.025).abs() < 1e-15);
        assert_eq!(bm.eval(&DVector::from_vec(vec![2.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn position_model_shape() {
        let mm = MeasurementModel::position(2, 1.0, 0.7).unwrap();
        assert_eq!(mm.h.shape(), (2, 4));
        assert_eq!(mm.h[(1, 2)], 1.0);
        assert_eq!(mm.h[(1, 3)], 0.0);
        assert!(MeasurementModel::position(2, 1.0, 1.5).is_err());
    }

    #[test]
    fn clutter_density() {
        let cm = ClutterModel::new(30.0, vec![(-100.0, 100.0), (-100.0, 100.0)]).unwrap();
        assert_eq!(cm.density(), 30.0 / 40_000.0);
        assert!(ClutterModel::new(1.0, vec![(1.0, 1.0)]).is_err());
        assert!(ClutterModel::new(-1.0, vec![(0.0, 1.0)]).is_err());
    }

    #[test]
    fn predicted_likelihood_scalar() {
        let mm = MeasurementModel::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            1.0,
        )
        .unwrap();
        let prior = GaussianDensity::from_slices(&[0.0], &[1.0]).unwrap();
        let l = log_predicted_likelihood(&DVector::from_vec(vec![0.0]), &prior, &mm).unwrap();
        assert!((l + 0.5 * (4.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
    }
}
