use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A trajectory `(t, x^{1:ν})`: birth time step `t` (1-based) and the state
/// sequence over `t..=t+ν−1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: usize,
    pub states: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn new(t: usize, states: Vec<DVector<f64>>) -> Result<Self> {
        if t == 0 {
            return Err(Error::Contract("trajectory birth time must be >= 1".into()));
        }
        if states.is_empty() {
            return Err(Error::Contract(
                "trajectory must hold at least one state".into(),
            ));
        }
        let n = states[0].len();
        if let Some(bad) = states.iter().find(|s| s.len() != n) {
            return Err(Error::DimensionMismatch {
                context: "Trajectory::new",
                expected: n,
                actual: bad.len(),
            });
        }
        Ok(Self { t, states })
    }

    pub fn single(t: usize, state: DVector<f64>) -> Self {
        Self {
            t,
            states: vec![state],
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Last time step the object is alive.
    pub fn end(&self) -> usize {
        self.t + self.states.len() - 1
    }

    pub fn alive_at(&self, k: usize) -> bool {
        self.t <= k && k <= self.end()
    }

    /// State at time `k`, if alive.
    pub fn state_at(&self, k: usize) -> Option<&DVector<f64>> {
        self.alive_at(k).then(|| &self.states[k - self.t])
    }

    /// Returns a copy with `head` prepended, born one step earlier.
    pub fn prepend(&self, head: DVector<f64>) -> Self {
        let mut states = Vec::with_capacity(self.states.len() + 1);
        states.push(head);
        states.extend(self.states.iter().cloned());
        Self {
            t: self.t - 1,
            states,
        }
    }
}

/// Set of object states at time `k` from a set of trajectories.
pub fn states_at(trajectories: &[Trajectory], k: usize) -> Vec<DVector<f64>> {
    trajectories
        .iter()
        .filter_map(|tr| tr.state_at(k).cloned())
        .collect()
}

/// Wire form `{t, states: [[...]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: usize,
    pub states: Vec<Vec<f64>>,
}

impl From<&Trajectory> for TrajectoryRecord {
    fn from(tr: &Trajectory) -> Self {
        Self {
            t: tr.t,
            states: tr.states.iter().map(|s| s.as_slice().to_vec()).collect(),
        }
    }
}

impl TryFrom<&TrajectoryRecord> for Trajectory {
    type Error = Error;

    fn try_from(rec: &TrajectoryRecord) -> Result<Self> {
        Trajectory::new(
            rec.t,
            rec.states
                .iter()
                .map(|s| DVector::from_column_slice(s))
                .collect(),
        )
    }
}
