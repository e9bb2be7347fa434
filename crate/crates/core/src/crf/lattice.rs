//! Scored tag lattice for one sentence.

use super::{CrfError, CrfModel};

/// Emission, transition, and boundary scores for one sentence. Path score is
/// `begin[y0] + Σ_t emission[t][y_t] + Σ_t transition[y_{t-1}][y_t] + end[y_last]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    len: usize,
    num_labels: usize,
    emissions: Vec<f64>,
    transitions: Vec<f64>,
    begin: Vec<f64>,
    end: Vec<f64>,
}

impl Lattice {
    /// All-zero lattice.
    pub fn zeros(len: usize, num_labels: usize) -> Self {
        Self {
            len,
            num_labels,
            emissions: vec![0.0; len * num_labels],
            transitions: vec![0.0; num_labels * num_labels],
            begin: vec![0.0; num_labels],
            end: vec![0.0; num_labels],
        }
    }

    /// Build from raw score blocks; shapes are checked, values must be finite.
    pub fn from_parts(
        len: usize,
        num_labels: usize,
        emissions: Vec<f64>,
        transitions: Vec<f64>,
        begin: Vec<f64>,
        end: Vec<f64>,
    ) -> Result<Self, CrfError> {
        if len == 0 {
            return Err(CrfError::EmptyLattice);
        }
        if emissions.len() != len * num_labels
            || transitions.len() != num_labels * num_labels
            || begin.len() != num_labels
            || end.len() != num_labels
        {
            return Err(CrfError::DimensionMismatch(format!(
                "lattice blocks do not match {len} positions x {num_labels} labels"
            )));
        }
        let finite = emissions
            .iter()
            .chain(&transitions)
            .chain(&begin)
            .chain(&end)
            .all(|v| v.is_finite());
        if !finite {
            return Err(CrfError::DimensionMismatch(
                "lattice scores must be finite".into(),
            ));
        }
        Ok(Self {
            len,
            num_labels,
            emissions,
            transitions,
            begin,
            end,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    #[inline]
    pub fn emission(&self, position: usize, label: usize) -> f64 {
        self.emissions[position * self.num_labels + label]
    }

    pub fn set_emission(&mut self, position: usize, label: usize, score: f64) {
        self.emissions[position * self.num_labels + label] = score;
    }

    #[inline]
    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.transitions[from * self.num_labels + to]
    }

    pub fn begin(&self, label: usize) -> f64 {
        self.begin[label]
    }

    pub fn end(&self, label: usize) -> f64 {
        self.end[label]
    }

    /// Score of one complete label path.
    pub fn path_score(&self, path: &[usize]) -> f64 {
        debug_assert_eq!(path.len(), self.len);
        let mut score = self.begin[path[0]] + self.emission(0, path[0]);
        for t in 1..path.len() {
            score += self.transition(path[t - 1], path[t]) + self.emission(t, path[t]);
        }
        score + self.end[path[path.len() - 1]]
    }
}

/// Score a featurized sentence against the model:
/// `emission[t][y] = Σ_{f ∈ features[t]} unary[f][y]`.
pub fn score_lattice(features: &[Vec<u32>], model: &CrfModel) -> Result<Lattice, CrfError> {
    if features.is_empty() {
        return Err(CrfError::EmptyLattice);
    }
    let labels = model.num_labels();
    let num_features = model.num_features() as u32;
    let mut emissions = vec![0.0; features.len() * labels];
    for (t, feats) in features.iter().enumerate() {
        let row = &mut emissions[t * labels..(t + 1) * labels];
        for &f in feats {
            if f >= num_features {
                return Err(CrfError::DimensionMismatch(format!(
                    "feature id {f} out of range for index of size {num_features}"
                )));
            }
            let weights = &model.unary[f as usize * labels..(f as usize + 1) * labels];
            for (slot, w) in row.iter_mut().zip(weights) {
                *slot += w;
            }
        }
    }
    Lattice::from_parts(
        features.len(),
        labels,
        emissions,
        model.transitions.clone(),
        model.begin.clone(),
        model.end.clone(),
    )
}
