use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::LearningError;

/// Labelled samples stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f32>,
    labels: Vec<usize>,
    dim: usize,
    class_count: usize,
}

impl Dataset {
    pub fn new(
        features: Vec<f32>,
        labels: Vec<usize>,
        dim: usize,
        class_count: usize,
    ) -> Result<Self, LearningError> {
        if labels.is_empty() {
            return Err(LearningError::EmptyDataset);
        }
        if dim == 0 || class_count == 0 {
            return Err(LearningError::InvalidConfig(
                "dataset needs a positive feature dimension and class count".into(),
            ));
        }
        if features.len() != labels.len() * dim {
            return Err(LearningError::DimensionMismatch {
                expected: labels.len() * dim,
                got: features.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(LearningError::InvalidConfig(format!(
                "label {bad} outside [0, {class_count})"
            )));
        }
        Ok(Self {
            features,
            labels,
            dim,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn sample(&self, i: usize) -> &[f32] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Per-class sample counts.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Copy of the rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, LearningError> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.sample(i));
            labels.push(self.labels[i]);
        }
        Self::new(features, labels, self.dim, self.class_count)
    }
}

/// Gaussian class blobs: each class has a random mean, samples add unit noise.
#[derive(Debug, Clone)]
pub struct SyntheticBlobs {
    means: Vec<Vec<f64>>,
    seed: u64,
}

impl SyntheticBlobs {
    /// Class means are drawn from `N(0, separation^2)` per coordinate.
    pub fn new(classes: usize, dim: usize, separation: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, separation).expect("separation must be finite and >= 0");
        let means = (0..classes)
            .map(|_| (0..dim).map(|_| normal.sample(&mut rng)).collect())
            .collect();
        Self { means, seed }
    }

    /// `per_class` samples of every class; distinct `stream`s give independent
    /// noise around the same class means (e.g. train vs test).
    pub fn sample(&self, per_class: usize, stream: u64) -> Result<Dataset, LearningError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream + 1);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let dim = self.means.first().map_or(0, Vec::len);
        let classes = self.means.len();
        let mut features = Vec::with_capacity(classes * per_class * dim);
        let mut labels = Vec::with_capacity(classes * per_class);
        // Interleaved so that any prefix stays close to balanced.
        for _ in 0..per_class {
            for (class, mean) in self.means.iter().enumerate() {
                features.extend(mean.iter().map(|&m| (m + noise.sample(&mut rng)) as f32));
                labels.push(class);
            }
        }
        Dataset::new(features, labels, dim, classes)
    }
}

/// Balanced, seed-deterministic Gaussian-blob dataset with well separated classes.
pub fn synth_dataset(
    classes: usize,
    per_class: usize,
    dim: usize,
    seed: u64,
) -> Result<Dataset, LearningError> {
    SyntheticBlobs::new(classes, dim, 3.0, seed).sample(per_class, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synth_is_deterministic_and_balanced() {
        let a = synth_dataset(10, 100, 20, 42).unwrap();
        let b = synth_dataset(10, 100, 20, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1000);
        assert_eq!(a.class_histogram(), vec![100; 10]);
        assert_ne!(a, synth_dataset(10, 100, 20, 43).unwrap());
    }

    #[test]
    fn synth_minimal() {
        let d = synth_dataset(2, 1, 1, 0).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.dim(), 1);
    }

    #[test]
    fn streams_share_means() {
        let blobs = SyntheticBlobs::new(3, 4, 3.0, 7);
        let train = blobs.sample(5, 0).unwrap();
        let test = blobs.sample(5, 1).unwrap();
        assert_ne!(train, test);
        assert_eq!(train.labels(), test.labels());
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        assert!(matches!(
            Dataset::new(vec![0.0; 5], vec![0, 1], 3, 2),
            Err(LearningError::DimensionMismatch { .. })
        ));
        assert!(Dataset::new(vec![0.0; 2], vec![0, 2], 1, 2).is_err());
        assert!(matches!(
            Dataset::new(vec![], vec![], 1, 2),
            Err(LearningError::EmptyDataset)
        ));
    }
}
