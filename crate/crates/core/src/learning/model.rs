//! Multinomial logistic regression. Parameters are laid out as the
//! class-major weight matrix (`classes x dim`) followed by `classes` biases.

use super::{Dataset, LearningError};

/// Flat model parameters tagged with the global epoch they derive from.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub source_epoch: u64,
}

impl ParamVector {
    pub fn new(values: Vec<f64>, source_epoch: u64) -> Self {
        Self {
            values,
            source_epoch,
        }
    }

    pub fn zeros(d: usize) -> Self {
        Self::new(vec![0.0; d], 0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn with_epoch(mut self, epoch: u64) -> Self {
        self.source_epoch = epoch;
        self
    }
}

/// Number of parameters for `dim` features and `classes` outputs.
pub fn param_count(dim: usize, classes: usize) -> usize {
    classes * (dim + 1)
}

pub(crate) fn check_dims(params: &[f64], data: &Dataset) -> Result<(), LearningError> {
    let expected = param_count(data.dim(), data.class_count());
    if params.len() != expected {
        return Err(LearningError::DimensionMismatch {
            expected,
            got: params.len(),
        });
    }
    if data.is_empty() {
        return Err(LearningError::EmptyDataset);
    }
    Ok(())
}

fn logits(params: &[f64], dim: usize, x: &[f32], out: &mut [f64]) {
    let classes = out.len();
    let bias = &params[classes * dim..];
    for (c, z) in out.iter_mut().enumerate() {
        let w = &params[c * dim..(c + 1) * dim];
        *z = bias[c]
            + w.iter()
                .zip(x)
                .map(|(&wi, &xi)| wi * xi as f64)
                .sum::<f64>();
    }
}

/// Turns logits into probabilities in place, returning the log-partition.
fn softmax_in_place(z: &mut [f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
    max + sum.ln()
}

/// Class probabilities for one feature vector.
pub fn predict_proba(params: &ParamVector, x: &[f32], classes: usize) -> Vec<f64> {
    let mut z = vec![0.0; classes];
    logits(&params.values, x.len(), x, &mut z);
    softmax_in_place(&mut z);
    z
}

/// Mean softmax cross-entropy over the batch.
pub fn model_loss(params: &ParamVector, batch: &Dataset) -> Result<f64, LearningError> {
    check_dims(&params.values, batch)?;
    let mut z = vec![0.0; batch.class_count()];
    let mut total = 0.0;
    for i in 0..batch.len() {
        logits(&params.values, batch.dim(), batch.sample(i), &mut z);
        let y = batch.labels()[i];
        let zy = z[y];
        total += softmax_in_place(&mut z) - zy;
    }
    Ok(total / batch.len() as f64)
}

/// Adds the mean cross-entropy gradient over `indices` into `grad`.
pub(crate) fn accumulate_data_gradient(
    params: &[f64],
    data: &Dataset,
    indices: &[usize],
    grad: &mut [f64],
    scratch: &mut [f64],
) {
    let dim = data.dim();
    let classes = data.class_count();
    let scale = 1.0 / indices.len() as f64;
    for &i in indices {
        let x = data.sample(i);
        logits(params, dim, x, scratch);
        softmax_in_place(scratch);
        scratch[data.labels()[i]] -= 1.0;
        for c in 0..classes {
            let g = scratch[c] * scale;
            let row = &mut grad[c * dim..(c + 1) * dim];
            for (r, &xi) in row.iter_mut().zip(x) {
                *r += g * xi as f64;
            }
            grad[classes * dim + c] += g;
        }
    }
}

/// Gradient of the batch loss plus the proximal term `lambda/2 ||theta - anchor||^2`.
pub fn surrogate_gradient(
    params: &ParamVector,
    anchor: &ParamVector,
    batch: &Dataset,
    lambda: f64,
) -> Result<Vec<f64>, LearningError> {
    check_dims(&params.values, batch)?;
    if anchor.len() != params.len() {
        return Err(LearningError::DimensionMismatch {
            expected: params.len(),
            got: anchor.len(),
        });
    }
    let indices: Vec<usize> = (0..batch.len()).collect();
    let mut grad = vec![0.0; params.len()];
    let mut scratch = vec![0.0; batch.class_count()];
    accumulate_data_gradient(&params.values, batch, &indices, &mut grad, &mut scratch);
    if lambda != 0.0 {
        for ((g, &p), &a) in grad.iter_mut().zip(&params.values).zip(&anchor.values) {
            *g += lambda * (p - a);
        }
    }
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub loss: f64,
}

/// Top-1 accuracy and mean loss; argmax ties go to the lowest class index.
pub fn evaluate(params: &ParamVector, test: &Dataset) -> Result<Evaluation, LearningError> {
    check_dims(&params.values, test)?;
    let mut z = vec![0.0; test.class_count()];
    let mut correct = 0usize;
    let mut total_loss = 0.0;
    for i in 0..test.len() {
        logits(&params.values, test.dim(), test.sample(i), &mut z);
        let mut best = 0;
        for c in 1..z.len() {
            if z[c] > z[best] {
                best = c;
            }
        }
        let y = test.labels()[i];
        if best == y {
            correct += 1;
        }
        let zy = z[y];
        total_loss += softmax_in_place(&mut z) - zy;
    }
    let n = test.len() as f64;
    Ok(Evaluation {
        accuracy: correct as f64 / n,
        loss: total_loss / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::synth_dataset;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(d: usize, rng: &mut impl Rng) -> ParamVector {
        ParamVector::new((0..d).map(|_| rng.random_range(-0.5..0.5)).collect(), 0)
    }

    /// Straightforward re-implementation: explicit weight matrix and
    /// log of normalized exponentials.
    fn naive_loss(params: &[f64], data: &Dataset) -> f64 {
        let (dim, k) = (data.dim(), data.class_count());
        let mut total = 0.0;
        for i in 0..data.len() {
            let x = data.sample(i);
            let z: Vec<f64> = (0..k)
                .map(|c| {
                    let mut s = params[k * dim + c];
                    for j in 0..dim {
                        s += params[c * dim + j] * x[j] as f64;
                    }
                    s
                })
                .collect();
            let denom: f64 = z.iter().map(|v| v.exp()).sum();
            total += -(z[data.labels()[i]].exp() / denom).ln();
        }
        total / data.len() as f64
    }

    #[test]
    fn zero_params_give_log_classes() {
        let data = synth_dataset(10, 5, 6, 1).unwrap();
        let p = ParamVector::zeros(param_count(6, 10));
        assert_relative_eq!(model_loss(&p, &data).unwrap(), 10f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn huge_margin_drives_loss_to_zero() {
        let data = Dataset::new(vec![1.0], vec![1], 1, 3).unwrap();
        let mut p = ParamVector::zeros(param_count(1, 3));
        p.values[1] = 1e3; // weight of class 1
        let loss = model_loss(&p, &data).unwrap();
        assert!((0.0..1e-300).contains(&loss));
    }

    #[test]
    fn loss_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = synth_dataset(4, 6, 5, 9).unwrap();
        for _ in 0..10 {
            let p = random_params(param_count(5, 4), &mut rng);
            assert_relative_eq!(
                model_loss(&p, &data).unwrap(),
                naive_loss(&p.values, &data),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn prox_term_vanishes_at_anchor_and_lambda_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data = synth_dataset(3, 4, 4, 2).unwrap();
        let d = param_count(4, 3);
        let p = random_params(d, &mut rng);
        let anchor = random_params(d, &mut rng);
        let pure = surrogate_gradient(&p, &anchor, &data, 0.0).unwrap();
        let at_anchor = surrogate_gradient(&p, &p, &data, 2.5).unwrap();
        assert_eq!(pure, surrogate_gradient(&p, &p, &data, 0.0).unwrap());
        for (a, b) in pure.iter().zip(&at_anchor) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn softmax_normalizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data = synth_dataset(7, 3, 5, 4).unwrap();
        let p = random_params(param_count(5, 7), &mut rng);
        for i in 0..data.len() {
            let probs = predict_proba(&p, data.sample(i), 7);
            assert_relative_eq!(probs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dimension_errors() {
        let data = synth_dataset(2, 2, 3, 0).unwrap();
        let good = ParamVector::zeros(param_count(3, 2));
        let bad = ParamVector::zeros(5);
        assert!(matches!(
            model_loss(&bad, &data),
            Err(LearningError::DimensionMismatch {
                expected: 8,
                got: 5
            })
        ));
        assert!(surrogate_gradient(&good, &bad, &data, 1.0).is_err());
        assert!(evaluate(&bad, &data).is_err());
    }

    #[test]
    fn constant_predictor_on_balanced_labels() {
        let data = synth_dataset(10, 20, 3, 11).unwrap();
        let eval = evaluate(&ParamVector::zeros(param_count(3, 10)), &data).unwrap();
        assert_relative_eq!(eval.accuracy, 0.1, epsilon = 1e-15);
        assert_relative_eq!(eval.loss, 10f64.ln(), epsilon = 1e-12);
    }
}
