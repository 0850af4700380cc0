use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_training_set, BaselineError, Prediction};
use crate::baseline::features::FeatureVector;
use crate::label::{FocalizationLabel, CLASSES};

pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 1000;
const HISTORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// Multinomial logistic regression. The bias is not regularized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub classes: Vec<FocalizationLabel>,
    /// `classes.len() x dim`
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub lambda: f64,
    pub tolerance: f64,
}

/// Training diagnostics returned with the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegFit {
    pub model: LogRegModel,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Objective at the start and after every accepted step.
    pub loss_history: Vec<f64>,
}

impl LogRegFit {
    /// `Some(NonConvergence)` when the gradient tolerance was not reached.
    pub fn warning(&self) -> Option<BaselineError> {
        (!self.converged).then_some(BaselineError::NonConvergence {
            iterations: self.iterations,
            gradient_norm: self.gradient_norm,
        })
    }
}

/// Summed multinomial cross-entropy plus `(lambda / 2) * ||W||^2` over a
/// flat parameter vector laid out as `[W row-major | b]`.
#[derive(Debug, Clone)]
pub struct LogRegProblem<'a> {
    vectors: &'a [FeatureVector],
    targets: Vec<usize>,
    classes: Vec<FocalizationLabel>,
    dim: usize,
    lambda: f64,
}

impl<'a> LogRegProblem<'a> {
    pub fn new(
        vectors: &'a [FeatureVector],
        labels: &[FocalizationLabel],
        lambda: f64,
    ) -> Result<Self, BaselineError> {
        let dim = check_training_set(vectors, labels)?;
        if lambda.is_nan() || lambda < 0.0 {
            return Err(BaselineError::BadConfig("lambda must be nonnegative"));
        }
        let classes: Vec<FocalizationLabel> =
            CLASSES.iter().copied().filter(|c| labels.contains(c)).collect();
        if classes.len() < 2 {
            return Err(BaselineError::SingleClassTraining);
        }
        let targets = labels
            .iter()
            .map(|l| classes.iter().position(|c| c == l).expect("present"))
            .collect();
        Ok(Self {
            vectors,
            targets,
            classes,
            dim,
            lambda,
        })
    }

    pub fn n_params(&self) -> usize {
        self.classes.len() * (self.dim + 1)
    }

    pub fn classes(&self) -> &[FocalizationLabel] {
        &self.classes
    }

    fn logits(&self, params: &[f64], v: &FeatureVector, out: &mut [f64]) {
        let k = self.classes.len();
        let bias = &params[k * self.dim..];
        for (c, o) in out.iter_mut().enumerate() {
            let row = &params[c * self.dim..(c + 1) * self.dim];
            *o = bias[c] + v.entries().iter().map(|&(j, w)| row[j] * w).sum::<f64>();
        }
    }

    /// Objective value and gradient at `params`.
    pub fn objective(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let k = self.classes.len();
        let d = self.dim;
        let mut grad = vec![0.0; params.len()];
        let mut z = vec![0.0; k];
        let mut loss = 0.0;
        for (v, &y) in self.vectors.iter().zip(&self.targets) {
            self.logits(params, v, &mut z);
            let lse = log_sum_exp(&z);
            loss += lse - z[y];
            for c in 0..k {
                let residual = libm::exp(z[c] - lse) - if c == y { 1.0 } else { 0.0 };
                for &(j, w) in v.entries() {
                    grad[c * d + j] += residual * w;
                }
                grad[k * d + c] += residual;
            }
        }
        let weights = &params[..k * d];
        loss += 0.5 * self.lambda * weights.iter().map(|w| w * w).sum::<f64>();
        for (g, w) in grad.iter_mut().zip(weights) {
            *g += self.lambda * w;
        }
        (loss, grad)
    }

    fn into_model(self, params: &[f64], tolerance: f64) -> LogRegModel {
        let k = self.classes.len();
        let d = self.dim;
        LogRegModel {
            weights: (0..k).map(|c| params[c * d..(c + 1) * d].to_vec()).collect(),
            bias: params[k * d..].to_vec(),
            classes: self.classes,
            lambda: self.lambda,
            tolerance,
        }
    }
}

pub(crate) fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + libm::log(z.iter().map(|x| libm::exp(x - m)).sum())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Fit from zero initialization with L-BFGS and an Armijo backtracking line
/// search, stopping at gradient norm `GRADIENT_TOLERANCE` or after
/// `MAX_ITERATIONS` iterations.
pub fn logreg_fit(
    vectors: &[FeatureVector],
    labels: &[FocalizationLabel],
    lambda: f64,
) -> Result<LogRegFit, BaselineError> {
    let problem = LogRegProblem::new(vectors, labels, lambda)?;
    let mut x = vec![0.0; problem.n_params()];
    let (mut f, mut g) = problem.objective(&x);
    let mut loss_history = vec![f];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(HISTORY);
    let mut iterations = 0;
    let mut gnorm = norm(&g);

    while gnorm > GRADIENT_TOLERANCE && iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut dir = lbfgs_direction(&g, &memory);
        let mut slope = dot(&g, &dir);
        if slope.is_nan() || slope >= 0.0 {
            memory.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let mut step = if memory.is_empty() {
            (1.0 / gnorm).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = problem.objective(&trial);
            if ft <= f + ARMIJO_C1 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            // No decrease representable at this precision.
            break;
        };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if memory.len() == HISTORY {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        x = x_new;
        f = f_new;
        g = g_new;
        gnorm = norm(&g);
        loss_history.push(f);
    }

    Ok(LogRegFit {
        converged: gnorm <= GRADIENT_TOLERANCE,
        iterations,
        gradient_norm: gnorm,
        loss_history,
        model: problem.into_model(&x, GRADIENT_TOLERANCE),
    })
}

/// Two-loop recursion: returns `-H g`.
fn lbfgs_direction(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|qi| *qi *= gamma);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|qi| *qi = -*qi);
    q
}

impl LogRegModel {
    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn logits(&self, vector: &FeatureVector) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| {
                b + vector
                    .entries()
                    .iter()
                    .filter(|(j, _)| *j < row.len())
                    .map(|&(j, w)| row[j] * w)
                    .sum::<f64>()
            })
            .collect()
    }
}

/// Softmax class probabilities and the argmax label (class-order tie-break).
pub fn logreg_predict(model: &LogRegModel, vector: &FeatureVector) -> Prediction {
    Prediction::from_scores(&model.classes, &model.logits(vector))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::features::{fit_vectorizer, NgramRange, Weighting};
    use FocalizationLabel::*;

    fn separable() -> (Vec<FeatureVector>, Vec<FocalizationLabel>) {
        let texts = [
            "she felt afraid inside",
            "she thought and felt",
            "he walked the road",
            "he walked and ran",
            "everyone knew all",
            "all of them knew",
        ];
        let labels = vec![Internal, Internal, External, External, Zero, Zero];
        let cfg = fit_vectorizer(&texts, Weighting::Count, NgramRange::up_to(1).unwrap()).unwrap();
        (cfg.vectorize_all(&texts), labels)
    }

    #[test]
    fn separable_training_accuracy() {
        let (vs, ls) = separable();
        let fit = logreg_fit(&vs, &ls, 1.0).unwrap();
        assert!(fit.converged, "{fit:?}");
        for (v, l) in vs.iter().zip(&ls) {
            assert_eq!(logreg_predict(&fit.model, v).label, *l);
        }
    }

    #[test]
    fn loss_never_increases() {
        let (vs, ls) = separable();
        let fit = logreg_fit(&vs, &ls, 1.0).unwrap();
        assert!(fit.loss_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(fit.loss_history.last() <= fit.loss_history.first());
    }

    #[test]
    fn stronger_regularization_shrinks_towards_priors() {
        let (vs, ls) = separable();
        let weak = logreg_fit(&vs, &ls, 1.0).unwrap().model;
        let strong = logreg_fit(&vs, &ls, 100.0).unwrap().model;
        let wnorm = |m: &LogRegModel| m.weights.iter().flatten().map(|w| w * w).sum::<f64>();
        assert!(wnorm(&strong) < wnorm(&weak));
        let prior = 1.0 / 3.0;
        let dev = |m: &LogRegModel| {
            vs.iter()
                .flat_map(|v| logreg_predict(m, v).probabilities.into_values())
                .map(|p| (p - prior).abs())
                .fold(0.0, f64::max)
        };
        assert!(dev(&strong) < dev(&weak));
    }

    #[test]
    fn single_class_rejected() {
        let (vs, _) = separable();
        assert_eq!(
            logreg_fit(&vs, &[Zero; 6], 1.0).unwrap_err(),
            BaselineError::SingleClassTraining
        );
    }

    #[test]
    fn probabilities_sum_to_one() {
        let (vs, ls) = separable();
        let m = logreg_fit(&vs, &ls, 1.0).unwrap().model;
        for v in &vs {
            let s: f64 = logreg_predict(&m, v).probabilities.values().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
}
