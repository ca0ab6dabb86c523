use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::SourceId;
use crate::privacy::noise::sample_gaussian;
use crate::privacy::{
    renyi_gauss, renyi_gauss_vec, AccountantScope, Filter, FilterKind, Odometer, OdometerKind, PrivacyError,
};
use crate::sens::SensRows;

/// A labelled example with features in `[-1, 1]²` and label ±1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: [f64; 2],
    pub label: f64,
}

/// Two Gaussian blobs centred at ±(0.5, 0.5), clamped to `[-1, 1]²`. Half
/// the points are labelled +1.
pub fn synthetic_dataset(seed: u64, n: usize) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    (0..n)
        .map(|i| {
            let label = if i % 2 == 0 { 1.0 } else { -1.0 };
            let mut coord = || (0.5 * label + sample_gaussian(&mut rng, 0.2)).clamp(-1.0, 1.0);
            let x = [coord(), coord()];
            Point { x, label }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GdConfig {
    pub seed: u64,
    pub points: usize,
    pub source: String,
    pub alpha: f64,
    /// Rényi ε of each noisy gradient.
    pub eps_iter: f64,
    /// Rényi ε of each noisy accuracy query.
    pub eps_acc: f64,
    /// Rényi ε of the one-off noisy dataset size.
    pub eps_count: f64,
    /// Rényi ε budget enforced by the filter.
    pub budget: f64,
    pub max_iters: usize,
    pub learning_rate: f64,
    /// L2 bound on each example's gradient.
    pub clip: f64,
    /// Training stops once the noisy accuracy moves by at most this much.
    pub plateau: f64,
}

impl Default for GdConfig {
    fn default() -> Self {
        GdConfig {
            seed: 7,
            points: 400,
            source: "train.csv".to_owned(),
            alpha: 10.0,
            eps_iter: 0.25,
            eps_acc: 0.125,
            eps_count: 0.125,
            budget: 10.0,
            max_iters: 50,
            learning_rate: 1.0,
            clip: 1.0,
            plateau: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GdOutcome {
    pub theta: [f64; 2],
    pub iterations: usize,
    pub noisy_accuracy: f64,
    /// Accuracy on the training data without noise. Not private; reported
    /// for diagnostics only.
    pub true_accuracy: f64,
    pub odometer: Odometer,
    pub filter: Filter,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GdError {
    #[error("privacy budget exhausted after {completed_iterations} iterations: {reason}")]
    FilterHalt {
        completed_iterations: usize,
        reason: String,
        odometer: Odometer,
    },
    #[error(transparent)]
    Privacy(PrivacyError),
    #[error("invalid source name: {0}")]
    InvalidSource(String),
}

fn dot(theta: &[f64; 2], x: &[f64; 2]) -> f64 {
    theta[0] * x[0] + theta[1] * x[1]
}

fn correct(theta: &[f64; 2], p: &Point) -> bool {
    dot(theta, &p.x) * p.label > 0.0
}

/// Gradient of the logistic loss `ln(1 + e^{-y θ·x})`.
fn logistic_gradient(theta: &[f64; 2], p: &Point) -> Vec<f64> {
    let margin = p.label * dot(theta, &p.x);
    let k = -p.label / (1.0 + margin.exp());
    vec![k * p.x[0], k * p.x[1]]
}

/// Private logistic regression by clipped, noised full-batch gradient
/// descent on the synthetic dataset. Every release is accounted under a
/// Rényi filter with budget `config.budget` and recorded by a Rényi odometer.
pub fn dp_gradient_descent(config: &GdConfig) -> Result<GdOutcome, GdError> {
    let source = SourceId::new(&config.source).map_err(|e| GdError::InvalidSource(e.to_string()))?;
    let rows = SensRows::lift(synthetic_dataset(config.seed, config.points), source);

    let mut scope = AccountantScope::new(config.seed);
    let odo = scope
        .push_odometer(OdometerKind::Renyi { alpha: config.alpha })
        .map_err(GdError::Privacy)?;
    let filt = scope
        .push_filter(FilterKind::Renyi {
            alpha: config.alpha,
            eps: config.budget,
        })
        .map_err(GdError::Privacy)?;

    let mut theta = [0.0; 2];
    let mut iterations = 0;
    let result = train(config, &rows, &mut scope, &mut theta, &mut iterations);

    let filter = scope.pop_filter(filt).map_err(GdError::Privacy)?;
    let odometer = scope.pop_odometer(odo).map_err(GdError::Privacy)?;
    match result {
        Ok(noisy_accuracy) => {
            let hits = rows_correct(&rows, &theta);
            Ok(GdOutcome {
                theta,
                iterations,
                noisy_accuracy,
                true_accuracy: hits / rows.len() as f64,
                odometer,
                filter,
            })
        }
        Err(PrivacyError::FilterHalt { reason }) => Err(GdError::FilterHalt {
            completed_iterations: iterations,
            reason,
            odometer,
        }),
        Err(e) => Err(GdError::Privacy(e)),
    }
}

fn rows_correct(rows: &SensRows<Point>, theta: &[f64; 2]) -> f64 {
    rows.count_where(|p| correct(theta, p)).value
}

fn train(
    config: &GdConfig,
    rows: &SensRows<Point>,
    scope: &mut AccountantScope,
    theta: &mut [f64; 2],
    iterations: &mut usize,
) -> Result<f64, PrivacyError> {
    let noisy_n = renyi_gauss(scope, &rows.count(), config.alpha, config.eps_count)?.max(1.0);
    let mut previous: Option<f64> = None;
    let mut accuracy = 0.0;
    while *iterations < config.max_iters {
        let t = *theta;
        let grad_sum = rows.clipped_sum_l2(2, config.clip, |p| logistic_gradient(&t, p))?;
        let noisy = renyi_gauss_vec(scope, &grad_sum, config.alpha, config.eps_iter)?;
        for (w, g) in theta.iter_mut().zip(noisy) {
            *w -= config.learning_rate * g / noisy_n;
        }
        *iterations += 1;

        let t = *theta;
        let hits = rows.count_where(|p| correct(&t, p));
        accuracy = renyi_gauss(scope, &hits, config.alpha, config.eps_acc)? / noisy_n;
        if previous.is_some_and(|p| (accuracy - p).abs() <= config.plateau) {
            break;
        }
        previous = Some(accuracy);
    }
    Ok(accuracy)
}
