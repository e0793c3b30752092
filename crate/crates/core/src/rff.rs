//! Random Fourier features and sampled realisations of the GP predictive
//! mean.
//!
//! A stationary kernel is the expectation of `cos(w^T x + b) cos(w^T x' + b)`
//! (times two) over frequencies `w` drawn from its spectral density and
//! phases `b` uniform on `[0, 2 pi)`. For the squared-exponential kernel the
//! spectral density is Gaussian with per-dimension standard deviation
//! `1 / delta_i`. Truncating the expectation to `M` Monte Carlo draws gives
//! the feature map
//!
//! ```text
//! phi(x) = sqrt(2/M) [cos(w_1^T x + b_1), ..., cos(w_M^T x + b_M)]
//! ```
//!
//! with `phi(x)^T phi(x') ~ k(x, x')` to `O(M^(-1/2))` uniformly. Plugging
//! the approximate features into the GP predictive mean makes the mean itself
//! random: each draw of `(w, b)` is one deterministic candidate for the
//! regression function. [`draw_realisation`] materialises one such draw with
//! its weights precomputed, so evaluation costs `O(M d)`.
//!
//! The weight system is solved through the `n x n` matrix
//! `Phi^T Phi + jitter I` (same jitter ladder as the exact GP) rather than an
//! `M x M` system; the algebra is identical and `n` is small here.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{se_kernel, GpModel, KernelParams, TrendModel};
use crate::linalg::{cholesky_with_jitter, default_jitter_ladder, dot, Matrix};
use crate::scalar::Scalar;

/// One Monte Carlo draw of spectral frequencies and phases.
///
/// `frequencies` is `M x d` (row `j` is the `j`-th frequency vector) and
/// `phases` holds the `M` offsets in `[0, 2 pi)`. The seed that produced the
/// draw is kept for provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSample<T> {
    frequencies: Matrix<T>,
    phases: Vec<T>,
    seed: u64,
}

impl<T: Scalar> FeatureSample<T> {
    /// Build from explicit parts, validating the stored invariants.
    pub fn from_parts(frequencies: Matrix<T>, phases: Vec<T>, seed: u64) -> Result<Self> {
        if frequencies.nrows() != phases.len() {
            return Err(Error::DimensionMismatch {
                expected: frequencies.nrows(),
                got: phases.len(),
            });
        }
        if !phases
            .iter()
            .all(|p| *p >= T::zero() && *p < T::TAU() && p.is_finite())
        {
            return Err(Error::invalid("phases must lie in [0, 2 pi)"));
        }
        if !frequencies.rows().all(|r| r.iter().all(|v| v.is_finite())) {
            return Err(Error::invalid("frequencies must be finite"));
        }
        Ok(FeatureSample {
            frequencies,
            phases,
            seed,
        })
    }

    /// Number of features `M`.
    pub fn feature_count(&self) -> usize {
        self.phases.len()
    }

    /// Input dimension the sample was drawn for.
    pub fn dim(&self) -> usize {
        self.frequencies.ncols()
    }

    pub fn frequencies(&self) -> &Matrix<T> {
        &self.frequencies
    }

    pub fn phases(&self) -> &[T] {
        &self.phases
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Draw `M` spectral frequencies `w ~ N(0, D^-2)` (independent per dimension,
/// standard deviation `1/delta_i`) and phases `b ~ U[0, 2 pi)`.
///
/// Deterministic for a fixed seed; frequencies are drawn row by row before
/// the phases.
pub fn sample_spectral<T: Scalar>(
    m: usize,
    params: &KernelParams<T>,
    seed: u64,
) -> Result<FeatureSample<T>> {
    if m == 0 {
        return Err(Error::invalid("need at least one feature"));
    }
    let d = params.dim();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let inv_scales: Vec<T> = params
        .length_scales()
        .iter()
        .map(|s| T::one() / *s)
        .collect();
    let mut frequencies = Matrix::zeros(m, d);
    for j in 0..m {
        for (i, &inv) in inv_scales.iter().enumerate() {
            frequencies.set(j, i, T::standard_normal(&mut rng) * inv);
        }
    }
    let phases: Vec<T> = (0..m)
        .map(|_| rng.random_range(T::zero()..T::TAU()))
        .collect();
    FeatureSample::from_parts(frequencies, phases, seed)
}

/// The approximate feature map `sqrt(2/M) cos(w_j^T x + b_j)`, `j = 1..M`.
/// Every component is bounded by `sqrt(2/M)` in magnitude.
pub fn feature_map<T: Scalar>(x: &[T], sample: &FeatureSample<T>) -> Result<Vec<T>> {
    if x.len() != sample.dim() {
        return Err(Error::DimensionMismatch {
            expected: sample.dim(),
            got: x.len(),
        });
    }
    let amp = (T::lit(2.0) / T::from_count(sample.feature_count())).sqrt();
    Ok(sample
        .frequencies
        .rows()
        .zip(&sample.phases)
        .map(|(w, &b)| amp * (dot(w, x) + b).cos())
        .collect())
}

/// Sup-error of the feature approximation `|k(x, x') - phi(x)^T phi(x')|`
/// over the given pairs, for a single feature sample drawn from `seed`.
pub fn kernel_approx_error<T: Scalar>(
    params: &KernelParams<T>,
    m: usize,
    test_pairs: &[(Vec<T>, Vec<T>)],
    seed: u64,
) -> Result<T> {
    let sample = sample_spectral(m, params, seed)?;
    let mut worst = T::zero();
    for (x, x2) in test_pairs {
        let exact = se_kernel(x, x2, params)?;
        let approx = dot(&feature_map(x, &sample)?, &feature_map(x2, &sample)?);
        let err = (exact - approx).abs();
        if err > worst {
            worst = err;
        }
    }
    Ok(worst)
}

/// One sampled approximation of a fitted GP's predictive mean: a fixed
/// feature draw plus precomputed weights. Evaluation is deterministic and
/// smooth (a finite cosine sum plus the linear trend).
#[derive(Clone, Debug)]
pub struct RealisationPredictor<T> {
    features: FeatureSample<T>,
    /// `alpha = (Phi^T Phi + jitter I)^-1 (y - mu)`.
    influence: Vec<T>,
    /// `Phi alpha`, the collapsed per-feature weights used for evaluation.
    feature_weights: Vec<T>,
    trend: TrendModel<T>,
    training_inputs: Matrix<T>,
    jitter: T,
}

/// Plain-data form of [`RealisationPredictor`] for serialization; the
/// collapsed feature weights are rebuilt on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealisationRecord<T> {
    pub features: FeatureSample<T>,
    pub influence: Vec<T>,
    pub trend_coefficients: Vec<T>,
    pub training_inputs: Matrix<T>,
    pub jitter: T,
}

impl<T: Scalar> RealisationPredictor<T> {
    /// Assemble from parts, recomputing the collapsed feature weights
    /// `Phi alpha` from the stored pieces.
    pub fn from_parts(
        features: FeatureSample<T>,
        influence: Vec<T>,
        trend: TrendModel<T>,
        training_inputs: Matrix<T>,
        jitter: T,
    ) -> Result<Self> {
        if training_inputs.nrows() != influence.len() {
            return Err(Error::DimensionMismatch {
                expected: training_inputs.nrows(),
                got: influence.len(),
            });
        }
        if training_inputs.ncols() != features.dim() {
            return Err(Error::DimensionMismatch {
                expected: features.dim(),
                got: training_inputs.ncols(),
            });
        }
        let m = features.feature_count();
        let mut feature_weights = vec![T::zero(); m];
        for (i, &alpha) in influence.iter().enumerate() {
            let phi = feature_map(training_inputs.row(i), &features)?;
            for (w, p) in feature_weights.iter_mut().zip(&phi) {
                *w += alpha * *p;
            }
        }
        Ok(RealisationPredictor {
            features,
            influence,
            feature_weights,
            trend,
            training_inputs,
            jitter,
        })
    }

    pub fn features(&self) -> &FeatureSample<T> {
        &self.features
    }

    pub fn influence(&self) -> &[T] {
        &self.influence
    }

    pub fn feature_weights(&self) -> &[T] {
        &self.feature_weights
    }

    pub fn trend(&self) -> &TrendModel<T> {
        &self.trend
    }

    pub fn training_inputs(&self) -> &Matrix<T> {
        &self.training_inputs
    }

    pub fn jitter(&self) -> T {
        self.jitter
    }

    /// Evaluate the realisation at `x`: `mu(x) + phi(x)^T (Phi alpha)`.
    pub fn eval(&self, x: &[T]) -> Result<T> {
        let phi = feature_map(x, &self.features)?;
        Ok(self.trend.eval(x) + dot(&phi, &self.feature_weights))
    }

    pub fn to_record(&self) -> RealisationRecord<T> {
        RealisationRecord {
            features: self.features.clone(),
            influence: self.influence.clone(),
            trend_coefficients: self.trend.coefficients().to_vec(),
            training_inputs: self.training_inputs.clone(),
            jitter: self.jitter,
        }
    }

    pub fn from_record(record: RealisationRecord<T>) -> Result<Self> {
        let trend = TrendModel::new(record.trend_coefficients)?;
        RealisationPredictor::from_parts(
            record.features,
            record.influence,
            trend,
            record.training_inputs,
            record.jitter,
        )
    }
}

/// Draw one realisation of the approximate predictive mean of a fitted GP.
///
/// Builds the feature matrix at the training inputs, solves
/// `(Phi^T Phi + jitter I) alpha = y - mu` through the jitter ladder, and
/// returns the predictor with both weight vectors precomputed. Deterministic
/// for a fixed seed.
pub fn draw_realisation<T: Scalar>(
    model: &GpModel<T>,
    m: usize,
    seed: u64,
) -> Result<RealisationPredictor<T>> {
    let features = sample_spectral(m, model.kernel(), seed)?;
    let inputs = model.design();
    let n = inputs.nrows();
    // Rows of `phi_train` are the feature vectors of the training points.
    let mut phi_train = Matrix::zeros(n, m);
    for i in 0..n {
        let phi = feature_map(inputs.row(i), &features)?;
        phi_train.row_mut(i).copy_from_slice(&phi);
    }
    let mut gram = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = dot(phi_train.row(i), phi_train.row(j));
            gram.set(i, j, v);
            gram.set(j, i, v);
        }
    }
    let (chol, jitter) = cholesky_with_jitter(&gram, &default_jitter_ladder())?;
    let residual: Vec<T> = (0..n)
        .map(|i| model.outputs()[i] - model.trend().eval(inputs.row(i)))
        .collect();
    let influence = chol.solve(&residual);
    let mut feature_weights = vec![T::zero(); m];
    for (i, &alpha) in influence.iter().enumerate() {
        for (w, &p) in feature_weights.iter_mut().zip(phi_train.row(i)) {
            *w += alpha * p;
        }
    }
    Ok(RealisationPredictor {
        features,
        influence,
        feature_weights,
        trend: model.trend().clone(),
        training_inputs: inputs.clone(),
        jitter,
    })
}

/// Free-function form of [`RealisationPredictor::eval`].
pub fn eval_realisation<T: Scalar>(predictor: &RealisationPredictor<T>, x: &[T]) -> Result<T> {
    predictor.eval(x)
}
