//! Exact Gaussian-process regression for one flow-map component.
//!
//! The model is a linear trend plus a centred GP with the squared-exponential
//! correlation
//!
//! ```text
//! k(x, x') = exp(-0.5 (x - x')^T D^-2 (x - x'))
//! ```
//!
//! where `D` is the diagonal matrix of per-dimension length-scales. Trend
//! coefficients and signal variance have closed-form generalized
//! least-squares estimates given the length-scales; the length-scales
//! themselves are chosen by maximizing the profile log-likelihood
//! `-(n/2) ln(sigma2_hat) - (1/2) ln |K|` with a multi-start derivative-free
//! search over log length-scales.
//!
//! Inputs are used unscaled: length-scales carry the units of the data.
//! Correlation matrices of noise-free GPs on dense designs are routinely
//! singular to rounding, so every factorization here walks the jitter ladder
//! of [`crate::linalg::cholesky_with_jitter`] and the chosen level is kept
//! with the model.

use serde::{Deserialize, Serialize};

use crate::design::{lhs_sample, Bounds};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_with_jitter, default_jitter_ladder, dot, Cholesky, Matrix};
use crate::scalar::Scalar;

/// Kernel hyperparameters: per-dimension length-scales and signal variance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams<T> {
    length_scales: Vec<T>,
    signal_variance: T,
}

impl<T: Scalar> KernelParams<T> {
    pub fn new(length_scales: Vec<T>, signal_variance: T) -> Result<Self> {
        if length_scales.is_empty() {
            return Err(Error::invalid("need at least one length-scale"));
        }
        if !length_scales.iter().all(|v| v.is_finite() && *v > T::zero()) {
            return Err(Error::invalid("length-scales must be positive and finite"));
        }
        if !(signal_variance.is_finite() && signal_variance > T::zero()) {
            return Err(Error::invalid("signal variance must be positive and finite"));
        }
        Ok(KernelParams {
            length_scales,
            signal_variance,
        })
    }

    pub fn dim(&self) -> usize {
        self.length_scales.len()
    }

    pub fn length_scales(&self) -> &[T] {
        &self.length_scales
    }

    pub fn signal_variance(&self) -> T {
        self.signal_variance
    }
}

/// Squared-exponential correlation between two points; in `(0, 1]`, equal to
/// one exactly when the points coincide.
pub fn se_kernel<T: Scalar>(x: &[T], x2: &[T], params: &KernelParams<T>) -> Result<T> {
    if x.len() != x2.len() || x.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: if x.len() != params.dim() {
                x.len()
            } else {
                x2.len()
            },
        });
    }
    let half = T::lit(0.5);
    let mut quad = T::zero();
    for ((&a, &b), &scale) in x.iter().zip(x2).zip(params.length_scales()) {
        let z = (a - b) / scale;
        quad += z * z;
    }
    Ok((-half * quad).exp())
}

pub(crate) fn se_correlation_matrix<T: Scalar>(points: &Matrix<T>, length_scales: &[T]) -> Matrix<T> {
    let n = points.nrows();
    let mut gram = Matrix::zeros(n, n);
    let half = T::lit(0.5);
    for i in 0..n {
        gram.set(i, i, T::one());
        for j in (i + 1)..n {
            let mut quad = T::zero();
            for (k, &scale) in length_scales.iter().enumerate() {
                let z = (points.get(i, k) - points.get(j, k)) / scale;
                quad += z * z;
            }
            let v = (-half * quad).exp();
            gram.set(i, j, v);
            gram.set(j, i, v);
        }
    }
    gram
}

/// Trend basis. The public model is first-order (`1, x_1, ..., x_d`); the
/// constant basis is kept as an internal seam for tests and diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) enum TrendBasis {
    Constant,
    Linear,
}

impl TrendBasis {
    fn len(self, dim: usize) -> usize {
        match self {
            TrendBasis::Constant => 1,
            TrendBasis::Linear => dim + 1,
        }
    }
}

fn trend_matrix<T: Scalar>(points: &Matrix<T>, basis: TrendBasis) -> Matrix<T> {
    let n = points.nrows();
    let r = basis.len(points.ncols());
    Matrix::from_fn(n, r, |i, j| {
        if j == 0 {
            T::one()
        } else {
            points.get(i, j - 1)
        }
    })
}

/// Linear trend `mu(x) = b_0 + b_1 x_1 + ... + b_d x_d` (a bare intercept
/// when built from the constant basis).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendModel<T> {
    coefficients: Vec<T>,
}

impl<T: Scalar> TrendModel<T> {
    pub fn new(coefficients: Vec<T>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::invalid("trend needs at least an intercept"));
        }
        Ok(TrendModel { coefficients })
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn eval(&self, x: &[T]) -> T {
        let mut acc = self.coefficients[0];
        for (&c, &v) in self.coefficients[1..].iter().zip(x) {
            acc += c * v;
        }
        acc
    }
}

/// Generalized least squares given a factorized correlation matrix.
/// Returns the coefficient vector, the residual `y - Q beta`, and
/// `sigma2 = residual^T K^-1 residual / n`.
fn gls<T: Scalar>(chol: &Cholesky<T>, q: &Matrix<T>, y: &[T]) -> Result<(Vec<T>, Vec<T>, T)> {
    let n = y.len();
    let r = q.ncols();
    // Whitened system: with Z = L^-1 Q and w = L^-1 y, the normal equations
    // become (Z^T Z) beta = Z^T w, symmetric positive definite exactly when
    // Q has full column rank.
    let mut z_cols: Vec<Vec<T>> = Vec::with_capacity(r);
    for j in 0..r {
        z_cols.push(chol.forward_solve(&q.column(j)));
    }
    let w = chol.forward_solve(y);
    let a = Matrix::from_fn(r, r, |i, j| dot(&z_cols[i], &z_cols[j]));
    let rhs: Vec<T> = (0..r).map(|j| dot(&z_cols[j], &w)).collect();
    let a_chol = Cholesky::new(&a).ok_or(Error::DegenerateTrend)?;
    let beta = a_chol.solve(&rhs);
    let residual: Vec<T> = (0..n)
        .map(|i| {
            let mut fit = T::zero();
            for j in 0..r {
                fit += q.get(i, j) * beta[j];
            }
            y[i] - fit
        })
        .collect();
    let white_res = chol.forward_solve(&residual);
    let sigma2 = dot(&white_res, &white_res) / T::from_count(n);
    Ok((beta, residual, sigma2))
}

fn check_training_shapes<T: Scalar>(points: &Matrix<T>, y: &[T]) -> Result<()> {
    if points.nrows() == 0 {
        return Err(Error::invalid("empty training set"));
    }
    if points.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: points.nrows(),
            got: y.len(),
        });
    }
    Ok(())
}

/// Log-likelihood of the data under given kernel parameters and trend:
/// `-(n/2) ln(2 pi sigma2) - (1/2) ln|K| - (1/(2 sigma2)) r^T K^-1 r`
/// with `r = y - Q beta`.
pub fn log_likelihood<T: Scalar>(
    points: &Matrix<T>,
    y: &[T],
    params: &KernelParams<T>,
    trend: &TrendModel<T>,
) -> Result<T> {
    check_training_shapes(points, y)?;
    let n = y.len();
    let gram = se_correlation_matrix(points, params.length_scales());
    let (chol, _) = cholesky_with_jitter(&gram, &default_jitter_ladder())?;
    let residual: Vec<T> = (0..n).map(|i| y[i] - trend.eval(points.row(i))).collect();
    let white = chol.forward_solve(&residual);
    let quad = dot(&white, &white);
    let half = T::lit(0.5);
    let n_t = T::from_count(n);
    let sigma2 = params.signal_variance();
    Ok(-half * n_t * (T::lit(2.0) * T::PI() * sigma2).ln()
        - half * chol.log_det()
        - half * quad / sigma2)
}

/// Closed-form generalized least-squares trend coefficients
/// `(Q^T K^-1 Q)^-1 Q^T K^-1 y`.
pub fn beta_hat<T: Scalar>(
    points: &Matrix<T>,
    y: &[T],
    params: &KernelParams<T>,
) -> Result<TrendModel<T>> {
    check_training_shapes(points, y)?;
    let gram = se_correlation_matrix(points, params.length_scales());
    let (chol, _) = cholesky_with_jitter(&gram, &default_jitter_ladder())?;
    let q = trend_matrix(points, TrendBasis::Linear);
    let (beta, _, _) = gls(&chol, &q, y)?;
    TrendModel::new(beta)
}

/// Closed-form signal-variance estimate
/// `(1/n) (y - Q beta)^T K^-1 (y - Q beta)` for a given trend.
pub fn sigma2_hat<T: Scalar>(
    points: &Matrix<T>,
    y: &[T],
    params: &KernelParams<T>,
    trend: &TrendModel<T>,
) -> Result<T> {
    check_training_shapes(points, y)?;
    let n = y.len();
    let gram = se_correlation_matrix(points, params.length_scales());
    let (chol, _) = cholesky_with_jitter(&gram, &default_jitter_ladder())?;
    let residual: Vec<T> = (0..n).map(|i| y[i] - trend.eval(points.row(i))).collect();
    let white = chol.forward_solve(&residual);
    Ok(dot(&white, &white) / T::from_count(n))
}

pub(crate) fn profile_log_likelihood_with_basis<T: Scalar>(
    points: &Matrix<T>,
    y: &[T],
    delta: &[T],
    basis: TrendBasis,
) -> Result<T> {
    check_training_shapes(points, y)?;
    if delta.len() != points.ncols() {
        return Err(Error::DimensionMismatch {
            expected: points.ncols(),
            got: delta.len(),
        });
    }
    if !delta.iter().all(|v| v.is_finite() && *v > T::zero()) {
        return Err(Error::invalid("length-scales must be positive and finite"));
    }
    let n = y.len();
    let gram = se_correlation_matrix(points, delta);
    let (chol, _) = cholesky_with_jitter(&gram, &default_jitter_ladder())?;
    let q = trend_matrix(points, basis);
    let (_, _, sigma2) = gls(&chol, &q, y)?;
    let sigma2 = sigma2.max(T::min_positive_value());
    let half = T::lit(0.5);
    Ok(-half * T::from_count(n) * sigma2.ln() - half * chol.log_det())
}

/// Profile log-likelihood `-(n/2) ln(sigma2_hat) - (1/2) ln|K|` of the
/// length-scales, with the trend and variance replaced by their closed-form
/// estimates (constants dropped).
pub fn profile_log_likelihood<T: Scalar>(points: &Matrix<T>, y: &[T], delta: &[T]) -> Result<T> {
    profile_log_likelihood_with_basis(points, y, delta, TrendBasis::Linear)
}

/// Settings for the multi-start length-scale search.
///
/// Starts are a Latin hypercube over log length-scales; each dimension `j` is
/// bounded by `[lower_scale, upper_scale]` times the spread of column `j` of
/// the inputs. Each start runs a compass (pattern) search in log space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig<T> {
    pub n_starts: usize,
    pub seed: u64,
    pub lower_scale: T,
    pub upper_scale: T,
    pub initial_step: T,
    pub step_tolerance: T,
    pub max_evals_per_start: usize,
}

impl<T: Scalar> Default for SearchConfig<T> {
    fn default() -> Self {
        SearchConfig {
            n_starts: 10,
            seed: 0,
            lower_scale: T::lit(0.01),
            upper_scale: T::lit(100.0),
            initial_step: T::one(),
            step_tolerance: T::lit(1e-3),
            max_evals_per_start: 200,
        }
    }
}

/// A fitted GP for one scalar output.
#[derive(Clone, Debug)]
pub struct GpModel<T> {
    design: Matrix<T>,
    outputs: Vec<T>,
    kernel: KernelParams<T>,
    trend: TrendModel<T>,
    jitter: T,
    /// `(K + jitter I)^-1 (y - mu)`: the weights of the predictive mean.
    influence: Vec<T>,
    objective: T,
    start_index: usize,
}

/// Plain-data form of [`GpModel`] used for (de)serialization; the
/// factorization is rebuilt from the recorded jitter on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpModelRecord<T> {
    pub design: Matrix<T>,
    pub outputs: Vec<T>,
    pub length_scales: Vec<T>,
    pub signal_variance: T,
    pub trend_coefficients: Vec<T>,
    pub jitter: T,
    pub objective: T,
    pub start_index: usize,
}

impl<T: Scalar> GpModel<T> {
    /// Assemble a model from explicit hyperparameters (used by the fit and
    /// when loading records). The Gram factorization uses exactly `jitter`.
    fn assemble(
        design: Matrix<T>,
        outputs: Vec<T>,
        kernel: KernelParams<T>,
        trend: TrendModel<T>,
        jitter: T,
        objective: T,
        start_index: usize,
    ) -> Result<Self> {
        check_training_shapes(&design, &outputs)?;
        let gram = se_correlation_matrix(&design, kernel.length_scales());
        let (chol, used) = cholesky_with_jitter(&gram, &[jitter])?;
        let residual: Vec<T> = (0..outputs.len())
            .map(|i| outputs[i] - trend.eval(design.row(i)))
            .collect();
        let influence = chol.solve(&residual);
        Ok(GpModel {
            design,
            outputs,
            kernel,
            trend,
            jitter: used,
            influence,
            objective,
            start_index,
        })
    }

    pub fn design(&self) -> &Matrix<T> {
        &self.design
    }

    pub fn outputs(&self) -> &[T] {
        &self.outputs
    }

    pub fn kernel(&self) -> &KernelParams<T> {
        &self.kernel
    }

    pub fn trend(&self) -> &TrendModel<T> {
        &self.trend
    }

    pub fn jitter(&self) -> T {
        self.jitter
    }

    /// Achieved profile log-likelihood.
    pub fn objective(&self) -> T {
        self.objective
    }

    /// Index of the search start that produced the returned optimum.
    pub fn start_index(&self) -> usize {
        self.start_index
    }

    pub fn dim(&self) -> usize {
        self.design.ncols()
    }

    pub fn n_training(&self) -> usize {
        self.design.nrows()
    }

    /// Exact predictive mean `mu(x) + k(x, X)^T (K + jitter I)^-1 (y - mu(X))`.
    pub fn predict_mean(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut acc = self.trend.eval(x);
        for (i, &w) in self.influence.iter().enumerate() {
            acc += se_kernel(x, self.design.row(i), &self.kernel)? * w;
        }
        Ok(acc)
    }

    pub fn to_record(&self) -> GpModelRecord<T> {
        GpModelRecord {
            design: self.design.clone(),
            outputs: self.outputs.clone(),
            length_scales: self.kernel.length_scales().to_vec(),
            signal_variance: self.kernel.signal_variance(),
            trend_coefficients: self.trend.coefficients().to_vec(),
            jitter: self.jitter,
            objective: self.objective,
            start_index: self.start_index,
        }
    }

    pub fn from_record(record: GpModelRecord<T>) -> Result<Self> {
        let kernel = KernelParams::new(record.length_scales, record.signal_variance)?;
        let trend = TrendModel::new(record.trend_coefficients)?;
        GpModel::assemble(
            record.design,
            record.outputs,
            kernel,
            trend,
            record.jitter,
            record.objective,
            record.start_index,
        )
    }
}

/// Compass search in log length-scale space: try `+/- step` along each axis,
/// move to the best improvement, halve the step when stuck.
fn compass_search<T: Scalar>(
    objective: &mut impl FnMut(&[T]) -> Option<T>,
    start: &[T],
    lower: &[T],
    upper: &[T],
    config: &SearchConfig<T>,
) -> (Vec<T>, Option<T>) {
    let d = start.len();
    let mut point = start.to_vec();
    let mut value = objective(&point);
    let mut evals = 1usize;
    let mut step = config.initial_step;
    let half = T::lit(0.5);
    while step >= config.step_tolerance && evals < config.max_evals_per_start {
        let mut best_move: Option<(Vec<T>, T)> = None;
        for j in 0..d {
            for sign in [T::one(), -T::one()] {
                let mut candidate = point.clone();
                candidate[j] = (candidate[j] + sign * step).max(lower[j]).min(upper[j]);
                if candidate[j] == point[j] {
                    continue;
                }
                if let Some(v) = objective(&candidate) {
                    let improves = match (&best_move, value) {
                        (Some((_, best)), _) => v > *best,
                        (None, Some(current)) => v > current,
                        (None, None) => true,
                    };
                    if improves {
                        best_move = Some((candidate, v));
                    }
                }
                evals += 1;
                if evals >= config.max_evals_per_start {
                    break;
                }
            }
        }
        match best_move {
            Some((p, v)) => {
                point = p;
                value = Some(v);
            }
            None => step *= half,
        }
    }
    (point, value)
}

/// Maximum-likelihood fit: multi-start compass search over log length-scales,
/// then closed-form trend and variance at the optimum.
///
/// Requires `n >= d + 2` so the trend and the variance stay identifiable.
/// Ties between starts are broken by the lowest start index; starts whose
/// objective cannot be evaluated anywhere (factorization failure at every
/// probed point) are skipped, and the fit fails only if that happens to all
/// of them.
pub fn fit_hyperparameters<T: Scalar>(
    points: &Matrix<T>,
    y: &[T],
    config: &SearchConfig<T>,
) -> Result<GpModel<T>> {
    check_training_shapes(points, y)?;
    let n = points.nrows();
    let d = points.ncols();
    if n < d + 2 {
        return Err(Error::invalid(format!(
            "need at least d + 2 = {} training points, got {n}",
            d + 2
        )));
    }
    if config.n_starts == 0 {
        return Err(Error::invalid("need at least one search start"));
    }
    // Per-dimension log bounds from the column spread.
    let mut lower = Vec::with_capacity(d);
    let mut upper = Vec::with_capacity(d);
    for j in 0..d {
        let col = points.column(j);
        let lo = col.iter().copied().fold(T::infinity(), T::min);
        let hi = col.iter().copied().fold(T::neg_infinity(), T::max);
        let spread = (hi - lo).max(T::lit(1e-12));
        lower.push((config.lower_scale * spread).ln());
        upper.push((config.upper_scale * spread).ln());
    }
    let start_box = Bounds::new(lower.clone(), upper.clone())?;
    let starts = lhs_sample(config.n_starts, &start_box, config.seed)?;
    let mut objective = |log_delta: &[T]| -> Option<T> {
        let delta: Vec<T> = log_delta.iter().map(|v| v.exp()).collect();
        profile_log_likelihood(points, y, &delta).ok()
    };
    let mut best: Option<(T, usize, Vec<T>)> = None;
    for s in 0..config.n_starts {
        let (point, value) =
            compass_search(&mut objective, starts.point(s), &lower, &upper, config);
        if let Some(v) = value {
            let better = match &best {
                Some((bv, _, _)) => v > *bv,
                None => true,
            };
            if better {
                best = Some((v, s, point));
            }
        }
    }
    let (objective_value, start_index, log_delta) = best.ok_or_else(|| {
        Error::FitFailed(format!(
            "profile likelihood unevaluable at every point probed from {} starts",
            config.n_starts
        ))
    })?;
    let delta: Vec<T> = log_delta.iter().map(|v| v.exp()).collect();
    let gram = se_correlation_matrix(points, &delta);
    let (chol, jitter) = cholesky_with_jitter(&gram, &default_jitter_ladder())?;
    let q = trend_matrix(points, TrendBasis::Linear);
    let (beta, _, sigma2) = gls(&chol, &q, y)?;
    let sigma2 = sigma2.max(T::min_positive_value());
    let kernel = KernelParams::new(delta, sigma2)?;
    let trend = TrendModel::new(beta)?;
    GpModel::assemble(
        points.clone(),
        y.to_vec(),
        kernel,
        trend,
        jitter,
        objective_value,
        start_index,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn params1(delta: f64) -> KernelParams<f64> {
        KernelParams::new(vec![delta], 1.0).unwrap()
    }

    /// Draw `y ~ N(mean, K(delta_true))` on the given points.
    pub(crate) fn sample_gp(points: &Matrix<f64>, delta: &[f64], mean: f64, seed: u64) -> Vec<f64> {
        let gram = se_correlation_matrix(points, delta);
        let (chol, _) = cholesky_with_jitter(&gram, &default_jitter_ladder()).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let n = points.nrows();
        let z: Vec<f64> = (0..n).map(|_| f64::standard_normal(&mut rng)).collect();
        let l = chol.lower();
        (0..n)
            .map(|i| mean + (0..=i).map(|k| l.get(i, k) * z[k]).sum::<f64>())
            .collect()
    }

    fn grid_points(n: usize, lo: f64, hi: f64) -> Matrix<f64> {
        Matrix::from_fn(n, 1, |i, _| lo + (hi - lo) * i as f64 / (n - 1) as f64)
    }

    #[test]
    fn kernel_is_one_at_zero_distance_and_matches_unit_scaled_value() {
        let p = KernelParams::new(vec![2.0, 0.5], 1.0).unwrap();
        let x = [0.3, -1.2];
        assert_eq!(se_kernel(&x, &x, &p).unwrap(), 1.0);
        let q = params1(0.7);
        let v = se_kernel(&[0.0], &[0.7], &q).unwrap();
        assert_relative_eq!(v, (-0.5f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(v, 0.606531, max_relative = 1e-6);
    }

    #[test]
    fn kernel_rejects_bad_parameters_and_shapes() {
        assert!(KernelParams::new(vec![0.0], 1.0).is_err());
        assert!(KernelParams::new(vec![1.0], -1.0).is_err());
        assert!(KernelParams::new(vec![f64::NAN], 1.0).is_err());
        let p = params1(1.0);
        assert!(se_kernel(&[1.0, 2.0], &[1.0], &p).is_err());
    }

    #[test]
    fn gram_is_symmetric_and_translation_invariant() {
        let points = Matrix::from_rows(&[
            vec![0.0, 1.0],
            vec![2.0, -1.0],
            vec![0.5, 0.5],
            vec![-3.0, 2.0],
        ])
        .unwrap();
        let delta = [1.5, 0.8];
        let gram = se_correlation_matrix(&points, &delta);
        assert!(gram.asymmetry() <= 1e-12);
        let shifted = Matrix::from_fn(points.nrows(), 2, |i, j| {
            points.get(i, j) + if j == 0 { 17.0 } else { -4.0 }
        });
        let gram2 = se_correlation_matrix(&shifted, &delta);
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(gram.get(i, j), gram2.get(i, j), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn log_likelihood_single_point_zero_residual() {
        let points = Matrix::from_rows(&[vec![0.4]]).unwrap();
        let y = [2.5];
        let sigma2 = 1.7;
        let params = KernelParams::new(vec![1.0], sigma2).unwrap();
        // Trend passing exactly through the data point.
        let trend = TrendModel::new(vec![2.5, 0.0]).unwrap();
        let ll = log_likelihood(&points, &y, &params, &trend).unwrap();
        assert_relative_eq!(
            ll,
            -0.5 * (2.0 * std::f64::consts::PI * sigma2).ln(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn log_likelihood_matches_independent_gaussians_when_points_are_far() {
        // Distances of hundreds of length-scales make K numerically the
        // identity, so the value must equal a sum of normal log-densities.
        let points = grid_points(6, 0.0, 500.0);
        let y = [0.3, -0.8, 1.2, 0.1, -0.4, 0.9];
        let sigma2 = 0.6;
        let params = KernelParams::new(vec![1.0], sigma2).unwrap();
        let trend = TrendModel::new(vec![0.1, 0.001]).unwrap();
        let ll = log_likelihood(&points, &y, &params, &trend).unwrap();
        let oracle: f64 = (0..6)
            .map(|i| {
                let mu = 0.1 + 0.001 * points.get(i, 0);
                let z = (y[i] - mu) / sigma2.sqrt();
                -0.5 * (2.0 * std::f64::consts::PI * sigma2).ln() - 0.5 * z * z
            })
            .sum();
        assert_relative_eq!(ll, oracle, max_relative = 1e-10);
    }

    #[test]
    fn log_likelihood_is_invariant_to_matched_shifts() {
        let points = grid_points(8, 0.0, 3.0);
        let y: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).sin()).collect();
        let params = params1(0.9);
        let trend = TrendModel::new(vec![0.2, -0.1]).unwrap();
        let base = log_likelihood(&points, &y, &params, &trend).unwrap();
        let shifted_y: Vec<f64> = y.iter().map(|v| v + 5.0).collect();
        let shifted_trend = TrendModel::new(vec![0.2 + 5.0, -0.1]).unwrap();
        let shifted = log_likelihood(&points, &shifted_y, &params, &shifted_trend).unwrap();
        assert_relative_eq!(base, shifted, max_relative = 1e-9);
    }

    #[test]
    fn beta_hat_fits_constants_exactly() {
        let points = Matrix::from_rows(&[vec![0.0], vec![0.5], vec![1.3], vec![2.0]]).unwrap();
        let y = [4.2; 4];
        let trend = beta_hat(&points, &y, &params1(0.8)).unwrap();
        assert_relative_eq!(trend.coefficients()[0], 4.2, max_relative = 1e-10);
        assert!(trend.coefficients()[1].abs() < 1e-9);
    }

    #[test]
    fn beta_hat_reduces_to_ols_when_gram_is_identity() {
        // Tiny length-scale + separated points -> K = I numerically.
        let points = grid_points(5, 0.0, 40.0);
        let y = [1.0, -0.5, 2.0, 0.3, 1.7];
        let trend = beta_hat(&points, &y, &params1(1e-3)).unwrap();
        // Hand-rolled OLS normal equations for [1, x].
        let n = 5.0;
        let sx: f64 = (0..5).map(|i| points.get(i, 0)).sum();
        let sxx: f64 = (0..5).map(|i| points.get(i, 0).powi(2)).sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = (0..5).map(|i| points.get(i, 0) * y[i]).sum();
        let det = n * sxx - sx * sx;
        let intercept = (sxx * sy - sx * sxy) / det;
        let slope = (n * sxy - sx * sy) / det;
        assert_relative_eq!(trend.coefficients()[0], intercept, max_relative = 1e-8);
        assert_relative_eq!(trend.coefficients()[1], slope, max_relative = 1e-8);
    }

    #[test]
    fn beta_hat_recovers_exact_linear_data() {
        let points = Matrix::from_fn(12, 2, |i, j| ((i * 2 + j * 7) % 12) as f64 * 0.3);
        let y: Vec<f64> = (0..12)
            .map(|i| 1.5 - 2.0 * points.get(i, 0) + 0.75 * points.get(i, 1))
            .collect();
        let params = KernelParams::new(vec![1.0, 1.0], 1.0).unwrap();
        let trend = beta_hat(&points, &y, &params).unwrap();
        assert_relative_eq!(trend.coefficients()[0], 1.5, epsilon = 1e-8);
        assert_relative_eq!(trend.coefficients()[1], -2.0, epsilon = 1e-8);
        assert_relative_eq!(trend.coefficients()[2], 0.75, epsilon = 1e-8);
    }

    #[test]
    fn beta_hat_detects_rank_deficiency() {
        // A constant input column duplicates the intercept.
        let points = Matrix::from_fn(6, 1, |_, _| 3.0);
        let y = [1.0, 2.0, 3.0, 2.0, 1.0, 2.0];
        match beta_hat(&points, &y, &params1(1.0)) {
            Err(Error::DegenerateTrend) => {}
            other => panic!("expected DegenerateTrend, got {other:?}"),
        }
    }

    #[test]
    fn sigma2_is_zero_for_exact_fit_and_scales_quadratically() {
        let points = grid_points(7, 0.0, 3.0);
        let params = params1(0.8);
        let y_lin: Vec<f64> = (0..7).map(|i| 2.0 + 0.5 * points.get(i, 0)).collect();
        let trend = beta_hat(&points, &y_lin, &params).unwrap();
        let s0 = sigma2_hat(&points, &y_lin, &params, &trend).unwrap();
        assert!(s0 >= 0.0 && s0 < 1e-12, "exact fit gave sigma2 = {s0}");

        // Scale the GLS residual by c: the trend estimate is unchanged and
        // the variance estimate picks up c^2.
        let y: Vec<f64> = (0..7).map(|i| (1.3 * points.get(i, 0)).sin()).collect();
        let fitted = beta_hat(&points, &y, &params).unwrap();
        let base = sigma2_hat(&points, &y, &params, &fitted).unwrap();
        let c = 3.0;
        let scaled_y: Vec<f64> = (0..7)
            .map(|i| {
                let fit = fitted.eval(points.row(i));
                fit + c * (y[i] - fit)
            })
            .collect();
        let refitted = beta_hat(&points, &scaled_y, &params).unwrap();
        for (a, b) in refitted.coefficients().iter().zip(fitted.coefficients()) {
            assert_relative_eq!(a, b, epsilon = 1e-9);
        }
        let scaled = sigma2_hat(&points, &scaled_y, &params, &refitted).unwrap();
        assert_relative_eq!(scaled, c * c * base, max_relative = 1e-8);
    }

    #[test]
    fn sigma2_matches_ols_residual_with_identity_gram() {
        let points = grid_points(5, 0.0, 40.0);
        let y = [1.0, -0.5, 2.0, 0.3, 1.7];
        let params = params1(1e-3);
        let trend = beta_hat(&points, &y, &params).unwrap();
        let s2 = sigma2_hat(&points, &y, &params, &trend).unwrap();
        let mse: f64 = (0..5)
            .map(|i| (y[i] - trend.eval(points.row(i))).powi(2))
            .sum::<f64>()
            / 5.0;
        assert_relative_eq!(s2, mse, max_relative = 1e-8);
    }

    #[test]
    fn profile_log_likelihood_is_shift_invariant() {
        let points = grid_points(9, 0.0, 4.0);
        let y: Vec<f64> = (0..9).map(|i| (0.9 * points.get(i, 0)).cos()).collect();
        let base = profile_log_likelihood(&points, &y, &[0.7]).unwrap();
        let shifted: Vec<f64> = y.iter().map(|v| v + 123.0).collect();
        let moved = profile_log_likelihood(&points, &shifted, &[0.7]).unwrap();
        assert_relative_eq!(base, moved, max_relative = 1e-7);
    }

    #[test]
    fn profile_matches_two_point_closed_form_with_constant_trend() {
        // With n = 2 and a constant trend: beta = (y1 + y2)/2,
        // sigma2 = u^2 / (1 - k) for u = (y1 - y2)/2, and
        // Lp = -ln(sigma2) - 0.5 ln(1 - k^2), with k the off-diagonal
        // correlation. (The public first-order trend saturates two points,
        // hence the constant-basis seam here.)
        let h = 1.0;
        let delta = 1.0f64;
        let points = Matrix::from_rows(&[vec![0.0], vec![h]]).unwrap();
        let y = [1.0, 3.0];
        let value =
            profile_log_likelihood_with_basis(&points, &y, &[delta], TrendBasis::Constant).unwrap();
        let k = (-0.5 * (h / delta).powi(2)).exp();
        let u = (y[0] - y[1]) / 2.0;
        let sigma2 = u * u / (1.0 - k);
        let oracle = -sigma2.ln() - 0.5 * (1.0 - k * k).ln();
        assert_relative_eq!(value, oracle, max_relative = 1e-10);
    }

    #[test]
    fn profile_grid_argmax_recovers_generating_length_scale() {
        let points = grid_points(60, 0.0, 6.0);
        let y = sample_gp(&points, &[0.5], 0.0, 41);
        let mut best = (f64::NEG_INFINITY, 0.0);
        let mut delta = 0.05f64;
        while delta < 5.0 {
            if let Ok(v) = profile_log_likelihood(&points, &y, &[delta]) {
                if v > best.0 {
                    best = (v, delta);
                }
            }
            delta *= 1.1;
        }
        assert!(
            (0.25..=1.0).contains(&best.1),
            "grid argmax {} outside factor-2 band around 0.5",
            best.1
        );
    }

    #[test]
    fn fit_returns_objective_no_worse_than_any_start() {
        let points = grid_points(25, 0.0, 5.0);
        let y = sample_gp(&points, &[0.8], 1.0, 7);
        let config = SearchConfig::<f64>::default();
        let model = fit_hyperparameters(&points, &y, &config).unwrap();
        // Recreate the start set exactly as the fit does.
        let spread = 5.0f64;
        let bounds = Bounds::new(
            vec![(config.lower_scale * spread).ln()],
            vec![(config.upper_scale * spread).ln()],
        )
        .unwrap();
        let starts = lhs_sample(config.n_starts, &bounds, config.seed).unwrap();
        for s in 0..config.n_starts {
            let delta = starts.point(s)[0].exp();
            if let Ok(v) = profile_log_likelihood(&points, &y, &[delta]) {
                assert!(
                    model.objective() >= v - 1e-9,
                    "start {s} beats returned optimum"
                );
            }
        }
        assert!(model.start_index() < config.n_starts);
    }

    #[test]
    fn fit_recovers_synthetic_hyperparameters() {
        let points = grid_points(80, 0.0, 8.0);
        let y = sample_gp(&points, &[0.5], 0.0, 3);
        let model = fit_hyperparameters(&points, &y, &SearchConfig::default()).unwrap();
        let delta = model.kernel().length_scales()[0];
        let sigma2 = model.kernel().signal_variance();
        assert!((0.25..=1.0).contains(&delta), "recovered delta {delta}");
        assert!((0.3..=3.0).contains(&sigma2), "recovered sigma2 {sigma2}");
    }

    #[test]
    fn fit_survives_duplicated_training_points() {
        let mut rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 0.5]).collect();
        rows.push(vec![2.0]); // duplicate of row 4
        let points = Matrix::from_rows(&rows).unwrap();
        let mut y: Vec<f64> = (0..10).map(|i| (i as f64 * 0.4).sin()).collect();
        y.push((4.0f64 * 0.4).sin());
        let model = fit_hyperparameters(&points, &y, &SearchConfig::default()).unwrap();
        assert!(model.jitter() >= 0.0);
        // Interpolation still holds at the duplicated location.
        let p = model.predict_mean(&[2.0]).unwrap();
        assert_relative_eq!(p, (1.6f64).sin(), epsilon = 1e-5);
    }

    #[test]
    fn fit_rejects_underdetermined_problems() {
        let points = grid_points(2, 0.0, 1.0);
        let y = [0.0, 1.0];
        assert!(matches!(
            fit_hyperparameters(&points, &y, &SearchConfig::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn predictions_interpolate_and_revert_to_trend() {
        let points = grid_points(12, 0.0, 4.0);
        let y: Vec<f64> = (0..12).map(|i| (points.get(i, 0)).exp().sin()).collect();
        let model = fit_hyperparameters(&points, &y, &SearchConfig::default()).unwrap();
        assert!(model.jitter() <= 1e-8);
        for i in 0..12 {
            let p = model.predict_mean(points.row(i)).unwrap();
            assert!(
                (p - y[i]).abs() < 1e-6,
                "training point {i}: |{p} - {}| too large",
                y[i]
            );
        }
        // Far from the data the kernel terms vanish and the trend remains.
        let far = [1.0e4];
        let p = model.predict_mean(&far).unwrap();
        assert_relative_eq!(p, model.trend().eval(&far), max_relative = 1e-9);
    }

    #[test]
    fn record_round_trip_preserves_predictions() {
        let points = grid_points(15, 0.0, 3.0);
        let y: Vec<f64> = (0..15).map(|i| (2.0 * points.get(i, 0)).cos()).collect();
        let model = fit_hyperparameters(&points, &y, &SearchConfig::default()).unwrap();
        let json = serde_json::to_string(&model.to_record()).unwrap();
        let restored =
            GpModel::from_record(serde_json::from_str::<GpModelRecord<f64>>(&json).unwrap())
                .unwrap();
        for x in [0.0, 0.37, 1.5, 2.9] {
            assert_eq!(
                model.predict_mean(&[x]).unwrap(),
                restored.predict_mean(&[x]).unwrap(),
                "prediction differs after round trip at {x}"
            );
        }
        assert_eq!(model.jitter(), restored.jitter());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn kernel_is_symmetric_and_bounded(
            x in prop::collection::vec(-50.0f64..50.0, 3),
            y in prop::collection::vec(-50.0f64..50.0, 3),
            scales in prop::collection::vec(0.1f64..20.0, 3),
        ) {
            let quad: f64 = x.iter().zip(&y).zip(&scales)
                .map(|((a, b), s)| ((a - b) / s).powi(2))
                .sum();
            let params = KernelParams::new(scales, 1.0).unwrap();
            let a = se_kernel(&x, &y, &params).unwrap();
            let b = se_kernel(&y, &x, &params).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!((0.0..=1.0).contains(&a));
            // Positivity holds whenever exp cannot underflow.
            if quad < 1400.0 {
                prop_assert!(a > 0.0);
            }
        }
    }
}
