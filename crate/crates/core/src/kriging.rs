//! Kriging weights, predicted mean, kriging variance and the Gaussian
//! log-likelihood, all in the reduced `{ρ, ν, ω²}` parameterization where
//! possible.
//!
//! Responses are assumed de-trended (mean zero); there is no trend model.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::{correlation_matrix, distance, LocationSet, Matern, MaternParams, ReducedParams};
use crate::linalg::{dot, spd_factor, Matrix, SpdFactor};

/// Negative kriging variances down to this fraction of σ² are rounding.
pub const VARIANCE_CLAMP_TOL: f64 = 1e-10;

/// Factored kriging system for one prediction location.
#[derive(Debug, Clone)]
pub struct KrigingSystem {
    train: LocationSet,
    pred: Vec<f64>,
    params: ReducedParams,
    factor: SpdFactor,
    cross: Vec<f64>,
}

impl KrigingSystem {
    /// Factors `Ω(x,x) + ω²I` and forms the cross-correlations `Ω(x⋆,x)`.
    pub fn new(train: &LocationSet, pred: &[f64], params: ReducedParams) -> Result<Self> {
        train.check_point(pred)?;
        let kernel = Matern::new(params.rho, params.nu)?;
        let mut omega = correlation_matrix(train, train, &kernel)?;
        for i in 0..train.len() {
            omega[(i, i)] += params.omega2;
        }
        let factor = spd_factor(&omega)?;
        let cross = train
            .points()
            .map(|p| kernel.correlation(distance(p, pred)))
            .collect();
        Ok(KrigingSystem {
            train: train.clone(),
            pred: pred.to_vec(),
            params,
            factor,
            cross,
        })
    }

    pub fn params(&self) -> &ReducedParams {
        &self.params
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }

    pub fn cross(&self) -> &[f64] {
        &self.cross
    }

    pub fn weights(&self) -> Result<KrigingWeights> {
        Ok(KrigingWeights {
            weights: self.factor.solve_vec(&self.cross)?,
            train: self.train.clone(),
            pred: self.pred.clone(),
        })
    }

    /// `1 − Ω(x⋆,x)(Ω + ω²I)⁻¹Ω(x,x⋆)`: the kriging variance per unit σ²,
    /// before clamping.
    pub fn unit_variance(&self) -> Result<f64> {
        let w = self.factor.solve_vec(&self.cross)?;
        Ok(1.0 - dot(&w, &self.cross))
    }

    pub fn variance(&self, sigma2: f64) -> Result<f64> {
        clamp_variance(sigma2 * self.unit_variance()?, sigma2)
    }
}

fn clamp_variance(v: f64, sigma2: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -VARIANCE_CLAMP_TOL * sigma2 {
        Ok(0.0)
    } else {
        Err(Error::NegativeVariance(v))
    }
}

/// Weight vector applied to the training responses.
#[derive(Debug, Clone, PartialEq)]
pub struct KrigingWeights {
    pub weights: Vec<f64>,
    pub train: LocationSet,
    pub pred: Vec<f64>,
}

impl KrigingWeights {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

pub fn kriging_weights(train: &LocationSet, pred: &[f64], params: ReducedParams) -> Result<KrigingWeights> {
    KrigingSystem::new(train, pred, params)?.weights()
}

/// Best linear unbiased predictor `Z·y` for de-trended `y`.
pub fn predict_mean(weights: &KrigingWeights, y: &[f64]) -> Result<f64> {
    if y.len() != weights.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} responses", weights.len()),
            got: format!("{}", y.len()),
        });
    }
    Ok(dot(&weights.weights, y))
}

/// Kriging variance with `Ω(x⋆,x⋆) = 1`; the empty training set gives σ².
pub fn kriging_variance(train: &LocationSet, pred: &[f64], params: &MaternParams) -> Result<f64> {
    if train.is_empty() {
        return Ok(params.sigma2);
    }
    KrigingSystem::new(train, pred, params.reduced())?.variance(params.sigma2)
}

/// Gaussian log-likelihood
///
/// ```text
/// −(p/2)·ln 2π − ½ ln|K| − ½ yᵀK⁻¹y
/// ```
///
/// where `p` is the input (location) dimension, not the number of
/// observations. For the usual density normalization add
/// `(p − n)/2 · ln 2π`.
pub fn log_likelihood(train: &LocationSet, y: &[f64], params: &MaternParams) -> Result<f64> {
    if y.len() != train.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} responses", train.len()),
            got: format!("{}", y.len()),
        });
    }
    let kernel = Matern::new(params.rho, params.nu)?;
    let omega = correlation_matrix(train, train, &kernel)?;
    let n = train.len();
    let k = Matrix::from_fn(n, n, |i, j| {
        params.sigma2 * omega[(i, j)] + if i == j { params.tau2 } else { 0.0 }
    });
    let factor = spd_factor(&k)?;
    let alpha = factor.solve_vec(y)?;
    let p = train.dimension() as f64;
    Ok(-0.5 * p * (2.0 * PI).ln() - 0.5 * factor.log_det() - 0.5 * dot(y, &alpha))
}

/// Indices of the `k` training points closest to `pred`; ties go to the
/// lower index.
pub fn nearest_neighbors(train: &LocationSet, pred: &[f64], k: usize) -> Result<Vec<usize>> {
    train.check_point(pred)?;
    if k == 0 || k > train.len() {
        return Err(Error::Domain(format!(
            "k must be in 1..={}, got {k}",
            train.len()
        )));
    }
    let mut order: Vec<(f64, usize)> = train
        .points()
        .enumerate()
        .map(|(i, p)| (distance(p, pred), i))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < order.len() {
        order.select_nth_unstable_by(k - 1, cmp);
        order.truncate(k);
    }
    order.sort_unstable_by(cmp);
    Ok(order.into_iter().map(|(_, i)| i).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{make_grid, matern_correlation};

    #[test]
    fn single_point_weight() {
        let train = LocationSet::from_points(&[vec![0.3]]).unwrap();
        let params = ReducedParams::new(0.8, 1.3, 0.05).unwrap();
        let w = kriging_weights(&train, &[0.7], params).unwrap();
        let c = matern_correlation(0.4, 0.8, 1.3).unwrap();
        assert!((w.weights[0] - c / 1.05).abs() < 1e-15);
    }

    #[test]
    fn symmetric_grid_gives_palindromic_weights() {
        let train = make_grid(1, 21, Some(&[0.5])).unwrap();
        let params = ReducedParams::new(0.6, 1.7, 0.01).unwrap();
        let w = kriging_weights(&train, &[0.5], params).unwrap();
        let n = w.len();
        for i in 0..n / 2 {
            assert!((w.weights[i] - w.weights[n - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_is_a_dot_product() {
        let train = make_grid(1, 5, None).unwrap();
        let w = KrigingWeights {
            weights: vec![0.0, 0.0, 1.0, 0.0, 0.0],
            train,
            pred: vec![0.5],
        };
        assert_eq!(predict_mean(&w, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), 3.0);
        assert_eq!(predict_mean(&w, &[0.0; 5]).unwrap(), 0.0);
        assert!(predict_mean(&w, &[0.0; 4]).is_err());
    }

    #[test]
    fn coincident_point_without_nugget_interpolates() {
        let train = make_grid(1, 11, None).unwrap();
        let params = ReducedParams::new(0.3, 0.5, 0.0).unwrap();
        let w = kriging_weights(&train, &[0.4], params).unwrap();
        for (i, &v) in w.weights.iter().enumerate() {
            let want = if i == 4 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-6, "i={i} v={v}");
        }
    }

    #[test]
    fn variance_special_cases() {
        let p = MaternParams::new(1.7, 0.5, 1.2, 0.0).unwrap();
        assert_eq!(kriging_variance(&LocationSet::empty(1), &[0.5], &p).unwrap(), 1.7);
        let train = LocationSet::from_points(&[vec![0.1]]).unwrap();
        let v = kriging_variance(&train, &[0.4], &p).unwrap();
        let c = matern_correlation(0.3, 0.5, 1.2).unwrap();
        assert!((v - 1.7 * (1.0 - c * c)).abs() < 1e-14);
    }

    #[test]
    fn clamping() {
        assert_eq!(clamp_variance(-1e-12, 1.0).unwrap(), 0.0);
        assert!(matches!(clamp_variance(-1e-6, 1.0), Err(Error::NegativeVariance(_))));
    }

    #[test]
    fn log_likelihood_scalar() {
        let train = LocationSet::from_points(&[vec![0.0]]).unwrap();
        let p = MaternParams::new(1.0, 1.0, 1.0, 0.0).unwrap();
        let ll = log_likelihood(&train, &[0.0], &p).unwrap();
        assert!((ll + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
    }

    #[test]
    fn log_likelihood_diagonal_limit() {
        // ρ tiny relative to spacing: K = (σ² + τ²)I
        let train = make_grid(1, 6, None).unwrap();
        let p = MaternParams::new(1.3, 1e-4, 0.5, 0.2).unwrap();
        let y = [0.3, -1.2, 0.8, 0.0, 2.1, -0.4];
        let ll = log_likelihood(&train, &y, &p).unwrap();
        let s2 = 1.5;
        let independent: f64 = y
            .iter()
            .map(|v| -0.5 * (2.0 * PI * s2).ln() - 0.5 * v * v / s2)
            .sum();
        // the leading constant counts input dimension (1), not n (6)
        let adjust = 0.5 * (y.len() as f64 - 1.0) * (2.0 * PI).ln();
        assert!((ll - (independent + adjust)).abs() < 1e-12);
    }

    #[test]
    fn neighbors() {
        let train = make_grid(1, 21, Some(&[0.5])).unwrap();
        let nn = nearest_neighbors(&train, &[0.5], 2).unwrap();
        assert_eq!(nn, vec![9, 10]);
        let all = nearest_neighbors(&train, &[0.5], train.len()).unwrap();
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, (0..20).collect::<Vec<_>>());
        assert!(nearest_neighbors(&train, &[0.5], 0).is_err());
        assert!(nearest_neighbors(&train, &[0.5], 21).is_err());
        // equidistant pair resolves to the lower index first
        let pair = LocationSet::from_points(&[vec![1.0], vec![0.0]]).unwrap();
        assert_eq!(nearest_neighbors(&pair, &[0.5], 1).unwrap(), vec![0]);
    }
}
