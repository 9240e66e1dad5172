//! Variance-based global sensitivity of kriging weights and kriging variance
//! over a hyperparameter box.
//!
//! Total-effect indices use Jansen's pick-freeze estimator on i.i.d. uniform
//! matrices `A` and `B` with the column-swapped hybrids `A_B^(i)`:
//!
//! ```text
//! T_i = Σ_j (f(A_j) − f(A_B^(i)_j))² / (2N · Var̂ f)
//! ```
//!
//! `Var̂ f` comes from a separate Latin hypercube sample of the same size, so
//! a study costs `N·(k + 2)` evaluations for `k` inputs.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{make_grid, LocationSet, MaternParams, ReducedParams};
use crate::kriging::{kriging_variance, kriging_weights};
use crate::linalg::Matrix;
use crate::seed;

pub const SIGMA2: &str = "sigma2";
pub const RHO: &str = "rho";
pub const NU: &str = "nu";
pub const OMEGA2: &str = "omega2";
/// Name of the discrete training-location factor.
pub const LOCATION: &str = "x";

pub const BOOTSTRAP_RESAMPLES: usize = 200;
pub const MIN_BASE_COUNT: usize = 256;
pub const DEFAULT_BASE_COUNT: usize = 1024;
/// Estimates below this are flagged as outside estimator noise.
pub const NOISE_FLOOR: f64 = -0.05;

const STREAM_A: u64 = 0;
const STREAM_B: u64 = 1;
const STREAM_LHS: u64 = 2;
const STREAM_BOOTSTRAP: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

/// Active parameter ranges plus parameters held at fixed values.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBox {
    active: Vec<ParamRange>,
    fixed: Vec<(String, f64)>,
}

impl ParamBox {
    pub fn new(active: Vec<ParamRange>) -> Result<Self> {
        for (i, r) in active.iter().enumerate() {
            if !(r.min.is_finite() && r.max.is_finite() && r.min < r.max) {
                return Err(Error::Config(format!(
                    "degenerate range for {}: [{}, {}]",
                    r.name, r.min, r.max
                )));
            }
            if active[..i].iter().any(|o| o.name == r.name) {
                return Err(Error::Config(format!("duplicate parameter {}", r.name)));
            }
        }
        Ok(ParamBox {
            active,
            fixed: Vec::new(),
        })
    }

    /// Ranges used for the Matérn sensitivity studies:
    /// σ² ∈ [0.1, 5], ρ ∈ [0.01, 5], ν ∈ [0.01, 2.5], ω² ∈ [0.001, 0.1].
    pub fn matern_default() -> Self {
        let r = |name: &str, min, max| ParamRange {
            name: name.into(),
            min,
            max,
        };
        ParamBox {
            active: vec![
                r(SIGMA2, 0.1, 5.0),
                r(RHO, 0.01, 5.0),
                r(NU, 0.01, 2.5),
                r(OMEGA2, 0.001, 0.1),
            ],
            fixed: Vec::new(),
        }
    }

    /// Moves `name` from the active set to a fixed value.
    pub fn fix(mut self, name: &str, value: f64) -> Result<Self> {
        let pos = self
            .active
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::Config(format!("unknown parameter {name}")))?;
        self.active.remove(pos);
        self.fixed.push((name.to_string(), value));
        Ok(self)
    }

    /// Drops `name` entirely (neither active nor fixed).
    pub fn without(mut self, name: &str) -> Self {
        self.active.retain(|r| r.name != name);
        self.fixed.retain(|(n, _)| n != name);
        self
    }

    pub fn active(&self) -> &[ParamRange] {
        &self.active
    }

    pub fn fixed(&self) -> &[(String, f64)] {
        &self.fixed
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn range(&self, name: &str) -> Option<&ParamRange> {
        self.active.iter().find(|r| r.name == name)
    }

    pub fn midpoint(&self, name: &str) -> Option<f64> {
        self.range(name)
            .map(|r| 0.5 * (r.min + r.max))
            .or_else(|| self.fixed.iter().find(|(n, _)| n == name).map(|(_, v)| *v))
    }
}

/// Stratified unit-cube sample: each column holds one point per stratum,
/// jittered uniformly within it, in random order.
fn lhs_unit(count: usize, dims: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![0.0; dims]; count];
    let mut perm: Vec<usize> = (0..count).collect();
    for j in 0..dims {
        // Fisher–Yates
        for i in (1..count).rev() {
            let k = rng.gen_range(0..=i);
            perm.swap(i, k);
        }
        for (i, row) in rows.iter_mut().enumerate() {
            let u: f64 = rng.gen();
            row[j] = (perm[i] as f64 + u) / count as f64;
        }
    }
    rows
}

/// `count × p` Latin hypercube design scaled to the active ranges.
pub fn lhs_sample(count: usize, bounds: &ParamBox, seed_value: u64) -> Result<Matrix> {
    let p = bounds.len();
    if p == 0 {
        return Err(Error::Config("parameter box has no active parameters".into()));
    }
    if count < p {
        return Err(Error::Config(format!("LHS needs count >= {p}, got {count}")));
    }
    let mut rng = seed::rng(seed_value, STREAM_LHS);
    let unit = lhs_unit(count, p, &mut rng);
    Ok(Matrix::from_fn(count, p, |i, j| {
        let r = &bounds.active[j];
        r.min + unit[i][j] * (r.max - r.min)
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputEffect {
    pub name: String,
    pub total_index: f64,
    pub percent_share: f64,
    /// Half-width of the 95% bootstrap interval of `total_index`.
    pub bootstrap_halfwidth: f64,
    /// Half-width of the 95% bootstrap interval of `percent_share`.
    pub share_halfwidth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobolResult {
    pub inputs: Vec<InputEffect>,
    pub base_count: usize,
    pub evaluations: usize,
}

impl SobolResult {
    pub fn get(&self, name: &str) -> Option<&InputEffect> {
        self.inputs.iter().find(|e| e.name == name)
    }

    pub fn share(&self, name: &str) -> Option<f64> {
        self.get(name).map(|e| e.percent_share)
    }

    /// True if any total index is below the estimator noise floor.
    pub fn below_noise_floor(&self) -> bool {
        self.inputs.iter().any(|e| e.total_index < NOISE_FLOOR)
    }
}

#[derive(Debug, Clone, Copy)]
enum Factor {
    Continuous { min: f64, max: f64 },
    Discrete { levels: usize },
}

impl Factor {
    fn map(&self, u: f64) -> f64 {
        match *self {
            Factor::Continuous { min, max } => min + u * (max - min),
            Factor::Discrete { levels } => ((u * levels as f64).floor() as usize).min(levels - 1) as f64,
        }
    }
}

fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

fn quantile_halfwidth(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let last = (v.len() - 1) as f64;
    let lo = v[(0.025 * last).floor() as usize];
    let hi = v[(0.975 * last).ceil() as usize];
    0.5 * (hi - lo)
}

/// Total-effect Sobol indices of `f` over the active inputs of `bounds`,
/// optionally followed by a discrete factor uniform on
/// `{0, …, location_levels − 1}`.
///
/// `f` receives the active inputs in box order, then the location index
/// (as `f64`) when present.
pub fn sobol_total<F>(
    f: F,
    bounds: &ParamBox,
    location_levels: Option<usize>,
    base_count: usize,
    seed_value: u64,
) -> Result<SobolResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if base_count < MIN_BASE_COUNT {
        return Err(Error::Config(format!(
            "base_count must be >= {MIN_BASE_COUNT}, got {base_count}"
        )));
    }
    let mut factors: Vec<Factor> = bounds
        .active
        .iter()
        .map(|r| Factor::Continuous { min: r.min, max: r.max })
        .collect();
    let mut names: Vec<String> = bounds.active.iter().map(|r| r.name.clone()).collect();
    if let Some(levels) = location_levels {
        if levels == 0 {
            return Err(Error::Config("location factor needs at least one level".into()));
        }
        factors.push(Factor::Discrete { levels });
        names.push(LOCATION.into());
    }
    let k = factors.len();
    if k == 0 {
        return Err(Error::Config("no inputs to analyse".into()));
    }
    let n = base_count;

    let draw = |stream| {
        let mut rng = seed::rng(seed_value, stream);
        (0..n)
            .map(|_| (0..k).map(|_| rng.gen::<f64>()).collect::<Vec<f64>>())
            .collect::<Vec<_>>()
    };
    let a = draw(STREAM_A);
    let b = draw(STREAM_B);
    let lhs = lhs_unit(n, k, &mut seed::rng(seed_value, STREAM_LHS));

    // evaluation order: A, then A_B^(0..k), then the LHS sample
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n * (k + 2));
    points.extend(a.iter().cloned());
    for i in 0..k {
        for j in 0..n {
            let mut row = a[j].clone();
            row[i] = b[j][i];
            points.push(row);
        }
    }
    points.extend(lhs);
    let values: Vec<f64> = points
        .par_iter()
        .map(|u| {
            let x: Vec<f64> = u.iter().zip(&factors).map(|(&u, f)| f.map(u)).collect();
            f(&x).and_then(|v| {
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Evaluation(format!("non-finite response at {x:?}")))
                }
            })
        })
        .collect::<Result<_>>()?;

    let f_a = &values[..n];
    let f_ab: Vec<&[f64]> = (0..k).map(|i| &values[n * (i + 1)..n * (i + 2)]).collect();
    let f_l = &values[n * (k + 1)..];

    let totals = |rows: &[usize], lrows: &[usize]| -> Result<Vec<f64>> {
        let lv: Vec<f64> = lrows.iter().map(|&j| f_l[j]).collect();
        let var = sample_variance(&lv);
        if !(var > 0.0) {
            return Err(Error::ZeroVariance);
        }
        Ok((0..k)
            .map(|i| {
                rows.iter()
                    .map(|&j| (f_a[j] - f_ab[i][j]).powi(2))
                    .sum::<f64>()
                    / (2.0 * n as f64 * var)
            })
            .collect())
    };
    let shares = |t: &[f64]| -> Result<Vec<f64>> {
        let sum: f64 = t.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::ZeroVariance);
        }
        Ok(t.iter().map(|x| 100.0 * x / sum).collect())
    };

    let identity: Vec<usize> = (0..n).collect();
    let t = totals(&identity, &identity)?;
    let s = shares(&t)?;

    let mut rng = seed::rng(seed_value, STREAM_BOOTSTRAP);
    let mut boot_t = vec![Vec::with_capacity(BOOTSTRAP_RESAMPLES); k];
    let mut boot_s = vec![Vec::with_capacity(BOOTSTRAP_RESAMPLES); k];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let lrows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        // a degenerate resample carries no information; skip it
        let Ok(tb) = totals(&rows, &lrows) else { continue };
        let Ok(sb) = shares(&tb) else { continue };
        for i in 0..k {
            boot_t[i].push(tb[i]);
            boot_s[i].push(sb[i]);
        }
    }

    let inputs = (0..k)
        .map(|i| InputEffect {
            name: names[i].clone(),
            total_index: t[i],
            percent_share: s[i],
            bootstrap_halfwidth: if boot_t[i].is_empty() { 0.0 } else { quantile_halfwidth(boot_t[i].clone()) },
            share_halfwidth: if boot_s[i].is_empty() { 0.0 } else { quantile_halfwidth(boot_s[i].clone()) },
        })
        .collect();
    Ok(SobolResult {
        inputs,
        base_count: n,
        evaluations: values.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Response {
    Weights,
    PredictionVariance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Omega2Mode {
    Fixed(f64),
    Varying,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub grid_dimension: usize,
    pub response: Response,
    pub omega2_mode: Omega2Mode,
    /// σ² is an input only for the prediction variance; weights ignore it.
    pub include_sigma2: bool,
    /// Base sample size `N`.
    pub sample_budget: usize,
    pub seed: u64,
}

impl StudyConfig {
    pub fn new(grid_dimension: usize, response: Response, omega2_mode: Omega2Mode, sample_budget: usize, seed: u64) -> Self {
        StudyConfig {
            grid_dimension,
            response,
            omega2_mode,
            include_sigma2: response == Response::PredictionVariance,
            sample_budget,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.grid_dimension) {
            return Err(Error::Config(format!(
                "grid dimension must be 1 or 2, got {}",
                self.grid_dimension
            )));
        }
        if self.include_sigma2 && self.response == Response::Weights {
            return Err(Error::Config("kriging weights do not depend on sigma2".into()));
        }
        if let Omega2Mode::Fixed(w) = self.omega2_mode {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Config(format!("fixed omega2 must be >= 0, got {w}")));
            }
        }
        Ok(())
    }

    /// Short row label in the style of the sensitivity tables.
    pub fn label(&self) -> String {
        match (self.response, self.omega2_mode) {
            (Response::Weights, Omega2Mode::Fixed(w)) => format!("weights omega2={w}"),
            (Response::Weights, Omega2Mode::Varying) => "weights omega2 vary".into(),
            (Response::PredictionVariance, Omega2Mode::Varying) => "prediction variance".into(),
            (Response::PredictionVariance, Omega2Mode::Fixed(w)) => format!("prediction variance omega2={w}"),
        }
    }
}

/// The six rows of a sensitivity table for one grid dimension.
pub fn table_presets(grid_dimension: usize, base_count: usize, seed_value: u64) -> Vec<StudyConfig> {
    let mut rows: Vec<StudyConfig> = [0.0, 0.001, 0.01, 0.1]
        .iter()
        .map(|&w| StudyConfig::new(grid_dimension, Response::Weights, Omega2Mode::Fixed(w), base_count, seed_value))
        .collect();
    rows.push(StudyConfig::new(grid_dimension, Response::Weights, Omega2Mode::Varying, base_count, seed_value));
    rows.push(StudyConfig::new(
        grid_dimension,
        Response::PredictionVariance,
        Omega2Mode::Varying,
        base_count,
        seed_value,
    ));
    rows
}

/// Fixed training grid and prediction location of a study.
///
/// 1-D: 21 equispaced points on `[0, 1]` minus `x⋆ = 0.5`.
/// 2-D: the 4×4 lattice on `[0, 1]²` with `x⋆` at its centre.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyGrid {
    pub train: LocationSet,
    pub pred: Vec<f64>,
}

impl StudyGrid {
    pub fn new(dimension: usize) -> Result<Self> {
        match dimension {
            1 => Ok(StudyGrid {
                train: make_grid(1, 21, Some(&[0.5]))?,
                pred: vec![0.5],
            }),
            2 => Ok(StudyGrid {
                train: make_grid(2, 4, None)?,
                pred: vec![0.5, 0.5],
            }),
            d => Err(Error::Config(format!("grid dimension must be 1 or 2, got {d}"))),
        }
    }

    pub fn len(&self) -> usize {
        self.train.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train.is_empty()
    }
}

/// The `location_index`-th kriging weight at `theta`.
pub fn response_weights(grid: &StudyGrid, theta: &ReducedParams, location_index: usize) -> Result<f64> {
    if location_index >= grid.len() {
        return Err(Error::Domain(format!(
            "location index {location_index} out of range 0..{}",
            grid.len()
        )));
    }
    Ok(kriging_weights(&grid.train, &grid.pred, *theta)?.weights[location_index])
}

/// Kriging variance on the study grid.
pub fn response_variance(grid: &StudyGrid, params: &MaternParams) -> Result<f64> {
    kriging_variance(&grid.train, &grid.pred, params)
}

/// Runs one table row: wires the response, the active inputs and the
/// default box into [`sobol_total`].
pub fn run_study(config: &StudyConfig) -> Result<SobolResult> {
    config.validate()?;
    let grid = StudyGrid::new(config.grid_dimension)?;
    let mut bounds = ParamBox::matern_default();
    if !config.include_sigma2 {
        bounds = bounds.without(SIGMA2);
    }
    if let Omega2Mode::Fixed(w) = config.omega2_mode {
        bounds = bounds.fix(OMEGA2, w)?;
    }
    let names: Vec<String> = bounds.active().iter().map(|r| r.name.clone()).collect();
    let pos = |name: &str| names.iter().position(|n| n == name);
    let (i_rho, i_nu) = (pos(RHO).expect("rho active"), pos(NU).expect("nu active"));
    let i_omega2 = pos(OMEGA2);
    let i_sigma2 = pos(SIGMA2);
    let fixed_omega2 = match config.omega2_mode {
        Omega2Mode::Fixed(w) => w,
        Omega2Mode::Varying => f64::NAN,
    };
    let omega2_of = |x: &[f64]| i_omega2.map_or(fixed_omega2, |i| x[i]);

    match config.response {
        Response::Weights => {
            let n_active = names.len();
            sobol_total(
                |x| {
                    let theta = ReducedParams::new(x[i_rho], x[i_nu], omega2_of(x))?;
                    response_weights(&grid, &theta, x[n_active] as usize)
                },
                &bounds,
                Some(grid.len()),
                config.sample_budget,
                config.seed,
            )
        }
        Response::PredictionVariance => {
            let i_sigma2 = i_sigma2.ok_or_else(|| Error::Config("variance study needs sigma2".into()))?;
            sobol_total(
                |x| {
                    let sigma2 = x[i_sigma2];
                    let params = MaternParams::new(sigma2, x[i_rho], x[i_nu], omega2_of(x) * sigma2)?;
                    response_variance(&grid, &params)
                },
                &bounds,
                None,
                config.sample_budget,
                config.seed,
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(names: &[&str]) -> ParamBox {
        ParamBox::new(
            names
                .iter()
                .map(|n| ParamRange {
                    name: n.to_string(),
                    min: 0.0,
                    max: 1.0,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn lhs_quartiles() {
        let m = lhs_sample(4, &unit_box(&["a"]), 3).unwrap();
        let mut strata: Vec<usize> = m.column(0).iter().map(|v| (v * 4.0).floor() as usize).collect();
        strata.sort();
        assert_eq!(strata, vec![0, 1, 2, 3]);
    }

    #[test]
    fn lhs_is_deterministic_and_scaled() {
        let b = ParamBox::matern_default();
        let x = lhs_sample(50, &b, 9).unwrap();
        assert_eq!(x, lhs_sample(50, &b, 9).unwrap());
        assert_ne!(x, lhs_sample(50, &b, 10).unwrap());
        for (j, r) in b.active().iter().enumerate() {
            assert!(x.column(j).iter().all(|v| (r.min..=r.max).contains(v)));
        }
        assert!(lhs_sample(2, &b, 0).is_err());
    }

    #[test]
    fn degenerate_box() {
        let r = ParamRange {
            name: "a".into(),
            min: 1.0,
            max: 1.0,
        };
        assert!(ParamBox::new(vec![r]).is_err());
    }

    #[test]
    fn single_active_input_takes_everything() {
        let r = sobol_total(|x| Ok(x[0]), &unit_box(&["a", "b", "c"]), None, 1024, 1).unwrap();
        assert!((r.share("a").unwrap() - 100.0).abs() < 1e-9);
        assert_eq!(r.share("b").unwrap(), 0.0);
        assert_eq!(r.evaluations, 1024 * 5);
        let total: f64 = r.inputs.iter().map(|e| e.percent_share).sum();
        assert!((total - 100.0).abs() < 1e-9);
    }

    #[test]
    fn zero_variance_is_an_error() {
        let r = sobol_total(|_| Ok(2.0), &unit_box(&["a"]), None, 256, 1);
        assert!(matches!(r, Err(Error::ZeroVariance)));
        assert!(sobol_total(|x| Ok(x[0]), &unit_box(&["a"]), None, 100, 1).is_err());
    }

    #[test]
    fn discrete_factor_levels() {
        let r = sobol_total(
            |x| {
                assert!(x[1] == x[1].floor() && (0.0..5.0).contains(&x[1]));
                Ok(x[1])
            },
            &unit_box(&["a"]),
            Some(5),
            256,
            4,
        )
        .unwrap();
        assert_eq!(r.inputs[1].name, LOCATION);
        assert!((r.share(LOCATION).unwrap() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn study_grids() {
        let g1 = StudyGrid::new(1).unwrap();
        assert_eq!(g1.len(), 20);
        let g2 = StudyGrid::new(2).unwrap();
        assert_eq!(g2.len(), 16);
        assert!(StudyGrid::new(3).is_err());
    }

    #[test]
    fn weights_symmetry_and_range() {
        let g = StudyGrid::new(1).unwrap();
        let theta = ReducedParams::new(1.2, 0.9, 0.01).unwrap();
        for i in 0..10 {
            let a = response_weights(&g, &theta, i).unwrap();
            let b = response_weights(&g, &theta, 19 - i).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        assert!(response_weights(&g, &theta, 20).is_err());
    }

    #[test]
    fn variance_scaling_and_limit() {
        let g = StudyGrid::new(1).unwrap();
        let p = MaternParams::new(1.3, 0.8, 1.1, 0.013).unwrap();
        let q = MaternParams::new(2.6, 0.8, 1.1, 0.026).unwrap();
        let (a, b) = (response_variance(&g, &p).unwrap(), response_variance(&g, &q).unwrap());
        assert!((b - 2.0 * a).abs() <= 1e-12 * b);
        let huge = MaternParams::new(1.3, 0.8, 1.1, 1.3e6).unwrap();
        let v = response_variance(&g, &huge).unwrap();
        assert!(((v - 1.3) / 1.3).abs() < 1e-3);
    }

    #[test]
    fn config_validation() {
        let mut c = StudyConfig::new(1, Response::Weights, Omega2Mode::Varying, 256, 0);
        assert!(!c.include_sigma2);
        c.include_sigma2 = true;
        assert!(c.validate().is_err());
        let c = StudyConfig::new(3, Response::Weights, Omega2Mode::Varying, 256, 0);
        assert!(c.validate().is_err());
        assert_eq!(table_presets(1, 256, 0).len(), 6);
    }
}
