//! Latent-GP binary classification on synthetic data: kriging the ±1 labels
//! from nearest neighbours and thresholding at zero, with leave-one-out grid
//! search over nested hyperparameter subsets.

use std::collections::HashMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{distance, kernel_matrix, LocationSet, Matern, MaternParams, ReducedParams};
use crate::kriging::{kriging_weights, nearest_neighbors};
use crate::linalg::{cholesky_solve_in_place, dot, factor_with_ladder, spd_factor};
use crate::seed;

pub const DEFAULT_K: usize = 50;
pub const GRID_VALUES: usize = 10;
pub const DEFAULT_TEST_SIZE: usize = 500;
pub const DEFAULT_FEATURE_DIM: usize = 2;

/// Generating model of the synthetic latent field.
pub const TRUE_PARAMS: MaternParams = MaternParams {
    sigma2: 1.0,
    rho: 0.7,
    nu: 1.5,
    tau2: 0.01,
};

/// Values of parameters held fixed in partial searches.
pub const FIXED_RHO: f64 = 2.5;
pub const FIXED_OMEGA2: f64 = 0.01;

const RHO_RANGE: (f64, f64) = (0.01, 5.0);
const NU_RANGE: (f64, f64) = (0.01, 2.5);
const OMEGA2_RANGE: (f64, f64) = (0.001, 0.1);

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub features: LocationSet,
    pub labels: Vec<i8>,
}

impl LabeledSet {
    pub fn new(features: LocationSet, labels: Vec<i8>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} labels", features.len()),
                got: format!("{}", labels.len()),
            });
        }
        if let Some(bad) = labels.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::Domain(format!("labels must be +1 or -1, got {bad}")));
        }
        Ok(LabeledSet { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> LabeledSet {
        LabeledSet {
            features: self.features.select(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    fn responses(&self) -> Vec<f64> {
        self.labels.iter().map(|&l| f64::from(l)).collect()
    }
}

/// Synthetic labelled set with uniform features on `[0, 1]^q`.
pub fn synth_dataset(m: usize, q: usize, seed_value: u64) -> Result<LabeledSet> {
    synth_dataset_with(m, q, seed_value, false)
}

/// As [`synth_dataset`]; with `unit_norm` the feature rows are scaled to
/// norm 1 before the latent field is drawn on them.
///
/// The latent draw is centred on its sample median, so exactly `m/2` labels
/// are `+1`.
pub fn synth_dataset_with(m: usize, q: usize, seed_value: u64, unit_norm: bool) -> Result<LabeledSet> {
    if m == 0 || !m.is_multiple_of(2) {
        return Err(Error::Config(format!("m must be positive and even, got {m}")));
    }
    if q < 2 {
        return Err(Error::Config(format!("q must be >= 2, got {q}")));
    }
    let mut rng = seed::rng(seed_value, 0);
    let mut coords: Vec<f64> = (0..m * q).map(|_| rng.gen::<f64>()).collect();
    if unit_norm {
        for row in coords.chunks_mut(q) {
            let norm = dot(row, row).sqrt();
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    let features = LocationSet::new(q, coords)?;
    let cov = kernel_matrix(&features, &features, &TRUE_PARAMS)?;
    let factor = spd_factor(&cov)?;
    let z: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let lower = factor.lower().as_slice();
    let latent: Vec<f64> = (0..m).map(|i| dot(&lower[i * m..i * m + i + 1], &z[..=i])).collect();
    let mut sorted = latent.clone();
    sorted.sort_by(f64::total_cmp);
    let median = 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    let labels = latent.iter().map(|&v| if v > median { 1 } else { -1 }).collect();
    LabeledSet::new(features, labels)
}

fn threshold(mean: f64) -> i8 {
    if mean >= 0.0 {
        1
    } else {
        -1
    }
}

/// Labels for `test` from kriging against the `k` nearest training points.
/// A latent mean of exactly zero maps to `+1`.
pub fn classify(train: &LabeledSet, test: &LocationSet, params: ReducedParams, k: usize) -> Result<Vec<i8>> {
    if k == 0 || k > train.len() {
        return Err(Error::Domain(format!("k must be in 1..={}, got {k}", train.len())));
    }
    let y = train.responses();
    (0..test.len())
        .into_par_iter()
        .map(|t| {
            let p = test.point(t);
            let nn = nearest_neighbors(&train.features, p, k)?;
            let w = kriging_weights(&train.features.select(&nn), p, params)?;
            let mean: f64 = nn.iter().zip(&w.weights).map(|(&i, wi)| wi * y[i]).sum();
            Ok(threshold(mean))
        })
        .collect()
}

/// Parameter-independent leave-one-out bookkeeping: neighbour lists and a
/// deduplicated table of the pairwise distances they use.
#[derive(Debug, Clone)]
pub struct LooPlan {
    k: usize,
    labels: Vec<i8>,
    responses: Vec<f64>,
    distances: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
    /// Per point: `k(k−1)/2` pair slots of its neighbour block (lower triangle).
    block: Vec<Vec<u32>>,
    /// Per point: `k` pair slots from the point to its neighbours.
    cross: Vec<Vec<u32>>,
}

impl LooPlan {
    pub fn new(train: &LabeledSet, k: usize) -> Result<Self> {
        if k == 0 || train.len() < k + 1 {
            return Err(Error::Domain(format!(
                "leave-one-out needs 1 <= k < {}, got {k}",
                train.len()
            )));
        }
        let pts = &train.features;
        let mut slots: HashMap<(u32, u32), u32> = HashMap::new();
        let mut distances = Vec::new();
        let mut slot = |a: usize, b: usize| -> u32 {
            let key = if a < b { (a as u32, b as u32) } else { (b as u32, a as u32) };
            *slots.entry(key).or_insert_with(|| {
                distances.push(distance(pts.point(a), pts.point(b)));
                (distances.len() - 1) as u32
            })
        };
        let mut neighbors = Vec::with_capacity(train.len());
        let mut block = Vec::with_capacity(train.len());
        let mut cross = Vec::with_capacity(train.len());
        for i in 0..train.len() {
            // the point itself is its own unique nearest neighbour
            let nn: Vec<usize> = nearest_neighbors(pts, pts.point(i), k + 1)?
                .into_iter()
                .filter(|&j| j != i)
                .take(k)
                .collect();
            let mut b = Vec::with_capacity(k * (k - 1) / 2);
            for r in 1..k {
                for c in 0..r {
                    b.push(slot(nn[r], nn[c]));
                }
            }
            cross.push(nn.iter().map(|&j| slot(i, j)).collect());
            block.push(b);
            neighbors.push(nn);
        }
        Ok(LooPlan {
            k,
            labels: train.labels.clone(),
            responses: train.responses(),
            distances,
            neighbors,
            block,
            cross,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of distinct pair distances the plan evaluates per `(ρ, ν)`.
    pub fn unique_pairs(&self) -> usize {
        self.distances.len()
    }

    /// Correct leave-one-out predictions for one `(ρ, ν)` and each `ω²`.
    pub fn correct_counts(&self, rho: f64, nu: f64, omega2s: &[f64]) -> Result<Vec<usize>> {
        let kernel = Matern::new(rho, nu)?;
        let corr: Vec<f64> = self.distances.iter().map(|&d| kernel.correlation(d)).collect();
        let k = self.k;
        let mut a = vec![0.0; k * k];
        let mut lower = vec![0.0; k * k];
        let mut rhs = vec![0.0; k];
        omega2s
            .iter()
            .map(|&omega2| {
                let mut correct = 0;
                for i in 0..self.len() {
                    let mut slots = self.block[i].iter();
                    for r in 0..k {
                        for c in 0..r {
                            let v = corr[*slots.next().expect("block size") as usize];
                            a[r * k + c] = v;
                            a[c * k + r] = v;
                        }
                        a[r * k + r] = 1.0 + omega2;
                    }
                    factor_with_ladder(&a, k, &mut lower)?;
                    for (x, &s) in rhs.iter_mut().zip(&self.cross[i]) {
                        *x = corr[s as usize];
                    }
                    cholesky_solve_in_place(&lower, k, &mut rhs);
                    let mean: f64 = self.neighbors[i]
                        .iter()
                        .zip(&rhs)
                        .map(|(&j, w)| w * self.responses[j])
                        .sum();
                    if threshold(mean) == self.labels[i] {
                        correct += 1;
                    }
                }
                Ok(correct)
            })
            .collect()
    }
}

/// Fraction of training points recovered from their `k` nearest others.
pub fn loo_accuracy(train: &LabeledSet, params: ReducedParams, k: usize) -> Result<f64> {
    let plan = LooPlan::new(train, k)?;
    let correct = plan.correct_counts(params.rho, params.nu, &[params.omega2])?[0];
    Ok(correct as f64 / train.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subset {
    NuOnly,
    NuRho,
    All,
}

impl Subset {
    pub const ALL: [Subset; 3] = [Subset::NuOnly, Subset::NuRho, Subset::All];

    pub fn as_str(&self) -> &'static str {
        match self {
            Subset::NuOnly => "nu",
            Subset::NuRho => "nu-rho",
            Subset::All => "all",
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Candidate values per parameter; inactive parameters hold one value.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub subset: Subset,
    pub rho: Vec<f64>,
    pub nu: Vec<f64>,
    pub omega2: Vec<f64>,
}

impl GridSpec {
    /// Ten equispaced values over the default ranges for each active
    /// parameter.
    pub fn new(subset: Subset) -> Self {
        let nu = linspace(NU_RANGE.0, NU_RANGE.1, GRID_VALUES);
        let (rho, omega2) = match subset {
            Subset::NuOnly => (vec![FIXED_RHO], vec![FIXED_OMEGA2]),
            Subset::NuRho => (linspace(RHO_RANGE.0, RHO_RANGE.1, GRID_VALUES), vec![FIXED_OMEGA2]),
            Subset::All => (
                linspace(RHO_RANGE.0, RHO_RANGE.1, GRID_VALUES),
                linspace(OMEGA2_RANGE.0, OMEGA2_RANGE.1, GRID_VALUES),
            ),
        };
        GridSpec { subset, rho, nu, omega2 }
    }

    pub fn len(&self) -> usize {
        self.rho.len() * self.nu.len() * self.omega2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub subset: Subset,
    pub train_size: usize,
    pub iteration: usize,
    pub accuracy: f64,
    /// Seconds.
    pub wall_time: f64,
    pub evaluations: usize,
}

/// Scores every grid point by leave-one-out accuracy and returns the
/// coordinate-wise mean of the maximizers. The result's `accuracy` is the
/// best leave-one-out accuracy.
pub fn grid_search(train: &LabeledSet, grid: &GridSpec, k: usize) -> Result<(ReducedParams, TrialResult)> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let start = Instant::now();
    let plan = LooPlan::new(train, k)?;
    let pairs: Vec<(f64, f64)> = grid
        .rho
        .iter()
        .flat_map(|&rho| grid.nu.iter().map(move |&nu| (rho, nu)))
        .collect();
    // correlations are shared across the ω² values of one (ρ, ν)
    let counts: Vec<Vec<usize>> = pairs
        .par_iter()
        .map(|&(rho, nu)| plan.correct_counts(rho, nu, &grid.omega2))
        .collect::<Result<_>>()?;
    let best = counts.iter().flatten().copied().max().expect("non-empty grid");
    let (mut sum, mut ties) = ([0.0; 3], 0usize);
    for (&(rho, nu), row) in pairs.iter().zip(&counts) {
        for (&omega2, &c) in grid.omega2.iter().zip(row) {
            if c == best {
                sum[0] += rho;
                sum[1] += nu;
                sum[2] += omega2;
                ties += 1;
            }
        }
    }
    let t = ties as f64;
    let params = ReducedParams::new(sum[0] / t, sum[1] / t, sum[2] / t)?;
    Ok((
        params,
        TrialResult {
            subset: grid.subset,
            train_size: train.len(),
            iteration: 0,
            accuracy: best as f64 / train.len() as f64,
            wall_time: start.elapsed().as_secs_f64(),
            evaluations: grid.len(),
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub train_sizes: Vec<usize>,
    pub iterations: usize,
    pub seed: u64,
    pub k: usize,
    pub subsets: Vec<Subset>,
    pub test_size: usize,
    pub feature_dim: usize,
}

impl BenchmarkConfig {
    pub fn new(train_sizes: Vec<usize>, iterations: usize, seed: u64) -> Self {
        BenchmarkConfig {
            train_sizes,
            iterations,
            seed,
            k: DEFAULT_K,
            subsets: Subset::ALL.to_vec(),
            test_size: DEFAULT_TEST_SIZE,
            feature_dim: DEFAULT_FEATURE_DIM,
        }
    }
}

/// For each iteration a fresh synthetic set is split into a balanced test
/// set and nested balanced training sets; every subset is searched on each
/// training set and scored on the test set. Wall time covers search and
/// test prediction.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<Vec<TrialResult>> {
    let max_size = *config
        .train_sizes
        .iter()
        .max()
        .ok_or_else(|| Error::Config("no training sizes".into()))?;
    if config.train_sizes.iter().any(|&s| s < 2) {
        return Err(Error::Config("training sizes must be >= 2".into()));
    }
    if config.test_size == 0 || config.subsets.is_empty() {
        return Err(Error::Config("need a test set and at least one subset".into()));
    }
    let half = max_size.div_ceil(2) + config.test_size.div_ceil(2);
    let mut results = Vec::new();
    for it in 0..config.iterations {
        let data = synth_dataset(2 * half, config.feature_dim, seed::derive2(config.seed, it as u64, 0))?;
        let mut rng = seed::rng(seed::derive2(config.seed, it as u64, 1), 0);
        let mut pos: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] > 0).collect();
        let mut neg: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] < 0).collect();
        pos.shuffle(&mut rng);
        neg.shuffle(&mut rng);
        let (test_pos, test_neg) = (config.test_size / 2, config.test_size - config.test_size / 2);
        let test_idx: Vec<usize> = pos[..test_pos].iter().chain(&neg[..test_neg]).copied().collect();
        let test = data.select(&test_idx);
        let (pool_pos, pool_neg) = (&pos[test_pos..], &neg[test_neg..]);
        for &size in &config.train_sizes {
            let idx: Vec<usize> = pool_pos[..size / 2]
                .iter()
                .chain(&pool_neg[..size - size / 2])
                .copied()
                .collect();
            let train = data.select(&idx);
            let k = config.k.min(size - 1);
            for &subset in &config.subsets {
                let start = Instant::now();
                let (params, mut trial) = grid_search(&train, &GridSpec::new(subset), k)?;
                let predicted = classify(&train, &test.features, params, k)?;
                trial.wall_time = start.elapsed().as_secs_f64();
                let hits = predicted.iter().zip(&test.labels).filter(|(a, b)| a == b).count();
                trial.accuracy = hits as f64 / test.len() as f64;
                trial.iteration = it;
                results.push(trial);
            }
        }
    }
    Ok(results)
}

/// Mean accuracy and mean wall time per (subset, size).
pub fn summarize(trials: &[TrialResult], subset: Subset, train_size: usize) -> Option<(f64, f64)> {
    let sel: Vec<&TrialResult> = trials
        .iter()
        .filter(|t| t.subset == subset && t.train_size == train_size)
        .collect();
    if sel.is_empty() {
        return None;
    }
    let n = sel.len() as f64;
    Some((
        sel.iter().map(|t| t.accuracy).sum::<f64>() / n,
        sel.iter().map(|t| t.wall_time).sum::<f64>() / n,
    ))
}
