//! Local sensitivity matrices and the collinearity index
//! `γ = 1/√λ_min(ŜᵀŜ)` of column-normalized sensitivities, plus the `(ν, ρ)`
//! scan over correlation-curve and kriging-weight outputs.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{distance, make_grid, LocationSet, Matern, ReducedParams};
use crate::kriging::kriging_weights;
use crate::linalg::{sym_eigenvalues, Matrix};

pub const DEFAULT_REL_STEP: f64 = 1e-5;
/// Reported in place of +∞ when ŜᵀŜ is numerically singular.
pub const GAMMA_CAP: f64 = 1e12;
pub const IDENTIFIABLE_BELOW: f64 = 10.0;
pub const COLLINEAR_ABOVE: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Raw,
    UnitColumn,
}

/// `n × p` matrix of `∂yᵢ/∂θⱼ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMatrix {
    entries: Matrix,
    normalization: Normalization,
    zero_columns: Vec<bool>,
}

impl SensitivityMatrix {
    /// Wraps raw sensitivities; every entry must be finite.
    pub fn from_raw(entries: Matrix) -> Result<Self> {
        for i in 0..entries.rows() {
            for j in 0..entries.cols() {
                if !entries[(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        let zero_columns = (0..entries.cols())
            .map(|j| (0..entries.rows()).all(|i| entries[(i, j)] == 0.0))
            .collect();
        Ok(SensitivityMatrix {
            entries,
            normalization: Normalization::Raw,
            zero_columns,
        })
    }

    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn cols(&self) -> usize {
        self.entries.cols()
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Per-column flag: true where the column is identically zero.
    pub fn zero_columns(&self) -> &[bool] {
        &self.zero_columns
    }

    /// Scales each nonzero column to unit Euclidean norm; all-zero columns
    /// stay zero and remain flagged.
    pub fn normalized(&self) -> SensitivityMatrix {
        let mut entries = self.entries.clone();
        for j in 0..entries.cols() {
            let norm = entries.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for i in 0..entries.rows() {
                    entries[(i, j)] /= norm;
                }
            }
        }
        SensitivityMatrix {
            entries,
            normalization: Normalization::UnitColumn,
            zero_columns: self.zero_columns.clone(),
        }
    }
}

/// Central-difference sensitivities of `f` at `theta`, with step
/// `rel_step·max(|θⱼ|, 1e-3)` per parameter.
pub fn local_sensitivities<F>(mut f: F, theta: &[f64], rel_step: f64) -> Result<SensitivityMatrix>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if !(rel_step.is_finite() && rel_step > 0.0) {
        return Err(Error::Domain(format!("rel_step must be positive, got {rel_step}")));
    }
    if theta.is_empty() {
        return Err(Error::Domain("theta must be non-empty".into()));
    }
    let p = theta.len();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut probe = theta.to_vec();
    for j in 0..p {
        let h = rel_step * theta[j].abs().max(1e-3);
        probe[j] = theta[j] + h;
        let up = f(&probe).map_err(|e| Error::Evaluation(format!("θ{j}+h: {e}")))?;
        probe[j] = theta[j] - h;
        let down = f(&probe).map_err(|e| Error::Evaluation(format!("θ{j}-h: {e}")))?;
        probe[j] = theta[j];
        if up.len() != down.len() || columns.first().is_some_and(|c| c.len() != up.len()) {
            return Err(Error::ShapeMismatch {
                expected: "a fixed output length".into(),
                got: format!("{} and {}", up.len(), down.len()),
            });
        }
        columns.push(up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * h)).collect());
    }
    let n = columns[0].len();
    SensitivityMatrix::from_raw(Matrix::from_fn(n, p, |i, j| columns[j][i]))
}

/// `1/√λ_min(ŜᵀŜ)`, capped at [`GAMMA_CAP`]. Raw matrices are normalized
/// first.
pub fn collinearity_index(s: &SensitivityMatrix) -> Result<f64> {
    if let Some(j) = s.zero_columns.iter().position(|&z| z) {
        return Err(Error::ZeroColumn(j));
    }
    let normalized;
    let s = match s.normalization {
        Normalization::UnitColumn => s,
        Normalization::Raw => {
            normalized = s.normalized();
            &normalized
        }
    };
    let st = s.entries.transpose();
    let gram = st.matmul(&s.entries)?;
    // exact symmetry for the eigen-solver
    let p = gram.rows();
    let gram = Matrix::from_fn(p, p, |i, j| 0.5 * (gram[(i, j)] + gram[(j, i)]));
    let lambda_min = *sym_eigenvalues(&gram)?.last().expect("p >= 1");
    // below this the Gram matrix is singular to working precision
    let floor = 4.0 * p as f64 * f64::EPSILON;
    if lambda_min <= floor {
        return Ok(GAMMA_CAP);
    }
    Ok((1.0 / lambda_min.sqrt()).clamp(1.0, GAMMA_CAP))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Identifiable,
    Borderline,
    Collinear,
}

impl Band {
    pub fn classify(gamma: f64) -> Band {
        if gamma < IDENTIFIABLE_BELOW {
            Band::Identifiable
        } else if gamma <= COLLINEAR_ABOVE {
            Band::Borderline
        } else {
            Band::Collinear
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Band::Identifiable => "identifiable",
            Band::Borderline => "borderline",
            Band::Collinear => "collinear",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    CorrelationCurve,
    KrigingWeights,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub nu_range: (f64, f64),
    pub rho_range: (f64, f64),
    /// Grid points per axis.
    pub resolution: usize,
    /// Nugget ratio for the kriging-weights output.
    pub omega2: f64,
    pub rel_step: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            nu_range: (0.01, 2.5),
            rho_range: (0.01, 5.0),
            resolution: 100,
            omega2: 0.001,
            rel_step: DEFAULT_REL_STEP,
        }
    }
}

/// Fixed geometry for the scan: the 20-point 1-D grid around x⋆ = 0.5.
#[derive(Debug, Clone)]
pub struct ScanSetup {
    pub train: LocationSet,
    pub pred: Vec<f64>,
    distances: Vec<f64>,
    omega2: f64,
}

impl ScanSetup {
    pub fn standard(omega2: f64) -> Result<Self> {
        let pred = vec![0.5];
        let train = make_grid(1, 21, Some(&pred))?;
        let distances = train.points().map(|p| distance(p, &pred)).collect();
        Ok(ScanSetup {
            train,
            pred,
            distances,
            omega2,
        })
    }

    /// The output vector for `theta = (ν, ρ)`.
    pub fn output(&self, kind: OutputKind, theta: &[f64]) -> Result<Vec<f64>> {
        let (nu, rho) = (theta[0], theta[1]);
        match kind {
            OutputKind::CorrelationCurve => {
                let k = Matern::new(rho, nu)?;
                Ok(self.distances.iter().map(|&d| k.correlation(d)).collect())
            }
            OutputKind::KrigingWeights => {
                let params = ReducedParams::new(rho, nu, self.omega2)?;
                Ok(kriging_weights(&self.train, &self.pred, params)?.weights)
            }
        }
    }

    pub fn gamma(&self, kind: OutputKind, nu: f64, rho: f64, rel_step: f64) -> Result<f64> {
        let s = local_sensitivities(|t| self.output(kind, t), &[nu, rho], rel_step)?;
        collinearity_index(&s.normalized())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollinearityCell {
    pub nu_index: usize,
    pub rho_index: usize,
    pub nu: f64,
    pub rho: f64,
    pub gamma_correlation: Option<f64>,
    pub gamma_weights: Option<f64>,
}

impl CollinearityCell {
    pub fn band_correlation(&self) -> Option<Band> {
        self.gamma_correlation.map(Band::classify)
    }

    pub fn band_weights(&self) -> Option<Band> {
        self.gamma_weights.map(Band::classify)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub nu_index: usize,
    pub rho_index: usize,
    pub output: OutputKind,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    /// Ordered by (ν index, ρ index).
    pub cells: Vec<CollinearityCell>,
    pub failures: Vec<CellFailure>,
}

impl ScanReport {
    /// Fraction of cells whose `kind` output falls in the collinear band,
    /// among cells with `nu` in `[lo, hi]` and a successful evaluation.
    pub fn collinear_fraction(&self, kind: OutputKind, nu_lo: f64, nu_hi: f64) -> f64 {
        let gammas: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.nu >= nu_lo && c.nu <= nu_hi)
            .filter_map(|c| match kind {
                OutputKind::CorrelationCurve => c.gamma_correlation,
                OutputKind::KrigingWeights => c.gamma_weights,
            })
            .collect();
        if gammas.is_empty() {
            return 0.0;
        }
        gammas.iter().filter(|&&g| Band::classify(g) == Band::Collinear).count() as f64
            / gammas.len() as f64
    }
}

fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (range.0 + range.1)];
    }
    (0..n)
        .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Evaluates both outputs on a `resolution × resolution` grid. Per-cell
/// failures are collected, not propagated.
pub fn collinearity_scan(config: &ScanConfig) -> Result<ScanReport> {
    if config.resolution == 0 {
        return Err(Error::Config("resolution must be positive".into()));
    }
    for (name, (lo, hi)) in [("nu", config.nu_range), ("rho", config.rho_range)] {
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::Config(format!("invalid {name} range ({lo}, {hi})")));
        }
    }
    let setup = ScanSetup::standard(config.omega2)?;
    let nus = axis(config.nu_range, config.resolution);
    let rhos = axis(config.rho_range, config.resolution);
    let jobs: Vec<(usize, usize)> = (0..nus.len())
        .flat_map(|i| (0..rhos.len()).map(move |j| (i, j)))
        .collect();
    let results: Vec<(CollinearityCell, Vec<CellFailure>)> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let (nu, rho) = (nus[i], rhos[j]);
            let mut failures = Vec::new();
            let mut run = |kind| match setup.gamma(kind, nu, rho, config.rel_step) {
                Ok(g) => Some(g),
                Err(error) => {
                    failures.push(CellFailure {
                        nu_index: i,
                        rho_index: j,
                        output: kind,
                        error,
                    });
                    None
                }
            };
            let gamma_correlation = run(OutputKind::CorrelationCurve);
            let gamma_weights = run(OutputKind::KrigingWeights);
            (
                CollinearityCell {
                    nu_index: i,
                    rho_index: j,
                    nu,
                    rho,
                    gamma_correlation,
                    gamma_weights,
                },
                failures,
            )
        })
        .collect();
    let mut report = ScanReport {
        cells: Vec::with_capacity(results.len()),
        failures: Vec::new(),
    };
    for (cell, failures) in results {
        report.cells.push(cell);
        report.failures.extend(failures);
    }
    Ok(report)
}
