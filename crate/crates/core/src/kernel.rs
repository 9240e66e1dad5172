//! Matérn covariance functions, location sets and kernel matrices.
//!
//! The correlation is
//!
//! ```text
//! c(d) = 2^{1-ν} / Γ(ν) · u^ν K_ν(u),   u = √(2ν)·d/ρ,
//! ```
//!
//! and the covariance adds `σ²` scaling and a nugget `τ²` at exactly zero
//! distance.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::specfun::{BesselK, MAX_ORDER};

/// Points closer than this are considered coincident.
pub const COINCIDENT_TOL: f64 = 1e-12;

const HALF_INTEGER_TOL: f64 = 1e-12;

/// Full Matérn hyperparameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaternParams {
    pub sigma2: f64,
    pub rho: f64,
    pub nu: f64,
    pub tau2: f64,
}

impl MaternParams {
    pub fn new(sigma2: f64, rho: f64, nu: f64, tau2: f64) -> Result<Self> {
        positive("sigma2", sigma2)?;
        check_rho_nu(rho, nu)?;
        nonnegative("tau2", tau2)?;
        Ok(MaternParams {
            sigma2,
            rho,
            nu,
            tau2,
        })
    }

    /// The prediction-identifiable reduction `{ρ, ν, ω² = τ²/σ²}`.
    pub fn reduced(&self) -> ReducedParams {
        ReducedParams {
            rho: self.rho,
            nu: self.nu,
            omega2: self.tau2 / self.sigma2,
        }
    }
}

/// `{ρ, ν, ω²}`: everything kriging weights depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedParams {
    pub rho: f64,
    pub nu: f64,
    pub omega2: f64,
}

impl ReducedParams {
    pub fn new(rho: f64, nu: f64, omega2: f64) -> Result<Self> {
        check_rho_nu(rho, nu)?;
        nonnegative("omega2", omega2)?;
        Ok(ReducedParams { rho, nu, omega2 })
    }

    /// Re-expands with a marginal variance: `τ² = ω²σ²`.
    pub fn with_sigma2(&self, sigma2: f64) -> Result<MaternParams> {
        MaternParams::new(sigma2, self.rho, self.nu, self.omega2 * sigma2)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be nonnegative, got {v}")))
    }
}

fn check_rho_nu(rho: f64, nu: f64) -> Result<()> {
    positive("rho", rho)?;
    positive("nu", nu)?;
    if nu > MAX_ORDER {
        return Err(Error::Domain(format!("nu must be <= {MAX_ORDER}, got {nu}")));
    }
    Ok(())
}

/// A set of distinct points of a common dimension, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationSet {
    dimension: usize,
    coords: Vec<f64>,
}

impl LocationSet {
    /// Validates dimension, finiteness and pairwise distinctness.
    pub fn new(dimension: usize, coords: Vec<f64>) -> Result<Self> {
        let set = Self::new_unchecked(dimension, coords)?;
        if set.is_empty() {
            return Err(Error::Domain("a location set needs at least one point".into()));
        }
        if set.coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("location coordinates must be finite".into()));
        }
        for i in 0..set.len() {
            for j in 0..i {
                if distance(set.point(i), set.point(j)) <= COINCIDENT_TOL {
                    return Err(Error::Domain(format!("points {j} and {i} coincide")));
                }
            }
        }
        Ok(set)
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dimension = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dimension) {
            return Err(Error::ShapeMismatch {
                expected: format!("points of dimension {dimension}"),
                got: "mixed dimensions".into(),
            });
        }
        Self::new(dimension, points.concat())
    }

    /// The empty set: kriging against it returns the prior.
    pub fn empty(dimension: usize) -> Self {
        LocationSet {
            dimension,
            coords: Vec::new(),
        }
    }

    /// Shape checks only; distinctness is the caller's responsibility.
    pub(crate) fn new_unchecked(dimension: usize, coords: Vec<f64>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Domain("location dimension must be >= 1".into()));
        }
        if !coords.len().is_multiple_of(dimension) {
            return Err(Error::ShapeMismatch {
                expected: format!("a multiple of {dimension} coordinates"),
                got: format!("{}", coords.len()),
            });
        }
        Ok(LocationSet { dimension, coords })
    }

    /// Subset by index, preserving order. Distinctness is inherited.
    pub fn select(&self, indices: &[usize]) -> LocationSet {
        let mut coords = Vec::with_capacity(indices.len() * self.dimension);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        LocationSet {
            dimension: self.dimension,
            coords,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dimension)
    }

    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dimension {
            return Err(Error::ShapeMismatch {
                expected: format!("location of dimension {}", self.dimension),
                got: format!("dimension {}", p.len()),
            });
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("location coordinates must be finite".into()));
        }
        Ok(())
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Form {
    Exponential,
    ThreeHalves,
    FiveHalves,
    General,
}

/// Matérn correlation at fixed `(ρ, ν)`, with order-dependent constants
/// precomputed for repeated evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Matern {
    rho: f64,
    nu: f64,
    scale: f64,
    ln_norm: f64,
    form: Form,
    bessel: BesselK,
}

impl Matern {
    pub fn new(rho: f64, nu: f64) -> Result<Self> {
        check_rho_nu(rho, nu)?;
        let form = if (nu - 0.5).abs() <= HALF_INTEGER_TOL {
            Form::Exponential
        } else if (nu - 1.5).abs() <= HALF_INTEGER_TOL {
            Form::ThreeHalves
        } else if (nu - 2.5).abs() <= HALF_INTEGER_TOL {
            Form::FiveHalves
        } else {
            Form::General
        };
        Ok(Matern {
            rho,
            nu,
            scale: (2.0 * nu).sqrt() / rho,
            ln_norm: (1.0 - nu) * std::f64::consts::LN_2 - ln_gamma(nu),
            form,
            bessel: BesselK::new(nu)?,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Correlation at a finite nonnegative distance.
    pub fn correlation(&self, d: f64) -> f64 {
        debug_assert!(d >= 0.0 && d.is_finite());
        if d == 0.0 {
            return 1.0;
        }
        let u = self.scale * d;
        match self.form {
            Form::Exponential => (-u).exp(),
            Form::ThreeHalves => (1.0 + u) * (-u).exp(),
            Form::FiveHalves => (1.0 + u + u * u / 3.0) * (-u).exp(),
            Form::General => {
                if u == 0.0 {
                    // d underflowed against ρ
                    return 1.0;
                }
                let ln_c = self.ln_norm + self.nu * u.ln() + self.bessel.ln_unchecked(u);
                // tiny u: the product tends to 1 from below; clamp rounding
                ln_c.exp().min(1.0)
            }
        }
    }
}

/// Matérn correlation (σ² = 1, τ² = 0) at distance `d`.
pub fn matern_correlation(d: f64, rho: f64, nu: f64) -> Result<f64> {
    check_distance(d)?;
    Ok(Matern::new(rho, nu)?.correlation(d))
}

/// `σ²·c(d) + τ²·[d = 0]`.
pub fn matern_covariance(d: f64, params: &MaternParams) -> Result<f64> {
    check_distance(d)?;
    let c = Matern::new(params.rho, params.nu)?.correlation(d);
    Ok(params.sigma2 * c + if d == 0.0 { params.tau2 } else { 0.0 })
}

fn check_distance(d: f64) -> Result<()> {
    if d.is_finite() && d >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("distance must be finite and >= 0, got {d}")))
    }
}

fn check_dims(a: &LocationSet, b: &LocationSet) -> Result<()> {
    if a.dimension() != b.dimension() {
        return Err(Error::ShapeMismatch {
            expected: format!("dimension {}", a.dimension()),
            got: format!("dimension {}", b.dimension()),
        });
    }
    Ok(())
}

/// Correlation matrix `Ω(a, b)` (no nugget).
pub fn correlation_matrix(a: &LocationSet, b: &LocationSet, kernel: &Matern) -> Result<Matrix> {
    check_dims(a, b)?;
    let same = a == b;
    let n = a.len();
    let m = b.len();
    let mut out = Matrix::zeros(n, m);
    for i in 0..n {
        let jmax = if same { i } else { m };
        for j in 0..jmax {
            out[(i, j)] = kernel.correlation(distance(a.point(i), b.point(j)));
        }
        if same {
            out[(i, i)] = 1.0;
        }
    }
    if same {
        for i in 0..n {
            for j in i + 1..n {
                out[(i, j)] = out[(j, i)];
            }
        }
    }
    Ok(out)
}

/// Covariance matrix `K(a, b)` with entry `(i, j)` equal to
/// `matern_covariance(‖aᵢ − bⱼ‖, params)`.
pub fn kernel_matrix(a: &LocationSet, b: &LocationSet, params: &MaternParams) -> Result<Matrix> {
    check_dims(a, b)?;
    let kernel = Matern::new(params.rho, params.nu)?;
    let mut out = correlation_matrix(a, b, &kernel)?;
    for i in 0..a.len() {
        for j in 0..b.len() {
            let d = distance(a.point(i), b.point(j));
            out[(i, j)] = params.sigma2 * out[(i, j)] + if d == 0.0 { params.tau2 } else { 0.0 };
        }
    }
    Ok(out)
}

/// Uniform grid on `[0,1]^dimension` with `count_per_axis` points per axis,
/// optionally dropping the point that matches `exclude`.
pub fn make_grid(dimension: usize, count_per_axis: usize, exclude: Option<&[f64]>) -> Result<LocationSet> {
    if !(1..=2).contains(&dimension) {
        return Err(Error::Domain(format!("grid dimension must be 1 or 2, got {dimension}")));
    }
    if count_per_axis == 0 {
        return Err(Error::Domain("count_per_axis must be positive".into()));
    }
    if let Some(x) = exclude {
        if x.len() != dimension {
            return Err(Error::ShapeMismatch {
                expected: format!("exclusion point of dimension {dimension}"),
                got: format!("dimension {}", x.len()),
            });
        }
    }
    let axis: Vec<f64> = if count_per_axis == 1 {
        vec![0.0]
    } else {
        (0..count_per_axis)
            .map(|i| i as f64 / (count_per_axis - 1) as f64)
            .collect()
    };
    let mut coords = Vec::new();
    let mut push = |p: &[f64]| {
        if exclude.is_none_or(|x| distance(p, x) > COINCIDENT_TOL) {
            coords.extend_from_slice(p);
        }
    };
    if dimension == 1 {
        for &a in &axis {
            push(&[a]);
        }
    } else {
        for &a in &axis {
            for &b in &axis {
                push(&[a, b]);
            }
        }
    }
    if coords.is_empty() {
        return Err(Error::Domain("grid is empty after exclusion".into()));
    }
    LocationSet::new_unchecked(dimension, coords)
}
