//! Modified Bessel function of the second kind `K_ν(x)` for real order
//! `ν ≥ 0` and positive argument.
//!
//! The fractional part `μ = ν − round(ν)` is handled with Temme's series for
//! `x < 2` and Steed's continued fraction (CF2) otherwise; the integer part is
//! reached by forward recurrence, which is stable for `K`. Everything past the
//! base pair is carried in log space, so `ln K_ν(x)` stays finite where
//! `K_ν(x)` itself would overflow (small `x`, large `ν`).

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest accepted order.
pub const MAX_ORDER: f64 = 50.0;

/// Boundary between Temme's series and the continued fraction.
const SERIES_LIMIT: f64 = 2.0;
const MAX_ITER: usize = 15_000;

// Chebyshev expansions of Temme's gamma combinations g1(μ), g2(μ) on
// |μ| ≤ 1/2, in the variable 4|μ| − 1.
#[allow(clippy::excessive_precision)]
const G1_COEFFS: [f64; 14] = [
    -1.14516408366268311786898152867,
    0.00636085311347084238122955495,
    0.00186245193007206848934643657,
    0.000152833085873453507081227824,
    0.000017017464011802038795324732,
    -6.4597502923347254354668326451e-07,
    -5.1819848432519380894104312968e-08,
    4.5189092894858183051123180797e-10,
    3.2433227371020873043666259180e-11,
    6.8309434024947522875432400828e-13,
    2.8353502755172101513119628130e-14,
    -7.9883905769323592875638087541e-16,
    -3.3726677300771949833341213457e-17,
    -3.6586334809210520744054437104e-20,
];

#[allow(clippy::excessive_precision)]
const G2_COEFFS: [f64; 15] = [
    1.882645524949671835019616975350,
    -0.077490658396167518329547945212,
    -0.018256714847324929419579340950,
    0.0006338030209074895795923971731,
    0.0000762290543508729021194461175,
    -9.5501647561720443519853993526e-07,
    -8.8927268107886351912431512955e-08,
    -1.9521334772319613740511880132e-09,
    -9.4003052735885162111769579771e-11,
    4.6875133849532393179290879101e-12,
    2.2658535746925759582447545145e-13,
    -1.1725509698488015111878735251e-15,
    -7.0441338200245222530843155877e-17,
    -2.4377878310107693650659740228e-18,
    -7.5225243218253901727164675011e-20,
];

fn chebyshev(coeffs: &[f64], y: f64) -> f64 {
    let y2 = 2.0 * y;
    let mut d = 0.0;
    let mut dd = 0.0;
    for &c in coeffs[1..].iter().rev() {
        let tmp = d;
        d = y2 * d - dd + c;
        dd = tmp;
    }
    y * d - dd + 0.5 * coeffs[0]
}

/// A single evaluation, kept in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    pub order: f64,
    pub argument: f64,
    pub log_value: f64,
}

impl BesselEval {
    /// `K_ν(x)` in linear space; errors rather than saturating.
    pub fn value(&self) -> Result<f64> {
        if self.log_value > f64::MAX.ln() {
            return Err(Error::Overflow(format!(
                "K_{}({}) = exp({}) exceeds f64 range",
                self.order, self.argument, self.log_value
            )));
        }
        let v = self.log_value.exp();
        if v == 0.0 || !v.is_normal() {
            return Err(Error::Underflow(format!(
                "K_{}({}) = exp({}) is below f64 normal range",
                self.order, self.argument, self.log_value
            )));
        }
        Ok(v)
    }
}

/// `K_ν` at a fixed order, with the order-dependent constants precomputed.
///
/// Repeated evaluation at one order (kernel matrices) reuses this.
#[derive(Debug, Clone, Copy)]
pub struct BesselK {
    order: f64,
    mu: f64,
    steps: usize,
    g1: f64,
    g2: f64,
    gamma_1p: f64,
    gamma_1m: f64,
}

impl BesselK {
    pub fn new(order: f64) -> Result<Self> {
        if !order.is_finite() || order < 0.0 {
            return Err(Error::Domain(format!("Bessel order must be >= 0, got {order}")));
        }
        if order > MAX_ORDER {
            return Err(Error::Domain(format!(
                "Bessel order {order} exceeds supported maximum {MAX_ORDER}"
            )));
        }
        let steps = (order + 0.5).floor();
        let mu = order - steps;
        let y = 4.0 * mu.abs() - 1.0;
        let g1 = chebyshev(&G1_COEFFS, y);
        let g2 = chebyshev(&G2_COEFFS, y);
        Ok(BesselK {
            order,
            mu,
            steps: steps as usize,
            g1,
            g2,
            gamma_1p: 1.0 / (g2 - mu * g1),
            gamma_1m: 1.0 / (g2 + mu * g1),
        })
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn eval(&self, x: f64) -> Result<BesselEval> {
        check_argument(x)?;
        Ok(BesselEval {
            order: self.order,
            argument: x,
            log_value: self.ln_unchecked(x),
        })
    }

    /// `ln K_ν(x)`.
    pub fn ln_value(&self, x: f64) -> Result<f64> {
        check_argument(x)?;
        Ok(self.ln_unchecked(x))
    }

    /// `K_ν(x)`; overflow and underflow are reported as errors.
    pub fn value(&self, x: f64) -> Result<f64> {
        self.eval(x)?.value()
    }

    /// `ln K_ν(x)` for a caller-validated `x > 0`.
    pub(crate) fn ln_unchecked(&self, x: f64) -> f64 {
        let (ln_k_mu, ln_k_mu1) = if x < SERIES_LIMIT {
            self.temme(x)
        } else {
            self.steed(x)
        };
        match self.steps {
            0 => ln_k_mu,
            1 => ln_k_mu1,
            n => {
                // ratio = K_{μ+i−1} / K_{μ+i}
                let mut ratio = (ln_k_mu - ln_k_mu1).exp();
                let mut ln_k = ln_k_mu1;
                let two_over_x = 2.0 / x;
                for i in 1..n {
                    let q = two_over_x * (self.mu + i as f64) + ratio;
                    ln_k += q.ln();
                    ratio = q.recip();
                }
                ln_k
            }
        }
    }

    /// Temme's series: `(ln K_μ(x), ln K_{μ+1}(x))` for small `x`.
    fn temme(&self, x: f64) -> (f64, f64) {
        let mu = self.mu;
        let half_x = 0.5 * x;
        let ln_half_x = half_x.ln();
        let pi_mu = PI * mu;
        let fact = if pi_mu.abs() < f64::EPSILON {
            1.0
        } else {
            pi_mu / pi_mu.sin()
        };
        let sigma = -mu * ln_half_x;
        let sinhrat = if sigma.abs() < f64::EPSILON {
            1.0
        } else {
            sigma.sinh() / sigma
        };
        let mut ff = fact * (self.g1 * sigma.cosh() - sinhrat * ln_half_x * self.g2);
        let e = sigma.exp();
        let mut p = 0.5 * e * self.gamma_1p;
        let mut q = 0.5 / e * self.gamma_1m;
        let mut c = 1.0;
        let d = half_x * half_x;
        let mut sum = ff;
        let mut sum1 = p;
        let mu2 = mu * mu;
        for i in 1..=MAX_ITER {
            let k = i as f64;
            ff = (k * ff + p + q) / (k * k - mu2);
            c *= d / k;
            p /= k - mu;
            q /= k + mu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - k * ff);
            if del.abs() < sum.abs() * f64::EPSILON {
                break;
            }
        }
        (sum.ln(), sum1.ln() + std::f64::consts::LN_2 - x.ln())
    }

    /// Steed's CF2: `(ln K_μ(x), ln K_{μ+1}(x))` for `x ≥ 2`.
    fn steed(&self, x: f64) -> (f64, f64) {
        let mu = self.mu;
        let a1 = 0.25 - mu * mu;
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut delh = d;
        let mut h = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 2..=MAX_ITER {
            let k = i as f64;
            a -= 2.0 * (k - 1.0);
            c = -a * c / k;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh *= b * d - 1.0;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < f64::EPSILON {
                break;
            }
        }
        h *= a1;
        let ln_k_mu = 0.5 * (PI / (2.0 * x)).ln() - x - s.ln();
        let ln_k_mu1 = ln_k_mu + ((mu + x + 0.5 - h) / x).ln();
        (ln_k_mu, ln_k_mu1)
    }
}

fn check_argument(x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("Bessel argument must be > 0, got {x}")))
    }
}

/// `K_ν(x)` in linear space.
pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    BesselK::new(nu)?.value(x)
}

/// `ln K_ν(x)`.
pub fn bessel_k_log(nu: f64, x: f64) -> Result<f64> {
    BesselK::new(nu)?.ln_value(x)
}
