//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the library's numerics.

#![allow(dead_code)]

use std::f64::consts::PI;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// 15-point Kronrod estimate and |Kronrod − Gauss| on `[a, b]`.
pub fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let s = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod with interval bisection until every piece meets
/// the relative tolerance share.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let (total, _) = gk15(&f, a, b);
    let mut stack = vec![(a, b, 0u32)];
    let mut sum = 0.0;
    let scale = total.abs().max(f64::MIN_POSITIVE);
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, err) = gk15(&f, lo, hi);
        // the second bound is the round-off floor of the rule itself
        let allowed = (rel_tol * scale * (hi - lo) / (b - a)).max(50.0 * f64::EPSILON * v.abs());
        if err <= allowed || depth > 40 {
            sum += v;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    sum
}

/// `ln K_ν(x)` from `e^x K_ν(x) = ∫₀^∞ exp(x(1 − cosh t)) cosh(νt) dt`.
pub fn bessel_k_log_quad(nu: f64, x: f64) -> f64 {
    // integrate e^{g(t) − g_max} with g(t) = x(1 − cosh t) + ln cosh(νt)
    let ln_cosh = |y: f64| y.abs() + (-2.0 * y.abs()).exp().ln_1p() - std::f64::consts::LN_2;
    let g = |t: f64| x * (1.0 - t.cosh()) + ln_cosh(nu * t);
    let mut t_peak = 0.0;
    let mut g_max = g(0.0);
    let mut t = 0.0;
    loop {
        t += 1e-3;
        let v = g(t);
        if v > g_max {
            g_max = v;
            t_peak = t;
        } else if v < g_max - 60.0 {
            break;
        }
    }
    let upper = t;
    let f = |t: f64| (g(t) - g_max).exp();
    let mut s = 0.0;
    // split at the peak so each piece is unimodal
    if t_peak > 0.0 {
        s += integrate(f, 0.0, t_peak, 1e-14);
    }
    s += integrate(f, t_peak, upper, 1e-14);
    s.ln() + g_max - x
}

pub fn bessel_k_quad(nu: f64, x: f64) -> f64 {
    bessel_k_log_quad(nu, x).exp()
}

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Lanczos (g = 7) log-gamma for positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + 7.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Matérn correlation through the quadrature Bessel function.
pub fn matern_quad(d: f64, rho: f64, nu: f64) -> f64 {
    if d == 0.0 {
        return 1.0;
    }
    let u = (2.0 * nu).sqrt() * d / rho;
    ((1.0 - nu) * 2f64.ln() - ln_gamma(nu) + nu * u.ln() + bessel_k_log_quad(nu, u)).exp()
}

/// Gauss–Jordan inverse with partial pivoting, for small dense matrices
/// stored as rows.
pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        m.swap(c, p);
        let piv = m[c][c];
        for v in m[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                if f != 0.0 {
                    let pivot_row = m[c].clone();
                    for (v, pv) in m[r].iter_mut().zip(pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// `ln |det A|` by Gaussian elimination with partial pivoting.
pub fn log_abs_det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut acc = 0.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        m.swap(c, p);
        acc += m[c][c].abs().ln();
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    acc
}

pub fn det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut sign = 1.0;
    let mut acc = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        if p != c {
            m.swap(c, p);
            sign = -sign;
        }
        acc *= m[c][c];
        if m[c][c] == 0.0 {
            return 0.0;
        }
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    sign * acc
}

pub fn matvec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

/// Analytic total-effect indices of the Ishigami function
/// `sin x₁ + a sin² x₂ + b x₃⁴ sin x₁` on `[−π, π]³`.
pub fn ishigami_totals(a: f64, b: f64) -> [f64; 3] {
    let pi4 = PI.powi(4);
    let pi8 = PI.powi(8);
    let v1 = 0.5 * (1.0 + b * pi4 / 5.0).powi(2);
    let v2 = a * a / 8.0;
    let v13 = b * b * pi8 * (1.0 / 18.0 - 1.0 / 50.0);
    let v = v1 + v2 + v13;
    [(v1 + v13) / v, v2 / v, v13 / v]
}

pub fn ishigami(x: &[f64], a: f64, b: f64) -> f64 {
    x[0].sin() + a * x[1].sin().powi(2) + b * x[2].powi(4) * x[0].sin()
}

/// Indices of the `k` nearest points by full sort on (distance, index).
pub fn neighbors_by_sort(points: &[Vec<f64>], p: &[f64], k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, q)| (q.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, i)| i).collect()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

/// Kriging quantities by explicit inversion.
#[derive(Debug, Clone)]
pub struct DenseReference {
    pub weights: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub log_likelihood: f64,
}

/// Reference kriging for training points `pts`, prediction point `pred`,
/// responses `y`, correlation function `corr(d)` and `(σ², ω²)`. The
/// log-likelihood constant counts the input dimension.
pub fn dense_reference(
    pts: &[Vec<f64>],
    pred: &[f64],
    y: &[f64],
    sigma2: f64,
    omega2: f64,
    corr: impl Fn(f64) -> f64,
) -> DenseReference {
    let n = pts.len();
    let dim = pred.len();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let reduced: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| corr(dist(&pts[i], &pts[j])) + if i == j { omega2 } else { 0.0 })
                .collect()
        })
        .collect();
    let cross: Vec<f64> = pts.iter().map(|a| corr(dist(a, pred))).collect();
    let weights = matvec(&invert(&reduced), &cross);
    let mean = weights.iter().zip(y).map(|(a, b)| a * b).sum();
    let variance = sigma2 * (1.0 - weights.iter().zip(&cross).map(|(a, b)| a * b).sum::<f64>());
    let full: Vec<Vec<f64>> = reduced.iter().map(|r| r.iter().map(|v| sigma2 * v).collect()).collect();
    let quad: f64 = y.iter().zip(matvec(&invert(&full), y)).map(|(a, b)| a * b).sum();
    let log_likelihood = -0.5 * dim as f64 * (2.0 * PI).ln() - 0.5 * log_abs_det(&full) - 0.5 * quad;
    DenseReference {
        weights,
        mean,
        variance,
        log_likelihood,
    }
}
