//! Float helpers for a `no_std` build, plus the handful of distribution
//! functions the statistics modules need (normal tail, chi-square tail,
//! Kolmogorov-Smirnov) and box-plot style summaries.

use alloc::vec::Vec;

pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Two-sided normal p-value for a z statistic.
pub fn normal_p_two_sided(z: f64) -> f64 {
    libm::erfc(abs(z) / core::f64::consts::SQRT_2)
}

/// Regularized lower incomplete gamma P(a, x), by series for x < a+1 and
/// continued fraction otherwise.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        // series representation
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = a;
        for _ in 0..500 {
            n += 1.0;
            term *= x / n;
            sum += term;
            if abs(term) < abs(sum) * 1e-15 {
                break;
            }
        }
        sum * exp(-x + a * ln(x) - libm::lgamma(a))
    } else {
        1.0 - gamma_q_cf(a, x)
    }
}

// Continued-fraction evaluation of Q(a, x), valid for x >= a + 1.
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if abs(d) < tiny {
            d = tiny;
        }
        c = b + an / c;
        if abs(c) < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if abs(delta - 1.0) < 1e-15 {
            break;
        }
    }
    exp(-x + a * ln(x) - libm::lgamma(a)) * h
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
pub fn chi_square_sf(stat: f64, df: usize) -> f64 {
    1.0 - gamma_p(df as f64 / 2.0, stat / 2.0)
}

/// One-sample Kolmogorov-Smirnov statistic against the standard normal.
/// Returns (D, asymptotic p-value).
pub fn ks_test_standard_normal(sample: &[f64]) -> (f64, f64) {
    let mut xs: Vec<f64> = sample.to_vec();
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).expect("NaN in KS sample"));
    let n = xs.len();
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let cdf = normal_cdf(x);
        let hi = (i + 1) as f64 / n as f64 - cdf;
        let lo = cdf - i as f64 / n as f64;
        if hi > d {
            d = hi;
        }
        if lo > d {
            d = lo;
        }
    }
    (d, ks_p_value(d, n))
}

/// Asymptotic Kolmogorov p-value P(D > d) for sample size n.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = sqrt(n as f64);
    // Small-sample correction from the usual asymptotic refinement.
    let t = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = sign * exp(-2.0 * (k as f64) * (k as f64) * t * t);
        p += term;
        sign = -sign;
        if abs(term) < 1e-12 {
            break;
        }
    }
    (2.0 * p).clamp(0.0, 1.0)
}

/// Chi-square goodness-of-fit of observed bin masses against given expected
/// masses (same total). Returns (statistic, p-value, df).
pub fn chi_square_gof(observed: &[f64], expected: &[f64]) -> (f64, f64, usize) {
    assert_eq!(observed.len(), expected.len());
    let mut stat = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        if e > 0.0 {
            stat += (o - e) * (o - e) / e;
        }
    }
    let df = observed.len().saturating_sub(1);
    (stat, chi_square_sf(stat, df), df)
}

/// Large-sample one-sided Welch z-test that mean(a) > mean(b).
/// Returns (z, p-value).
pub fn welch_z_one_sided(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (ma, va, na) = mean_var(a);
    let (mb, vb, nb) = mean_var(b);
    let se = sqrt(va / na as f64 + vb / nb as f64);
    if se == 0.0 {
        return (0.0, 0.5);
    }
    let z = (ma - mb) / se;
    (z, 1.0 - normal_cdf(z))
}

/// Mean, sample variance, and count.
pub fn mean_var(xs: &[f64]) -> (f64, f64, usize) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0, 0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0, n);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var, n)
}

/// Quantile by linear interpolation between closest ranks, `q` in [0, 1].
/// The input must already be sorted ascending.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = floor(pos) as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Box-plot style summary: quartiles, median, mean, 99th percentile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub p99: f64,
}

impl Summary {
    pub fn from_values(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut xs = values.to_vec();
        xs.sort_unstable_by(|a, b| a.partial_cmp(b).expect("NaN in summary input"));
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        Some(Summary {
            n: xs.len(),
            q1: quantile_sorted(&xs, 0.25),
            median: quantile_sorted(&xs, 0.5),
            mean,
            q3: quantile_sorted(&xs, 0.75),
            p99: quantile_sorted(&xs, 0.99),
        })
    }
}
