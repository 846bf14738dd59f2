//! One-sample Kolmogorov-Smirnov test against the uniform law on `[0, 1)`.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// `P(K > lambda)` for the Kolmogorov limit law.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut acc = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        acc += sign * term;
        if term < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * acc).clamp(0.0, 1.0)
}

/// Sup distance between the empirical and uniform CDFs, with the p-value
/// from the limit law after Stephens' small-sample correction.
pub fn ks_uniform(samples: &[f64]) -> KsResult {
    let n = samples.len();
    if n == 0 {
        return KsResult { statistic: 0.0, p_value: 1.0 };
    }
    let mut u = samples.to_vec();
    u.sort_by(f64::total_cmp);
    let nf = n as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / nf - x).max(x - i as f64 / nf))
        .fold(0.0, f64::max);
    let sn = nf.sqrt();
    KsResult { statistic: d, p_value: kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d) }
}
