//! Statistical test helpers: Kolmogorov-Smirnov, chi-square, and simple
//! moment utilities shared by estimators and the validation suites.

use crate::error::{HortonError, Result};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1}
/// exp(-2 k^2 lambda^2).
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = sign * (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test of `data` against the cdf `f`.
///
/// Returns (D, p); p uses the Stephens small-sample correction of the
/// asymptotic Kolmogorov distribution.
pub fn ks_test<F: Fn(f64) -> f64>(data: &mut [f64], f: F) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(HortonError::InvalidSample("KS test on empty sample".into()));
    }
    data.sort_by(|a, b| a.partial_cmp(b).expect("NaN in KS sample"));
    let n = data.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in data.iter().enumerate() {
        let c = f(x).clamp(0.0, 1.0);
        d = d.max((c - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - c).abs());
    }
    let sn = n.sqrt();
    let p = kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
    Ok((d, p))
}

/// Chi-square goodness-of-fit statistic for observed counts vs expected
/// counts; dof = cells - 1 - `fitted_params`.
pub fn chi_square_gof(observed: &[u64], expected: &[f64], fitted_params: usize) -> Result<(f64, f64)> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(HortonError::InvalidSample(
            "chi-square needs matching nonempty counts".into(),
        ));
    }
    let mut stat = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        if e <= 0.0 {
            return Err(HortonError::InvalidSample(
                "chi-square expected count must be positive".into(),
            ));
        }
        stat += (o as f64 - e).powi(2) / e;
    }
    let dof = observed.len().saturating_sub(1 + fitted_params);
    if dof == 0 {
        return Ok((stat, 1.0));
    }
    let chi = ChiSquared::new(dof as f64)
        .map_err(|e| HortonError::Domain(format!("chi-square dof: {e}")))?;
    Ok((stat, 1.0 - chi.cdf(stat)))
}

/// Two-sample chi-square homogeneity test over matched count vectors.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> Result<(f64, f64)> {
    if a.len() != b.len() || a.is_empty() {
        return Err(HortonError::InvalidSample(
            "two-sample chi-square needs matching nonempty counts".into(),
        ));
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return Err(HortonError::InvalidSample("empty sample".into()));
    }
    let (ka, kb) = ((nb as f64 / na as f64).sqrt(), (na as f64 / nb as f64).sqrt());
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        if x + y == 0 {
            continue;
        }
        cells += 1;
        let t = ka * x as f64 - kb * y as f64;
        stat += t * t / (x + y) as f64;
    }
    let dof = cells.saturating_sub(1);
    if dof == 0 {
        return Ok((stat, 1.0));
    }
    let chi = ChiSquared::new(dof as f64)
        .map_err(|e| HortonError::Domain(format!("chi-square dof: {e}")))?;
    Ok((stat, 1.0 - chi.cdf(stat)))
}

/// Half-width of a 3-sigma binomial confidence band around phat.
pub fn binomial_3sigma(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::rng_for;
    use rand::Rng;

    #[test]
    fn ks_accepts_uniform() {
        let mut rng = rng_for(1, 99, 0);
        let mut xs: Vec<f64> = (0..5000).map(|_| rng.gen::<f64>()).collect();
        let (_, p) = ks_test(&mut xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn ks_rejects_shifted() {
        let mut rng = rng_for(1, 99, 1);
        let mut xs: Vec<f64> = (0..5000).map(|_| rng.gen::<f64>() * 0.9).collect();
        let (_, p) = ks_test(&mut xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(p < 1e-6, "p = {p}");
    }

    #[test]
    fn chi_square_basic() {
        let (stat, p) = chi_square_gof(&[50, 50], &[50.0, 50.0], 0).unwrap();
        assert_eq!(stat, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
        let (_, p) = chi_square_gof(&[90, 10], &[50.0, 50.0], 0).unwrap();
        assert!(p < 1e-10);
    }

    #[test]
    fn kolmogorov_q_reference() {
        // Q(1.0) ~ 0.26999967
        assert!((kolmogorov_q(1.0) - 0.27) < 1e-3);
    }
}
