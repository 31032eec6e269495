//! Closed-form laws of the exponential critical binary Galton-Watson tree
//! GW(lambda): total-length density, height distribution, and the survival
//! probabilities of generalized dynamical pruning.

use super::bessel::bessel_i_scaled;
use crate::error::{HortonError, Result};

/// Density of length(T) for T ~ GW(lambda):
/// `l(x) = e^{-lambda x} I_1(lambda x) / x`.
pub fn gw_length_pdf(lambda: f64, x: f64) -> Result<f64> {
    if lambda <= 0.0 {
        return Err(HortonError::Domain("gw_length_pdf: lambda must be > 0".into()));
    }
    if x <= 0.0 {
        return Err(HortonError::Domain("gw_length_pdf: x must be > 0".into()));
    }
    let z = lambda * x;
    // guard tiny arguments where I_1(z)/x ~ lambda/2
    if z < 1e-8 {
        return Ok(lambda / 2.0 * (-z).exp());
    }
    Ok(bessel_i_scaled(1, z) / x)
}

/// CDF of height(T) for T ~ GW(lambda): `H(x) = lambda x / (lambda x + 2)`.
pub fn gw_height_cdf(lambda: f64, x: f64) -> Result<f64> {
    if lambda <= 0.0 {
        return Err(HortonError::Domain("gw_height_cdf: lambda must be > 0".into()));
    }
    if x < 0.0 {
        return Ok(0.0);
    }
    Ok(lambda * x / (lambda * x + 2.0))
}

/// Laplace transform of the length density:
/// `L l(s) = lambda / (lambda + s + sqrt((lambda+s)^2 - lambda^2))`.
pub fn gw_length_laplace(lambda: f64, s: f64) -> f64 {
    let ls = lambda + s;
    lambda / (ls + (ls * ls - lambda * lambda).sqrt())
}

/// Pruning functional selector for survival probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurvivalKind {
    /// phi(T) = length(T)
    Length,
    /// phi(T) = height(T)
    Height,
    /// phi(T) = ord(T) - 1
    Order,
}

/// Probability that S_Delta(phi, T) survives for T ~ GW(lambda):
///
/// - length: `e^{-lambda Delta} [I_0(lambda Delta) + I_1(lambda Delta)]`
/// - height: `2 / (lambda Delta + 2)`
/// - order:  `2^{-floor(Delta)}`
pub fn survival_probability(kind: SurvivalKind, lambda: f64, delta: f64) -> Result<f64> {
    if lambda <= 0.0 {
        return Err(HortonError::Domain("survival: lambda must be > 0".into()));
    }
    if delta < 0.0 {
        return Err(HortonError::Domain("survival: Delta must be >= 0".into()));
    }
    Ok(match kind {
        SurvivalKind::Length => {
            let z = lambda * delta;
            bessel_i_scaled(0, z) + bessel_i_scaled(1, z)
        }
        SurvivalKind::Height => 2.0 / (lambda * delta + 2.0),
        SurvivalKind::Order => 0.5f64.powi(delta.floor() as i32),
    })
}

/// Growth probability of a random sink at time t in an infinite exponential
/// potential: `xi(t) = e^{-lambda t} I_0(lambda t)`.
pub fn sink_growth_probability(lambda: f64, t: f64) -> Result<f64> {
    if lambda <= 0.0 || t < 0.0 {
        return Err(HortonError::Domain("sink growth: lambda > 0, t >= 0".into()));
    }
    Ok(bessel_i_scaled(0, lambda * t))
}

/// The sink-mass law at time t: an atom of weight xi(t) at mass 2t plus the
/// continuous density on (0, 2t)
/// `mu_t(a) = (lambda/2) e^{-lambda t} [I_0(lambda(t - a/2)) + I_1(lambda(t - a/2))] I_0(lambda a / 2)`.
#[derive(Debug, Clone, Copy)]
pub struct SinkMassLaw {
    pub lambda: f64,
    pub t: f64,
    /// Weight of the point mass at a = 2t.
    pub atom: f64,
}

impl SinkMassLaw {
    pub fn new(lambda: f64, t: f64) -> Result<Self> {
        if lambda <= 0.0 || t <= 0.0 {
            return Err(HortonError::Domain("sink mass law: lambda, t > 0".into()));
        }
        Ok(SinkMassLaw {
            lambda,
            t,
            atom: sink_growth_probability(lambda, t)?,
        })
    }

    /// Continuous part density on (0, 2t).
    pub fn pdf(&self, a: f64) -> f64 {
        if a <= 0.0 || a >= 2.0 * self.t {
            return 0.0;
        }
        let (l, t) = (self.lambda, self.t);
        // e^{-lt} [I0 + I1](l (t - a/2)) I0(l a/2), written in scaled form to
        // avoid overflow: e^{-l(t-a/2)}[I0+I1] * e^{-l a/2} I0
        let u = l * (t - a / 2.0);
        let v = l * a / 2.0;
        l / 2.0 * (bessel_i_scaled(0, u) + bessel_i_scaled(1, u)) * bessel_i_scaled(0, v)
    }

    /// CDF of the continuous part (Simpson quadrature), not including the
    /// atom; normalizing to mass 1 - atom holds to ~1e-9 (checked in tests).
    pub fn cdf_continuous(&self, a: f64) -> f64 {
        let a = a.clamp(0.0, 2.0 * self.t);
        let n = 2000;
        let h = a / n as f64;
        let mut s = self.pdf(0.0) + self.pdf(a);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * self.pdf(i as f64 * h);
        }
        s * h / 3.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::bessel::bessel_i;

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn length_pdf_normalizes() {
        // integral over (0, X) = 1 - survival(length, X)
        for lambda in [0.5, 1.0, 2.0] {
            let x = 30.0 / lambda;
            let integral = simpson(|u| gw_length_pdf(lambda, u).unwrap(), 1e-9, x, 20000);
            let tail = survival_probability(SurvivalKind::Length, lambda, x).unwrap();
            assert!(
                (integral + tail - 1.0).abs() < 1e-8,
                "lambda={lambda}: {} + {}",
                integral,
                tail
            );
        }
    }

    #[test]
    fn length_laplace_matches_quadrature() {
        let (lambda, s) = (1.0, 1.0);
        let want = gw_length_laplace(lambda, s);
        // 1/(2 + sqrt 3)
        assert!((want - 1.0 / (2.0 + 3.0f64.sqrt())).abs() < 1e-15);
        let got = simpson(
            |u| (-s * u).exp() * gw_length_pdf(lambda, u).unwrap(),
            1e-10,
            60.0,
            40000,
        );
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }

    #[test]
    fn height_cdf_midpoint() {
        // H(2/lambda) = 1/2
        for lambda in [0.25, 1.0, 3.0] {
            assert!((gw_height_cdf(lambda, 2.0 / lambda).unwrap() - 0.5).abs() < 1e-15);
        }
        assert_eq!(gw_height_cdf(1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn survival_values() {
        assert!((survival_probability(SurvivalKind::Height, 1.0, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(
            (survival_probability(SurvivalKind::Order, 0.7, 3.7).unwrap() - 0.125).abs() < 1e-15
        );
        assert_eq!(survival_probability(SurvivalKind::Length, 1.0, 0.0).unwrap(), 1.0);
        assert_eq!(survival_probability(SurvivalKind::Height, 2.0, 0.0).unwrap(), 1.0);
        assert_eq!(survival_probability(SurvivalKind::Order, 1.0, 0.0).unwrap(), 1.0);
        // survival under length pruning decays like (pi lambda Delta / 2)^{-1/2}
        let p = survival_probability(SurvivalKind::Length, 1.0, 2.0).unwrap();
        let want = (-2.0f64).exp() * (bessel_i(0, 2.0) + bessel_i(1, 2.0));
        assert!((p - want).abs() < 1e-14);
    }

    #[test]
    fn sink_mass_law_normalizes() {
        let law = SinkMassLaw::new(1.0, 1.0).unwrap();
        let total = law.cdf_continuous(2.0) + law.atom;
        assert!((total - 1.0).abs() < 1e-6, "total = {total}");
        // atom weight equals the growth probability
        assert!((law.atom - sink_growth_probability(1.0, 1.0).unwrap()).abs() < 1e-15);
    }
}
