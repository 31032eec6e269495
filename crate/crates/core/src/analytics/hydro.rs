//! Hydrodynamic limit of the hierarchical branching process: the truncated
//! linear system `x' = G Lambda x` where G is the Toeplitz counting operator
//! built from t(1) = T_1 + 2, t(m) = T_m.

use crate::error::{HortonError, Result};

/// Trajectories of mean branch numbers by order, plus the average progeny
/// C(s) = sum_k x_k(s).
#[derive(Debug, Clone)]
pub struct HydroSolution {
    pub times: Vec<f64>,
    /// x[k][i] = mean number of order-(k+1) branches at times[i].
    pub x: Vec<Vec<f64>>,
    pub progeny: Vec<f64>,
}

/// Integrate the truncated system with RK4.
///
/// `lambda[j-1]` are termination rates, `tokunaga[m-1]` the Tokunaga
/// coefficients T_m, `x0[k-1]` the initial mean populations (e.g. the order
/// distribution p_K, or a basis vector).
pub fn hbp_hydrodynamics(
    lambda: &[f64],
    tokunaga: &[f64],
    x0: &[f64],
    horizon: f64,
    step: f64,
) -> Result<HydroSolution> {
    let k_max = lambda.len();
    if k_max == 0 || x0.len() != k_max {
        return Err(HortonError::Domain(
            "hydrodynamics: lambda and x0 must have equal positive length".into(),
        ));
    }
    if lambda.iter().any(|&l| l <= 0.0) {
        return Err(HortonError::Domain("hydrodynamics: rates must be > 0".into()));
    }
    if !(step > 0.0) || horizon < 0.0 {
        return Err(HortonError::Domain("hydrodynamics: bad step/horizon".into()));
    }
    let t_of = |m: usize| -> f64 {
        // t(1) = T_1 + 2, t(m) = T_m
        let tm = tokunaga.get(m - 1).copied().unwrap_or(0.0);
        if m == 1 {
            tm + 2.0
        } else {
            tm
        }
    };
    let deriv = |x: &[f64], out: &mut [f64]| {
        for k in 0..k_max {
            let mut d = -lambda[k] * x[k];
            for j in (k + 1)..k_max {
                d += lambda[j] * t_of(j - k) * x[j];
            }
            out[k] = d;
        }
    };

    let n_steps = (horizon / step).ceil() as usize;
    let dt = if n_steps == 0 { step } else { horizon / n_steps as f64 };
    let mut state = x0.to_vec();
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut table: Vec<Vec<f64>> = vec![Vec::with_capacity(n_steps + 1); k_max];
    let mut progeny = Vec::with_capacity(n_steps + 1);
    let record = |t: f64, s: &[f64], times: &mut Vec<f64>, table: &mut Vec<Vec<f64>>, progeny: &mut Vec<f64>| {
        times.push(t);
        for (k, &v) in s.iter().enumerate() {
            table[k].push(v);
        }
        progeny.push(s.iter().sum());
    };
    record(0.0, &state, &mut times, &mut table, &mut progeny);

    let (mut k1, mut k2, mut k3, mut k4) = (
        vec![0.0; k_max],
        vec![0.0; k_max],
        vec![0.0; k_max],
        vec![0.0; k_max],
    );
    let mut tmp = vec![0.0; k_max];
    for s in 0..n_steps {
        deriv(&state, &mut k1);
        for i in 0..k_max {
            tmp[i] = state[i] + 0.5 * dt * k1[i];
        }
        deriv(&tmp, &mut k2);
        for i in 0..k_max {
            tmp[i] = state[i] + 0.5 * dt * k2[i];
        }
        deriv(&tmp, &mut k3);
        for i in 0..k_max {
            tmp[i] = state[i] + dt * k3[i];
        }
        deriv(&tmp, &mut k4);
        for i in 0..k_max {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if state.iter().any(|v| !v.is_finite()) {
            return Err(HortonError::Precision(format!(
                "hydrodynamics unstable at t = {}",
                (s + 1) as f64 * dt
            )));
        }
        record(
            (s + 1) as f64 * dt,
            &state,
            &mut times,
            &mut table,
            &mut progeny,
        );
    }
    Ok(HydroSolution {
        times,
        x: table,
        progeny,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::TokunagaSequence;

    /// Closed-form solution for Lambda = I started from e_K:
    /// x_{K-m}(s) = e^{-s} sum_n ((t + delta_0)^{*n})(m) s^n / n!.
    fn convolution_solution(tok: &[f64], k_cap: usize, m: usize, s: f64) -> f64 {
        let t_of = |i: usize| -> f64 {
            if i == 0 {
                0.0
            } else if i == 1 {
                tok.first().copied().unwrap_or(0.0) + 2.0
            } else {
                tok.get(i - 1).copied().unwrap_or(0.0)
            }
        };
        // (t + delta_0)^{*n}(m) built iteratively up to m
        let base: Vec<f64> = (0..=m).map(|i| t_of(i) + if i == 0 { 1.0 } else { 0.0 }).collect();
        let mut conv = vec![0.0; m + 1];
        conv[0] = 1.0; // identity for convolution power 0
        let mut total = if m == 0 { 1.0 } else { 0.0 }; // n = 0 term only hits m = 0
        let mut factorial = 1.0;
        let mut s_pow = 1.0;
        for n in 1..=(m + 60).min(170) {
            // conv = conv * base
            let mut next = vec![0.0; m + 1];
            for i in 0..=m {
                if conv[i] == 0.0 {
                    continue;
                }
                for jj in 0..=(m - i) {
                    next[i + jj] += conv[i] * base[jj];
                }
            }
            conv = next;
            s_pow *= s;
            factorial *= n as f64;
            total += conv[m] * s_pow / factorial;
            let _ = k_cap;
        }
        (-s).exp() * total
    }

    #[test]
    fn critical_progeny_constant() {
        // critical Tokunaga c = 1.5: lambda_j = c^{1-j}, p_K = 2^{-K}
        let c: f64 = 1.5;
        let k = 24;
        let tok = TokunagaSequence::critical_tokunaga(c, k);
        let lambda: Vec<f64> = (1..=k).map(|j| c.powi(1 - j as i32)).collect();
        let pi: Vec<f64> = (1..=k).map(|kk| 0.5f64.powi(kk as i32)).collect();
        let sol = hbp_hydrodynamics(&lambda, tok.coefficients(), &pi, 3.0, 1e-3).unwrap();
        for (i, &cs) in sol.progeny.iter().enumerate() {
            // truncation removes ~2^-24 of the initial mass
            assert!(
                (cs - pi.iter().sum::<f64>()).abs() < 1e-6,
                "C({}) = {cs}",
                sol.times[i]
            );
        }
    }

    #[test]
    fn supercritical_and_subcritical_monotonicity() {
        // zeta = 1 (lambda = gamma): C(s) = exp(s gamma that(1-p))
        let k = 30;
        let tok = TokunagaSequence::new(vec![1.0; k]); // T_j = 1, R = (5+sqrt17)/2
        let lambda = vec![1.0; k];
        let r = tok.that_root(1e-12).unwrap().horton_exponent;
        // subcritical: p > 1 - 1/R
        let p = 1.0 - 0.5 / r;
        let pi: Vec<f64> = (1..=k).map(|kk| p * (1.0 - p).powi(kk as i32 - 1)).collect();
        let sol = hbp_hydrodynamics(&lambda, tok.coefficients(), &pi, 2.0, 1e-3).unwrap();
        let c = &sol.progeny;
        assert!(c.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        // and it matches exp(s that(1-p))
        let that = tok.that(1.0 - p);
        let end = *c.last().unwrap();
        assert!((end - (2.0 * that).exp() * pi.iter().sum::<f64>()).abs() < 1e-4);
    }

    #[test]
    fn identity_rates_match_convolution_series() {
        // Lambda = I, x(0) = e_K: compare x_{K-m}(1) against the series
        let tok_geo: Vec<f64> = (0..12).map(|i| 2.0f64.powi(i)).collect(); // T_j = 2^{j-1}
        let k = 12;
        let lambda = vec![1.0; k];
        let mut x0 = vec![0.0; k];
        x0[k - 1] = 1.0;
        let sol = hbp_hydrodynamics(&lambda, &tok_geo, &x0, 1.0, 1e-4).unwrap();
        for m in 0..4 {
            let want = convolution_solution(&tok_geo, k, m, 1.0);
            let got = *sol.x[k - 1 - m].last().unwrap();
            assert!(
                (got - want).abs() < 1e-8,
                "m={m}: got {got}, want {want}"
            );
        }
    }
}
