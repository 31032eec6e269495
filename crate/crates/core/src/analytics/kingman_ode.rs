//! Smoluchowski-Horton ODE solver for Kingman's coalescent.
//!
//! The hydrodynamic cluster densities eta_k(t) on [0, inf) reduce to the
//! quasilinear system
//!
//! `h'_{k+1}(x) = 2 h_k(x) h_{k+1}(x) - h_k(x)^2`, `h_k(0) = 1`,
//!
//! on [0,1] with h_0 = 0, h_1 = 1, via
//! `h_k(x) = (1-x)^{-1} - (1-x)^{-2} g_{k+1}(2x/(1-x))`. The asymptotic
//! Horton ratios are `N_j = int_0^1 (1 - (1-x) h_{j-1}(x))^2 dx`, and the
//! Horton exponent is the limit of n_j = N_j / N_{j+1} (~= 3.0438279).

use crate::error::{HortonError, Result};

/// Solution of the rescaled system plus derived Horton statistics.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    /// Grid on [0, 1].
    pub grid: Vec<f64>,
    /// h[k][i] = h_k(grid[i]) for 0 <= k <= J.
    pub h: Vec<Vec<f64>>,
    /// Asymptotic ratios N_j for 1 <= j <= J (index j-1).
    pub n_asym: Vec<f64>,
    /// Ratios n_j = N_j / N_{j+1}.
    pub ratios: Vec<f64>,
    /// Horton exponent from the ratio sequence (Aitken-accelerated where the
    /// grid still resolves N_{j+1}).
    pub r_estimate: f64,
    /// Slow root-law estimate (N_{j*})^{-1/j*} at the last reliable order.
    pub r_root_estimate: f64,
    /// Largest j whose ratio n_j is trusted at this step size.
    pub reliable_j: usize,
}

/// Integrate the h-system with RK4 and compute Horton ratios by composite
/// Simpson on the same grid.
///
/// `j_max` is the highest order solved for (>= 2); `step` the RK4 step
/// (default 1e-4 in the CLI). Errors if the step is too coarse for the
/// closed-form self-consistency check `h_2(x) = (1 + e^{2x})/2`.
pub fn kingman_ode_solve(j_max: usize, step: f64) -> Result<OdeSolution> {
    if j_max < 2 {
        return Err(HortonError::Domain("kingman_ode_solve: j_max >= 2".into()));
    }
    if !(step > 0.0) || step > 0.5 {
        return Err(HortonError::Domain("kingman_ode_solve: bad step".into()));
    }
    let mut n_steps = (1.0 / step).round() as usize;
    if n_steps % 2 == 1 {
        n_steps += 1; // Simpson needs an even interval count
    }
    let dx = 1.0 / n_steps as f64;

    let j = j_max;
    // state vector h_2..h_j (h_0 = 0, h_1 = 1 are exact)
    let dim = j - 1;
    let deriv = |h: &[f64], out: &mut [f64]| {
        // out[i] = h'_{i+2}; uses h_{i+1}
        let mut prev = 1.0; // h_1
        for i in 0..h.len() {
            out[i] = 2.0 * prev * h[i] - prev * prev;
            prev = h[i];
        }
    };

    let mut grid = Vec::with_capacity(n_steps + 1);
    let mut table: Vec<Vec<f64>> = vec![Vec::with_capacity(n_steps + 1); j + 1];
    let mut state = vec![1.0f64; dim];
    let (mut k1, mut k2, mut k3, mut k4) = (
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    );
    let mut tmp = vec![0.0; dim];

    let record = |grid: &mut Vec<f64>, table: &mut Vec<Vec<f64>>, x: f64, state: &[f64]| {
        grid.push(x);
        table[0].push(0.0);
        table[1].push(1.0);
        for (i, &v) in state.iter().enumerate() {
            table[i + 2].push(v);
        }
    };
    record(&mut grid, &mut table, 0.0, &state);

    for s in 0..n_steps {
        deriv(&state, &mut k1);
        for i in 0..dim {
            tmp[i] = state[i] + 0.5 * dx * k1[i];
        }
        deriv(&tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = state[i] + 0.5 * dx * k2[i];
        }
        deriv(&tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = state[i] + dx * k3[i];
        }
        deriv(&tmp, &mut k4);
        for i in 0..dim {
            state[i] += dx / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        record(&mut grid, &mut table, (s + 1) as f64 * dx, &state);
    }

    // self-consistency: h_2(x) = (1 + e^{2x})/2
    let mut h2_err = 0.0f64;
    for (i, &x) in grid.iter().enumerate() {
        let exact = (1.0 + (2.0 * x).exp()) / 2.0;
        h2_err = h2_err.max((table[2][i] - exact).abs() / exact);
    }
    if h2_err > 1e-9 {
        return Err(HortonError::Precision(format!(
            "RK4 step {step} too coarse: h_2 relative error {h2_err:.3e}"
        )));
    }

    // N_j = int (1 - (1-x) h_{j-1})^2 dx by composite Simpson
    let mut n_asym = Vec::with_capacity(j);
    for jj in 1..=j {
        let hk = &table[jj - 1];
        let f = |i: usize| -> f64 {
            let x = grid[i];
            let v = 1.0 - (1.0 - x) * hk[i];
            v * v
        };
        let mut s = f(0) + f(n_steps);
        for i in 1..n_steps {
            s += f(i) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        n_asym.push(s * dx / 3.0);
    }
    let ratios: Vec<f64> = (0..j - 1).map(|i| n_asym[i] / n_asym[i + 1]).collect();

    // The boundary layer of the integrand near x = 1 has width ~ N_j, so
    // ratios are trusted only while N_{j+1} is well above the grid spacing.
    let mut reliable_j = 1;
    for (i, _) in ratios.iter().enumerate() {
        if n_asym[i + 1] >= 20.0 * dx {
            reliable_j = i + 1;
        }
    }
    let r_ratio = ratios[reliable_j - 1];
    let r_estimate = if reliable_j >= 3 {
        let (a, b, c) = (
            ratios[reliable_j - 3],
            ratios[reliable_j - 2],
            ratios[reliable_j - 1],
        );
        let denom = c - 2.0 * b + a;
        if denom.abs() > 1e-14 {
            c - (c - b) * (c - b) / denom
        } else {
            r_ratio
        }
    } else {
        r_ratio
    };
    let r_root_estimate = n_asym[reliable_j].powf(-1.0 / (reliable_j + 1) as f64);

    Ok(OdeSolution {
        grid,
        h: table,
        n_asym,
        ratios,
        r_estimate,
        r_root_estimate,
        reliable_j,
    })
}

/// Solve the g-form `g'_{k+1} = g_k^2/2 - g_k g_{k+1}` with
/// `g_1(t) = 2/(t+2)`, `g_k(0) = 0`, on [0, t_max], and map to h-variables.
///
/// Returns pairs (x, h_k(x)) on the image grid x = t/(t+2); used as an
/// independent cross-check of the h-form solver.
pub fn g_form_h_values(j_max: usize, t_max: f64, step: f64) -> Result<Vec<(f64, Vec<f64>)>> {
    if j_max < 2 {
        return Err(HortonError::Domain("g_form: j_max >= 2".into()));
    }
    let n_steps = (t_max / step).round() as usize;
    let dt = t_max / n_steps as f64;
    let dim = j_max; // g_2..g_{j_max+1}
    let g1 = |t: f64| 2.0 / (t + 2.0);
    let deriv = |t: f64, g: &[f64], out: &mut [f64]| {
        let mut prev = g1(t);
        for i in 0..g.len() {
            out[i] = prev * prev / 2.0 - prev * g[i];
            prev = g[i];
        }
    };
    let mut state = vec![0.0f64; dim];
    let (mut k1, mut k2, mut k3, mut k4) = (
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    );
    let mut tmp = vec![0.0; dim];
    let mut out = Vec::with_capacity(n_steps + 1);
    let to_h = |t: f64, g: &[f64]| -> (f64, Vec<f64>) {
        // x = t/(t+2); h_k(x) = (1-x)^{-1} - (1-x)^{-2} g_{k+1}(t)
        let x = t / (t + 2.0);
        let im = 1.0 - x;
        let mut h = Vec::with_capacity(j_max + 1);
        h.push(0.0); // h_0
        h.push(1.0); // h_1
        for k in 2..=j_max {
            // g_{k+1} sits at state[k-1]... state[i] = g_{i+2}
            let g_next = g[k - 1];
            h.push(1.0 / im - g_next / (im * im));
        }
        (x, h)
    };
    out.push(to_h(0.0, &state));
    for s in 0..n_steps {
        let t = s as f64 * dt;
        deriv(t, &state, &mut k1);
        for i in 0..dim {
            tmp[i] = state[i] + 0.5 * dt * k1[i];
        }
        deriv(t + 0.5 * dt, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = state[i] + 0.5 * dt * k2[i];
        }
        deriv(t + 0.5 * dt, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = state[i] + dt * k3[i];
        }
        deriv(t + dt, &tmp, &mut k4);
        for i in 0..dim {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(to_h(t + dt, &state));
    }
    Ok(out)
}
