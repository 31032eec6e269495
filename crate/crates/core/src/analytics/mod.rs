//! Closed-form laws and numeric oracles: the Tokunaga generating function
//! and its Horton exponent, mean branch numbers, entropy rates, exact tree
//! counting, Galton-Watson laws, the Kingman coalescent ODE system, and
//! branching hydrodynamics.

pub mod bessel;
pub mod gw;
pub mod hydro;
pub mod kingman_ode;

pub use bessel::{bessel_i, bessel_i_scaled};
pub use gw::{
    gw_height_cdf, gw_length_laplace, gw_length_pdf, sink_growth_probability,
    survival_probability, SinkMassLaw, SurvivalKind,
};
pub use hydro::{hbp_hydrodynamics, HydroSolution};
pub use kingman_ode::{g_form_h_values, kingman_ode_solve, OdeSolution};

use crate::error::{HortonError, Result};
use num_bigint::BigUint;

/// A nonnegative Tokunaga sequence {T_k}, truncated at `coefficients.len()`.
///
/// Carries the derived sequence t(0) = -1, t(1) = T_1 + 2, t(j) = T_j and
/// its generating function `that(z) = -1 + 2z + sum_j T_j z^j`.
#[derive(Debug, Clone)]
pub struct TokunagaSequence {
    t: Vec<f64>,
}

/// Output of the generating-function root finder.
#[derive(Debug, Clone, Copy)]
pub struct ThatRoot {
    /// The only real zero of that(z) in (0, 1/2].
    pub w0: f64,
    /// Horton exponent R = 1 / w0.
    pub horton_exponent: f64,
}

impl TokunagaSequence {
    /// From explicit coefficients T_1, T_2, ...; all must be >= 0.
    pub fn new(coefficients: Vec<f64>) -> Self {
        assert!(
            coefficients.iter().all(|&t| t >= 0.0 && t.is_finite()),
            "Tokunaga coefficients must be nonnegative"
        );
        TokunagaSequence { t: coefficients }
    }

    /// Geometric sequence T_j = a c^{j-1} truncated at k_max terms.
    pub fn geometric(a: f64, c: f64, k_max: usize) -> Self {
        let mut t = Vec::with_capacity(k_max);
        let mut v = a;
        for _ in 0..k_max {
            t.push(v);
            v *= c;
        }
        TokunagaSequence::new(t)
    }

    /// Critical Tokunaga sequence T_j = (c-1) c^{j-1}.
    pub fn critical_tokunaga(c: f64, k_max: usize) -> Self {
        assert!(c >= 1.0, "critical Tokunaga needs c >= 1");
        TokunagaSequence::geometric(c - 1.0, c, k_max)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.t
    }

    /// T_k for k >= 1 (zero beyond the truncation).
    pub fn coeff(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.t.get(k - 1).copied().unwrap_or(0.0)
        }
    }

    /// that(z) = -1 + 2z + sum_{j>=1} T_j z^j evaluated on the truncation.
    pub fn that(&self, z: f64) -> f64 {
        let mut acc = 0.0;
        for &tj in self.t.iter().rev() {
            acc = acc * z + tj;
        }
        -1.0 + 2.0 * z + acc * z
    }

    /// Geometric bound on the truncated tail sum_{j > K} T_j z^j, using the
    /// last observed growth ratio. Returns None when the bound diverges.
    fn tail_bound(&self, z: f64) -> Option<f64> {
        let k = self.t.len();
        if k == 0 {
            return Some(0.0);
        }
        let t_last = self.t[k - 1];
        if t_last == 0.0 {
            return Some(0.0);
        }
        let growth = if k >= 2 && self.t[k - 2] > 0.0 {
            (self.t[k - 1] / self.t[k - 2]).max(1.0)
        } else {
            1.0
        };
        let q = growth * z;
        if q >= 1.0 {
            return None;
        }
        Some(t_last * z.powi(k as i32) * q / (1.0 - q))
    }

    /// Bisection for the unique real zero of that(z) in (0, 1/2].
    ///
    /// that is strictly increasing there (all T_k >= 0), with that(0) = -1
    /// and that(1/2) >= 0. Errors when the truncation tail is too large for
    /// the requested tolerance.
    pub fn that_root(&self, tol: f64) -> Result<ThatRoot> {
        if !(tol > 0.0) {
            return Err(HortonError::Domain("that_root: tol must be > 0".into()));
        }
        let tail = self
            .tail_bound(0.5)
            .filter(|&b| b <= tol)
            .ok_or_else(|| {
                HortonError::Precision(
                    "Tokunaga truncation insufficient for requested tolerance".into(),
                )
            })?;
        let _ = tail;
        let (mut lo, mut hi) = (0.0f64, 0.5f64);
        // that(1/2) can be exactly 0 (e.g. T = 0); keep hi as a valid bracket
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.that(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < tol * 0.5 && self.that(hi).abs() < tol {
                break;
            }
        }
        let w0 = hi;
        Ok(ThatRoot {
            w0,
            horton_exponent: 1.0 / w0,
        })
    }
}

/// Closed-form Horton exponent of a geometric Tokunaga sequence
/// T_j = a c^{j-1}:
/// `R = (a + c + 2 + sqrt((a + c + 2)^2 - 8c)) / 2`.
pub fn tokunaga_r_closed(a: f64, c: f64) -> Result<f64> {
    if a < 0.0 || c <= 0.0 {
        return Err(HortonError::Domain("tokunaga_r_closed: a >= 0, c > 0".into()));
    }
    let s = a + c + 2.0;
    Ok((s + (s * s - 8.0 * c).sqrt()) / 2.0)
}

/// Mean branch numbers N_k[K] from the triangular counting system
/// `N_k = 2 N_{k+1} + sum_j T_j N_{k+j}`, `N_K = 1`, by back-substitution.
pub fn mean_branch_numbers(seq: &TokunagaSequence, order: usize) -> Result<Vec<f64>> {
    if order == 0 {
        return Err(HortonError::Domain("mean_branch_numbers: K >= 1".into()));
    }
    let mut n = vec![0.0f64; order];
    n[order - 1] = 1.0;
    for k in (0..order.saturating_sub(1)).rev() {
        let mut v = 2.0 * n[k + 1];
        for j in 1..=(order - 1 - k) {
            v += seq.coeff(j) * n[k + j];
        }
        if !v.is_finite() {
            return Err(HortonError::Range(format!(
                "mean branch number overflow at k = {}",
                k + 1
            )));
        }
        n[k] = v;
    }
    Ok(n)
}

/// Mean size (leaf count) and mean length of an order-K critical Tokunaga
/// tree: `N_1[K] = (R^K + R - 2) / (2(R-1))` and
/// `E[length] = (R^K - 1) / (gamma (R-1))` with R = 2c.
pub fn critical_tokunaga_moments(c: f64, gamma: f64, order: u32) -> Result<(f64, f64)> {
    if c < 1.0 || gamma <= 0.0 || order == 0 {
        return Err(HortonError::Domain(
            "critical_tokunaga_moments: c >= 1, gamma > 0, K >= 1".into(),
        ));
    }
    let r = 2.0 * c;
    let rk = r.powi(order as i32);
    let size = (rk + r - 2.0) / (2.0 * (r - 1.0));
    let length = (rk - 1.0) / (gamma * (r - 1.0));
    Ok((size, length))
}

/// Binary entropy H(z) = -z log2 z - (1-z) log2(1-z), with H(0) = H(1) = 0.
pub fn binary_entropy(z: f64) -> f64 {
    if z <= 0.0 || z >= 1.0 {
        0.0
    } else {
        -z * z.log2() - (1.0 - z) * (1.0 - z).log2()
    }
}

/// Entropy rate of trees satisfying the strong Horton law with exponent R:
/// `H_inf(R) = 1 - (1 - H(2/R)) / (2 - 2/R)`, maximized at R = 4 where it
/// equals 1. Defined for R >= 2 (0 at R = 2).
pub fn entropy_rate(r: f64) -> Result<f64> {
    if r < 2.0 {
        return Err(HortonError::Domain("entropy_rate: R >= 2 required".into()));
    }
    Ok(1.0 - (1.0 - binary_entropy(2.0 / r)) / (2.0 - 2.0 / r))
}

/// Entropy rate of Tokunaga self-similar trees with parameters (a, c),
/// summed to `terms` terms with a geometric tail bound.
#[derive(Debug, Clone, Copy)]
pub struct TokunagaEntropy {
    pub value: f64,
    pub tail_bound: f64,
    pub terms_used: usize,
}

pub fn entropy_rate_tokunaga(a: f64, c: f64, terms: usize) -> Result<TokunagaEntropy> {
    if a <= 0.0 || c <= 0.0 || terms == 0 {
        return Err(HortonError::Domain(
            "entropy_rate_tokunaga: a > 0, c > 0, terms >= 1".into(),
        ));
    }
    let r = tokunaga_r_closed(a, c)?;
    // sum_j R^{-j} (G_j + 1/a) log2(G_j + 1/a), G_j = 1 + c + ... + c^{j-1}
    let mut sum = 0.0;
    let mut g = 0.0; // G_j accumulates
    let mut c_pow = 1.0; // c^{j-1}
    let mut r_pow = 1.0; // R^{-j} accumulates
    let mut term = 0.0;
    let mut used = terms;
    for j in 1..=terms {
        g += c_pow;
        c_pow *= c;
        r_pow /= r;
        let u = g + 1.0 / a;
        term = r_pow * u * u.log2();
        sum += term;
        if term.abs() < 1e-14 * sum.abs().max(1.0) {
            used = j;
            break;
        }
    }
    // tail: terms grow like (c/R)^j * j; dominate by geometric ratio
    let ratio = (c / r) * 1.5;
    let tail = if ratio < 1.0 {
        (a / 2.0) * term.abs() * ratio / (1.0 - ratio)
    } else {
        f64::INFINITY
    };
    let value = a / 2.0 * sum + a * r / (2.0 * (r - c) * (r - 1.0)) + a.log2() / (2.0 * (r - 1.0))
        - a * r * c * c.log2() / (2.0 * (r - c) * (r - c) * (r - 1.0));
    Ok(TokunagaEntropy {
        value,
        tail_bound: tail,
        terms_used: used,
    })
}

fn big_binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut num = BigUint::from(1u32);
    let mut den = BigUint::from(1u32);
    for i in 0..k {
        num *= n - i;
        den *= i + 1;
    }
    num / den
}

/// Check admissibility of a branch-count profile: N_K = 1 and
/// N_j >= 2 N_{j+1}.
pub fn admissible_branch_counts(n: &[u64]) -> bool {
    !n.is_empty()
        && *n.last().unwrap() == 1
        && n.windows(2).all(|w| w[0] >= 2 * w[1])
}

/// Number of planted plane binary trees with branch counts N_1..N_K:
/// `2^{N_1 - 1 - sum_{j>=2} N_j} prod_{j<K} C(N_j - 2, 2 N_{j+1} - 2)`.
pub fn count_trees(branch_counts: &[u64]) -> Result<BigUint> {
    if !admissible_branch_counts(branch_counts) {
        return Err(HortonError::Domain(
            "inadmissible branch counts (need N_K = 1, N_j >= 2 N_{j+1})".into(),
        ));
    }
    let k = branch_counts.len();
    let n1 = branch_counts[0];
    let tail: u64 = branch_counts[1..].iter().sum();
    let mut result = BigUint::from(2u32).pow((n1 - 1 - tail) as u32);
    for j in 0..k - 1 {
        result *= big_binomial(branch_counts[j] - 2, 2 * branch_counts[j + 1] - 2);
    }
    Ok(result)
}

/// Number of trees with both branch counts and side-branch counts fixed:
/// `prod_{j=2}^K prod_{i<j} 2^{N_ij} C(N_j - 1 + sum_{k=i}^{j-1} N_kj, N_ij)`.
///
/// `side[i-1][j-i-1]` holds N_{i,j}; admissibility requires
/// `N_i = 2 N_{i+1} + sum_j N_ij` per order.
pub fn count_trees_side(branch_counts: &[u64], side: &[Vec<u64>]) -> Result<BigUint> {
    if !admissible_branch_counts(branch_counts) {
        return Err(HortonError::Domain("inadmissible branch counts".into()));
    }
    let k = branch_counts.len();
    if side.len() + 1 < k {
        return Err(HortonError::Domain("side-count table too small".into()));
    }
    let nij = |i: usize, j: usize| -> u64 { side[i - 1].get(j - i - 1).copied().unwrap_or(0) };
    for i in 1..k {
        let side_total: u64 = ((i + 1)..=k).map(|j| nij(i, j)).sum();
        if branch_counts[i - 1] != 2 * branch_counts[i] + side_total {
            return Err(HortonError::Domain(format!(
                "side counts violate the counting identity at order {i}"
            )));
        }
    }
    let mut result = BigUint::from(1u32);
    for j in 2..=k {
        let nj = branch_counts[j - 1];
        for i in 1..j {
            let m = nij(i, j);
            let partial: u64 = (i..j).map(|kk| nij(kk, j)).sum();
            result *= BigUint::from(2u32).pow(m as u32);
            result *= big_binomial(nj - 1 + partial, m);
        }
    }
    Ok(result)
}

/// Parameters of an exponential random walk {rho, lambda_up, lambda_down}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialWalk {
    /// Probability of an upward jump.
    pub rho: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
}

/// Parameters of a geometric random walk {p1, p2, r1, r2}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricWalk {
    pub p_up: f64,
    pub p_down: f64,
    pub r_up: f64,
    pub r_down: f64,
}

impl ExponentialWalk {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) || self.lambda_up <= 0.0 || self.lambda_down <= 0.0 {
            return Err(HortonError::Domain("invalid exponential walk parameters".into()));
        }
        Ok(())
    }

    /// Parameters of the walk of local minima:
    /// `rho* = rho lam_d / (rho lam_d + (1-rho) lam_u)`, `lam_d* = rho lam_d`,
    /// `lam_u* = (1-rho) lam_u`.
    pub fn minima_params(&self) -> Result<ExponentialWalk> {
        self.validate()?;
        let (rho, lu, ld) = (self.rho, self.lambda_up, self.lambda_down);
        let down = rho * ld;
        let up = (1.0 - rho) * lu;
        Ok(ExponentialWalk {
            rho: down / (down + up),
            lambda_up: up,
            lambda_down: down,
        })
    }
}

impl GeometricWalk {
    pub fn validate(&self) -> Result<()> {
        let probs_ok = self.p_up > 0.0
            && self.p_down > 0.0
            && self.p_up + self.p_down <= 1.0 + 1e-12
            && self.r_up > 0.0
            && self.r_up <= 1.0
            && self.r_down > 0.0
            && self.r_down <= 1.0;
        if !probs_ok {
            return Err(HortonError::Domain("invalid geometric walk parameters".into()));
        }
        Ok(())
    }

    /// Parameter recursion of the local-minima walk.
    pub fn minima_params(&self) -> Result<GeometricWalk> {
        self.validate()?;
        let r1 = self.p_down * self.r_up / (self.p_up + self.p_down);
        let r2 = self.p_up * self.r_down / (self.p_up + self.p_down);
        let denom = 1.0 - (1.0 - r1) * (1.0 - r2);
        Ok(GeometricWalk {
            p_up: r2 * (1.0 - r1) / denom,
            p_down: r1 * (1.0 - r2) / denom,
            r_up: r1,
            r_down: r2,
        })
    }
}
