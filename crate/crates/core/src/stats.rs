//! Estimators over tree samples: Tokunaga coefficient matrices, Horton
//! exponent fits, and order-distribution fits.

use crate::error::{HortonError, Result};
use crate::horton::assign_orders;
use crate::stattest;
use crate::tree::Tree;
use serde::Serialize;

/// Empirical Tokunaga statistics of a sample of trees of common order K.
#[derive(Debug, Clone, Serialize)]
pub struct TokunagaStats {
    /// Conditioning order class.
    pub order: u32,
    /// mean_n[k-1] = empirical mean of N_k over the sample.
    pub mean_n: Vec<f64>,
    /// mean_nij[i-1][j-i-1] = empirical mean of N_{i,j}.
    pub mean_nij: Vec<Vec<f64>>,
    /// t_ij[i-1][j-i-1] = mean_nij / mean_n_j.
    pub t_ij: Vec<Vec<f64>>,
    pub sample_count: usize,
}

impl TokunagaStats {
    pub fn t(&self, i: u32, j: u32) -> f64 {
        if i == 0 || j <= i || j > self.order {
            return f64::NAN;
        }
        self.t_ij[(i - 1) as usize][(j - i - 1) as usize]
    }

    pub fn mean_branch(&self, k: u32) -> f64 {
        self.mean_n[(k - 1) as usize]
    }
}

/// Empirical Tokunaga matrix from trees all of order `order`.
pub fn tokunaga_matrix(sample: &[Tree], order: u32) -> Result<TokunagaStats> {
    if sample.is_empty() {
        return Err(HortonError::InvalidSample("tokunaga_matrix: empty sample".into()));
    }
    let k = order as usize;
    let mut mean_n = vec![0.0; k];
    let mut mean_nij: Vec<Vec<f64>> = (0..k).map(|i| vec![0.0; k - 1 - i]).collect();
    for t in sample {
        let a = assign_orders(t)?;
        if a.tree_order != order {
            return Err(HortonError::InvalidSample(format!(
                "tokunaga_matrix: tree of order {} in an order-{} sample",
                a.tree_order, order
            )));
        }
        for kk in 1..=order {
            mean_n[(kk - 1) as usize] += a.n_k(kk) as f64;
        }
        for i in 1..order {
            for j in (i + 1)..=order {
                mean_nij[(i - 1) as usize][(j - i - 1) as usize] += a.n_ij(i, j)? as f64;
            }
        }
    }
    let n = sample.len() as f64;
    for v in mean_n.iter_mut() {
        *v /= n;
    }
    for row in mean_nij.iter_mut() {
        for v in row.iter_mut() {
            *v /= n;
        }
    }
    let t_ij = mean_nij
        .iter()
        .enumerate()
        .map(|(i0, row)| {
            row.iter()
                .enumerate()
                .map(|(d, &vij)| vij / mean_n[i0 + d + 1])
                .collect()
        })
        .collect();
    Ok(TokunagaStats {
        order,
        mean_n,
        mean_nij,
        t_ij,
        sample_count: sample.len(),
    })
}

/// Least-squares fit of the Horton exponent from mean branch numbers.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HortonFit {
    pub r: f64,
    /// 95% confidence interval for R from the regression slope.
    pub ci: (f64, f64),
    /// Orders actually used in the fit.
    pub k_used: (u32, u32),
}

/// Fit log N_k ~ a - k log R by least squares.
///
/// Convergence is slowest near the top order, so k in {K-1, K} is excluded
/// unless `include_terminal` is set.
pub fn horton_exponent_fit(mean_n: &[f64], include_terminal: bool) -> Result<HortonFit> {
    let k_total = mean_n.len();
    let hi = if include_terminal {
        k_total
    } else {
        k_total.saturating_sub(2)
    };
    if hi < 3 {
        return Err(HortonError::InvalidSample(
            "horton_exponent_fit: need at least 3 usable orders".into(),
        ));
    }
    if mean_n[..hi].iter().any(|&v| v <= 0.0) {
        return Err(HortonError::Domain(
            "horton_exponent_fit: nonpositive branch count".into(),
        ));
    }
    let xs: Vec<f64> = (1..=hi).map(|k| k as f64).collect();
    let ys: Vec<f64> = mean_n[..hi].iter().map(|v| v.ln()).collect();
    let n = hi as f64;
    let xm = stattest::mean(&xs);
    let ym = stattest::mean(&ys);
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let resid: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - ym - slope * (x - xm)).powi(2))
        .sum();
    let se = if hi > 2 {
        (resid / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let r = (-slope).exp();
    Ok(HortonFit {
        r,
        ci: ((-slope - 1.96 * se).exp(), (-slope + 1.96 * se).exp()),
        k_used: (1, hi as u32),
    })
}

/// Geometric fit of the order distribution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OrderFit {
    /// MLE of the geometric parameter: p = n / sum(ord).
    pub p: f64,
    pub chi_square: f64,
    pub p_value: f64,
}

/// MLE of Geom_1(p) on tree orders plus a chi-square goodness-of-fit test
/// (cells pooled so each expected count is at least 5).
pub fn order_distribution_fit(sample: &[Tree]) -> Result<OrderFit> {
    if sample.is_empty() {
        return Err(HortonError::InvalidSample("order fit: empty sample".into()));
    }
    let orders: Vec<u32> = sample
        .iter()
        .map(|t| assign_orders(t).map(|a| a.tree_order))
        .collect::<Result<_>>()?;
    order_distribution_fit_from_orders(&orders)
}

/// Same fit from precomputed orders.
pub fn order_distribution_fit_from_orders(orders: &[u32]) -> Result<OrderFit> {
    if orders.is_empty() {
        return Err(HortonError::InvalidSample("order fit: empty sample".into()));
    }
    let n = orders.len() as f64;
    let total: u64 = orders.iter().map(|&k| k as u64).sum();
    let p = n / total as f64;
    let k_max = *orders.iter().max().unwrap() as usize;
    let mut counts = vec![0u64; k_max];
    for &k in orders {
        counts[(k - 1) as usize] += 1;
    }
    // expected geometric counts, pooling the tail so expected >= 5
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let mut tail_obs = 0u64;
    let mut tail_exp = 0.0;
    for (i, &c) in counts.iter().enumerate() {
        let e = n * p * (1.0 - p).powi(i as i32);
        if tail_exp > 0.0 || e < 5.0 {
            tail_obs += c;
            tail_exp += e;
        } else {
            obs.push(c);
            exp.push(e);
        }
    }
    // remaining geometric mass beyond k_max
    tail_exp += n * (1.0 - p).powi(k_max as i32);
    if tail_exp > 0.0 {
        obs.push(tail_obs);
        exp.push(tail_exp);
    }
    let (chi_square, p_value) = stattest::chi_square_gof(&obs, &exp, 1)?;
    Ok(OrderFit {
        p,
        chi_square,
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{sample_gw_shape_bounded, sample_hbp, HbpParams};
    use crate::streams::rng_for;

    fn perfect_binary(depth: usize) -> Tree {
        let mut t = Tree::singleton();
        let mut frontier = vec![0];
        for _ in 0..depth {
            let mut next = Vec::new();
            for v in frontier {
                next.push(t.add_child(v, None));
                next.push(t.add_child(v, None));
            }
            frontier = next;
        }
        t
    }

    #[test]
    fn perfect_binary_matrix_is_zero() {
        let sample: Vec<Tree> = (0..3).map(|_| perfect_binary(4)).collect();
        let s = tokunaga_matrix(&sample, 4).unwrap();
        for i in 1..4u32 {
            for j in (i + 1)..=4 {
                assert_eq!(s.t(i, j), 0.0);
            }
        }
        assert_eq!(s.mean_branch(1), 8.0);
        assert_eq!(s.mean_branch(4), 1.0);
    }

    #[test]
    fn mixed_orders_rejected() {
        let sample = vec![perfect_binary(3), perfect_binary(4)];
        assert!(tokunaga_matrix(&sample, 3).is_err());
    }

    #[test]
    fn gw_tokunaga_coefficients() {
        // T_{i,i+k} ~ 2^{k-1} for GW(1/2,1/2)
        let mut rng = rng_for(21, 1, 0);
        let order = 5u32;
        let mut sample = Vec::new();
        while sample.len() < 3000 {
            if let Some(t) = sample_gw_shape_bounded(0.5, 1 << 14, &mut rng).unwrap() {
                if assign_orders(&t).unwrap().tree_order == order {
                    sample.push(t);
                }
            }
        }
        let s = tokunaga_matrix(&sample, order).unwrap();
        for d in 1..=3u32 {
            let want = 2.0f64.powi(d as i32 - 1);
            // average over (i, i+d) pairs away from the top order
            let got = s.t(1, 1 + d);
            assert!(
                (got - want).abs() < 0.15 * want.max(1.0),
                "T_(1,{}) = {got}, want {want}",
                1 + d
            );
        }
    }

    #[test]
    fn hbp_critical_tokunaga_matrix() {
        // T_{i,i+k} ~ (c-1) c^{k-1}
        let c = 1.5;
        let params = HbpParams::critical_tokunaga(c, 1.0, 16).unwrap();
        let mut rng = rng_for(21, 2, 0);
        let order = 5u32;
        let sample: Vec<Tree> = (0..3000)
            .map(|_| sample_hbp(&params, Some(order), &mut rng).unwrap())
            .collect();
        let s = tokunaga_matrix(&sample, order).unwrap();
        for d in 1..=3u32 {
            let want = (c - 1.0) * c.powi(d as i32 - 1);
            let got = s.t(2, 2 + d.min(3));
            let _ = got;
            let got = s.t(1, 1 + d);
            assert!(
                (got - want).abs() < 0.12 * want.max(0.6),
                "T_(1,{}) = {got}, want {want}",
                1 + d
            );
        }
        // Toeplitz diagnostic: T_{i,j} depends only on j - i
        for d in 1..=2u32 {
            let a = s.t(1, 1 + d);
            let b = s.t(2, 2 + d);
            assert!((a - b).abs() < 0.15 * a.max(0.5), "d={d}: {a} vs {b}");
        }
    }

    #[test]
    fn exponent_fit_exact_geometric() {
        let mean_n: Vec<f64> = (0..8).rev().map(|k| 2.0f64.powi(k)).collect();
        let fit = horton_exponent_fit(&mean_n, true).unwrap();
        assert!((fit.r - 2.0).abs() < 1e-12);
        assert!(fit.ci.0 <= 2.0 && 2.0 <= fit.ci.1);
    }

    #[test]
    fn exponent_fit_rejects_nonpositive() {
        assert!(horton_exponent_fit(&[4.0, 2.0, 0.0, 1.0, 1.0], true).is_err());
    }

    #[test]
    fn order_fit_geometric_sample() {
        let mut rng = rng_for(21, 3, 0);
        let mut orders = Vec::new();
        for _ in 0..20000 {
            if let Some(t) = sample_gw_shape_bounded(0.5, 1 << 14, &mut rng).unwrap() {
                orders.push(assign_orders(&t).unwrap().tree_order);
            }
        }
        let fit = order_distribution_fit_from_orders(&orders).unwrap();
        assert!((fit.p - 0.5).abs() < 0.02, "p = {}", fit.p);
        assert!(fit.p_value > 0.01, "gof p = {}", fit.p_value);
    }

    #[test]
    fn order_fit_rejects_degenerate() {
        let orders = vec![3u32; 5000];
        let fit = order_distribution_fit_from_orders(&orders).unwrap();
        assert!(fit.p_value < 0.01, "degenerate sample accepted: {:?}", fit);
    }
}
