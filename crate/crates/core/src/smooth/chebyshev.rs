//! Chebyshev series of piecewise-constant functions and θ-space quadrature
//! on `[0, t_f]`, with `t = t_f(1 + cos θ)/2`.

use nalgebra::DMatrix;

use crate::linalg::C64;

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[-1, 1]`
/// (Golub–Welsch).
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::<f64>::from_fn(m, m, |i, j| {
        if i.abs_diff(j) == 1 {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

pub fn theta_of(t: f64, t_f: f64) -> f64 {
    (2.0 * t / t_f - 1.0).clamp(-1.0, 1.0).acos()
}

pub fn time_of(theta: f64, t_f: f64) -> f64 {
    0.5 * t_f * (1.0 + theta.cos())
}

/// Chebyshev coefficients `c_0 … c_degree` of the function equal to
/// `values[i]` on `[breaks[i], breaks[i+1])` (times on `[0, t_f]`), from the
/// exact projection `c_k = (2/π)∫ f(cos θ) cos kθ dθ` (`1/π` for `k = 0`).
pub fn project_piecewise(breaks_theta: &[f64], values: &[C64], degree: usize) -> Vec<C64> {
    let pi = std::f64::consts::PI;
    let mut c = vec![C64::new(0.0, 0.0); degree + 1];
    for (i, &v) in values.iter().enumerate() {
        if v == C64::new(0.0, 0.0) {
            continue;
        }
        // θ decreases with t
        let (hi, lo) = (breaks_theta[i], breaks_theta[i + 1]);
        c[0] += v * ((hi - lo) / pi);
        for (k, ck) in c.iter_mut().enumerate().skip(1) {
            let kf = k as f64;
            *ck += v * (2.0 / pi * ((kf * hi).sin() - (kf * lo).sin()) / kf);
        }
    }
    c
}

/// `Σ c_k T_k(x)` by Clenshaw's recurrence.
pub fn clenshaw(c: &[C64], x: f64) -> C64 {
    let zero = C64::new(0.0, 0.0);
    let (mut b1, mut b2) = (zero, zero);
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + b1 * (2.0 * x) - b2;
        b2 = b1;
        b1 = b0;
    }
    c.first().copied().unwrap_or(zero) + b1 * x - b2
}

/// Composite Gauss–Legendre rule in θ for `∫_0^{t_f} g(t) dt`, with panel
/// edges at every breakpoint and panels no longer than `max_panel`.
#[derive(Debug, Clone)]
pub struct ThetaQuadrature {
    pub theta: Vec<f64>,
    /// Weights for `dt` (the Jacobian `t_f sin θ / 2` is included).
    pub weights: Vec<f64>,
    /// Piece of the piecewise-constant function each node falls in.
    pub piece: Vec<usize>,
}

impl ThetaQuadrature {
    /// `breaks_theta` descending from `π` to `0`, one more than the pieces.
    pub fn new(breaks_theta: &[f64], t_f: f64, max_panel: f64, order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let mut q = ThetaQuadrature { theta: Vec::new(), weights: Vec::new(), piece: Vec::new() };
        for i in 0..breaks_theta.len() - 1 {
            let (hi, lo) = (breaks_theta[i], breaks_theta[i + 1]);
            let len = hi - lo;
            if len <= 0.0 {
                continue;
            }
            let panels = (len / max_panel).ceil().max(1.0) as usize;
            let h = len / panels as f64;
            for p in 0..panels {
                let a = lo + p as f64 * h;
                for (xi, wi) in x.iter().zip(&w) {
                    let th = a + 0.5 * h * (1.0 + xi);
                    q.theta.push(th);
                    q.weights.push(0.5 * h * wi * 0.5 * t_f * th.sin());
                    q.piece.push(i);
                }
            }
        }
        q
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((integral - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn projection_of_constant_is_degree_zero() {
        let c = project_piecewise(&[PI, 0.0], &[C64::new(2.5, -1.0)], 6);
        assert!((c[0] - C64::new(2.5, -1.0)).norm() < 1e-15);
        assert!(c[1..].iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn clenshaw_matches_trig_form() {
        let c: Vec<C64> = (0..7).map(|k| C64::new(1.0 / (k + 1) as f64, k as f64 * 0.1)).collect();
        for x in [-0.9, -0.2, 0.0, 0.5, 1.0] {
            let th: f64 = (x as f64).acos();
            let direct: C64 = c.iter().enumerate().map(|(k, ck)| ck * (k as f64 * th).cos()).sum();
            assert!((clenshaw(&c, x) - direct).norm() < 1e-13);
        }
    }

    #[test]
    fn quadrature_integrates_time_monomials() {
        let t_f = 3.0;
        let breaks = [PI, theta_of(1.0, t_f), theta_of(2.0, t_f), 0.0];
        let q = ThetaQuadrature::new(&breaks, t_f, 0.1, 8);
        let integral: f64 = q.theta.iter().zip(&q.weights).map(|(&th, w)| w * time_of(th, t_f).powi(3)).sum();
        assert!((integral - 81.0 / 4.0).abs() < 1e-11);
        let first: f64 = q.piece.iter().zip(&q.weights).filter(|(p, _)| **p == 0).map(|(_, w)| w).sum();
        assert!((first - 1.0).abs() < 1e-12);
    }
}
