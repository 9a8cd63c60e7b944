//! Composite Gauss-Legendre quadrature on `[0, 1]`.
//!
//! Graphons and outcome models in this crate are piecewise smooth with a
//! known, finite set of breakpoints, so integration panels are aligned to
//! those breakpoints and each panel uses a fixed-order Gauss-Legendre rule.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, via Newton iteration on `P_order`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(order, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(order, z);
        if d != 0.0 {
            dp = d;
        }
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(order: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=order {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if order == 0 {
        return (1.0, 0.0);
    }
    let n = order as f64;
    let dp = n * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

/// A fixed node/weight set on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Split `[0, 1]` at `breaks`, then into `panels` equal panels per segment,
    /// each carrying an `order`-point rule.
    pub fn composite(breaks: &[f64], panels: usize, order: usize) -> Self {
        let (gx, gw) = gauss_legendre(order);
        let mut cuts: Vec<f64> = std::iter::once(0.0)
            .chain(breaks.iter().copied().filter(|b| *b > 0.0 && *b < 1.0))
            .chain(std::iter::once(1.0))
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for seg in cuts.windows(2) {
            let h = (seg[1] - seg[0]) / panels as f64;
            for p in 0..panels {
                let a = seg[0] + p as f64 * h;
                for (x, w) in gx.iter().zip(&gw) {
                    nodes.push(a + 0.5 * h * (x + 1.0));
                    weights.push(0.5 * h * w);
                }
            }
        }
        Self { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        let (x, w) = gauss_legendre(5);
        // degree 9 is integrated exactly by a 5-point rule
        let val: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((val - 2.0 / 9.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn composite_handles_jumps() {
        let rule = Rule::composite(&[1.0 / 3.0], 2, 6);
        let val = rule.integrate(|u| if u < 1.0 / 3.0 { 1.0 } else { 4.0 });
        assert!((val - (1.0 / 3.0 + 8.0 / 3.0)).abs() < 1e-13);
        let s = Rule::composite(&[1.0 / 3.0], 8, 8).integrate(|u| (2.0 * PI * u).sin().powi(2));
        assert!((s - 0.5).abs() < 1e-10);
    }
}
