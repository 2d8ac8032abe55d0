//! Composite Gauss-Legendre panels and small quadrature utilities.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

/// Gauss-Legendre rule on `[-1, 1]`, nodes sorted ascending.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        let order = NonZeroUsize::new(order).expect("Gauss-Legendre order must be positive");
        let mut pairs: Vec<(f64, f64)> = GaussLegendre::new(order)
            .as_node_weight_pairs()
            .to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }
}

/// Size of the two highest Legendre coefficients of the interpolant through
/// `values` at the rule's nodes; a conservative per-panel error indicator.
pub fn legendre_tail(rule: &GaussRule, values: &[num_complex::Complex64]) -> f64 {
    let n = rule.order();
    if n < 3 {
        return 0.0;
    }
    let mut tail = [num_complex::Complex64::new(0.0, 0.0); 2];
    for ((&x, &w), &f) in rule.nodes().iter().zip(rule.weights()).zip(values) {
        // P_{n-2}(x) and P_{n-1}(x) by the three-term recurrence
        let (mut p0, mut p1) = (1.0, x);
        for m in 1..n - 2 {
            let p2 = ((2 * m + 1) as f64 * x * p1 - m as f64 * p0) / (m + 1) as f64;
            p0 = p1;
            p1 = p2;
        }
        let pb = ((2 * n - 3) as f64 * x * p1 - (n - 2) as f64 * p0) / (n - 1) as f64;
        tail[0] += f * (w * p1);
        tail[1] += f * (w * pb);
    }
    let ca = tail[0].norm() * (2 * n - 3) as f64 / 2.0;
    let cb = tail[1].norm() * (2 * n - 1) as f64 / 2.0;
    ca + cb
}

/// Nodes and weights of a composite rule over consecutive panels `breaks[i]..breaks[i+1]`.
pub fn composite(rule: &GaussRule, breaks: &[f64]) -> Vec<(f64, f64)> {
    breaks
        .windows(2)
        .flat_map(|w| rule.on_interval(w[0], w[1]).collect::<Vec<_>>())
        .collect()
}

/// Breakpoints on `[0, 1]` graded geometrically towards 0: `0, r^(levels-1), ..., r, 1`.
pub fn geometric_breaks(levels: usize, ratio: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    for j in (0..levels).rev() {
        breaks.push(ratio.powi(j as i32));
    }
    breaks
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept, rms residual)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * n * (mx.abs() + 1.0) {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Some((slope, intercept, rms))
}

/// `n` points spaced evenly in log scale between `lo` and `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|j| (a + (b - a) * j as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        let rule = GaussRule::new(8);
        let integral: f64 = rule.on_interval(0.0, 2.0).map(|(x, w)| w * x.powi(15)).sum();
        assert!((integral - 2f64.powi(16) / 16.0).abs() < 1e-10);
        assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn composite_rule_on_graded_breaks() {
        let rule = GaussRule::new(10);
        let breaks = geometric_breaks(12, 0.5);
        assert_eq!(breaks.len(), 13);
        assert_eq!(breaks[0], 0.0);
        assert_eq!(*breaks.last().unwrap(), 1.0);
        let integral: f64 = composite(&rule, &breaks)
            .into_iter()
            .map(|(x, w)| w * (-50.0 * x).exp())
            .sum();
        let exact = (1.0 - (-50f64).exp()) / 50.0;
        assert!((integral - exact).abs() < 1e-13);
    }

    #[test]
    fn legendre_tail_vanishes_for_low_degree() {
        let rule = GaussRule::new(12);
        let poly: Vec<_> = rule
            .nodes()
            .iter()
            .map(|x| num_complex::Complex64::new(x.powi(5) - x, 0.0))
            .collect();
        assert!(legendre_tail(&rule, &poly) < 1e-13);
        let wave: Vec<_> = rule
            .nodes()
            .iter()
            .map(|x| num_complex::Complex64::new(0.0, 40.0 * x).exp())
            .collect();
        assert!(legendre_tail(&rule, &wave) > 1e-3);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| -1.5 * x + 2.0).collect();
        let (slope, intercept, rms) = linear_fit(&xs, &ys).unwrap();
        assert!((slope + 1.5).abs() < 1e-14);
        assert!((intercept - 2.0).abs() < 1e-14);
        assert!(rms < 1e-14);
        assert!(linear_fit(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_none());
    }
}
