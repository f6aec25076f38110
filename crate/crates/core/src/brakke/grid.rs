//! Tensor-product quadrature grids over slice parameters
//! `(r, plus-angles, minus-angles, s)`.
//!
//! Gauss–Legendre rules per factor; the radial direction is mapped through
//! `r = u²` so nodes cluster at the cone vertex where the curvature density
//! has its integrable singularity.

use serde::{Deserialize, Serialize};

use crate::ellipsoid::EllipsoidFactor;

/// Grid resolution metadata, serialized with every report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r_nodes: usize,
    pub angular_nodes: usize,
    pub s_nodes: usize,
    pub r_max: f64,
}

impl GridSpec {
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            r_nodes: self.r_nodes * 2,
            angular_nodes: self.angular_nodes * 2,
            s_nodes: self.s_nodes * 2,
            r_max: self.r_max,
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = -p / d;
            x += dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    out
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    gauss_legendre(n)
        .into_iter()
        .map(|(x, w)| (a + 0.5 * (b - a) * (x + 1.0), 0.5 * (b - a) * w))
        .collect()
}

/// One quadrature node on a quadric factor.
#[derive(Clone, Debug)]
pub struct FactorNode {
    /// Point on the unit-level factor.
    pub point: Vec<f64>,
    /// Chart weight: angle weights times the chart area factor.
    pub weight: f64,
    /// `|X⊥|²` at the point.
    pub normal_sq: f64,
}

fn factor_nodes(factor: &EllipsoidFactor, per_angle: usize) -> Vec<FactorNode> {
    match factor.ambient_dim() {
        0 => vec![FactorNode { point: Vec::new(), weight: 1.0, normal_sq: 0.0 }],
        1 => [1i8, -1]
            .iter()
            .map(|&b| {
                let p = factor.point(&[], b);
                let nsq = factor.normal_component_sq(&p);
                FactorNode { point: p, weight: 1.0, normal_sq: nsq }
            })
            .collect(),
        _ => {
            let ranges = factor.angle_ranges();
            let rules: Vec<Vec<(f64, f64)>> = ranges
                .iter()
                .map(|&(lo, hi)| gauss_legendre_on(per_angle, lo, hi))
                .collect();
            let mut nodes = Vec::new();
            let mut idx = vec![0usize; rules.len()];
            loop {
                let mut angles = Vec::with_capacity(rules.len());
                let mut w = 1.0;
                for (d, rule) in rules.iter().enumerate() {
                    let (a, wa) = rule[idx[d]];
                    angles.push(a);
                    w *= wa;
                }
                let p = factor.point(&angles, 1);
                let area = factor.area_factor(&angles);
                let nsq = factor.normal_component_sq(&p);
                nodes.push(FactorNode { point: p, weight: w * area, normal_sq: nsq });
                // advance multi-index
                let mut d = 0;
                loop {
                    if d == rules.len() {
                        return nodes;
                    }
                    idx[d] += 1;
                    if idx[d] < rules[d].len() {
                        break;
                    }
                    idx[d] = 0;
                    d += 1;
                }
            }
        }
    }
}

/// Prebuilt tensor grid for one slice shape.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    pub spec: GridSpec,
    pub n: usize,
    pub k: usize,
    pub level: f64,
    /// `(r, weight)` nodes; a single pinned node for pure-ellipsoid slices.
    pub r: Vec<(f64, f64)>,
    pub s: Vec<(f64, f64)>,
    pub plus: Vec<FactorNode>,
    pub minus: Vec<FactorNode>,
    /// Slice has an empty factor: no radial direction.
    pub ellipsoid_only: bool,
}

impl QuadratureGrid {
    /// Build the grid for a slice shape. `plus`/`minus` are the positive
    /// quadric coefficients of the two blocks, `level` the slice constant,
    /// and `s_period` the circle/orbit period.
    pub fn build(
        plus: &[f64],
        minus: &[f64],
        level: f64,
        s_period: f64,
        spec: GridSpec,
    ) -> QuadratureGrid {
        let n = plus.len() + minus.len();
        let k = plus.len();
        let fp = EllipsoidFactor::new(plus.to_vec());
        let fm = EllipsoidFactor::new(minus.to_vec());
        let ellipsoid_only = plus.is_empty() || minus.is_empty();
        let r = if ellipsoid_only {
            vec![(0.0, 1.0)]
        } else {
            let u_max = spec.r_max.sqrt();
            gauss_legendre_on(spec.r_nodes, 0.0, u_max)
                .into_iter()
                .map(|(u, w)| (u * u, 2.0 * u * w))
                .collect()
        };
        let s = gauss_legendre_on(spec.s_nodes, 0.0, s_period);
        QuadratureGrid {
            spec,
            n,
            k,
            level,
            r,
            s,
            plus: factor_nodes(&fp, spec.angular_nodes),
            minus: factor_nodes(&fm, spec.angular_nodes),
            ellipsoid_only,
        }
    }

    pub fn node_count(&self) -> usize {
        self.r.len() * self.plus.len() * self.minus.len() * self.s.len()
    }

    /// All weights are positive by construction.
    pub fn weights_positive(&self) -> bool {
        self.r.iter().all(|&(_, w)| w > 0.0)
            && self.s.iter().all(|&(_, w)| w > 0.0)
            && self.plus.iter().all(|n| n.weight > 0.0)
            && self.minus.iter().all(|n| n.weight > 0.0)
    }
}

/// Serial pairwise reduction: deterministic regardless of how the node
/// values were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        // degree-9 polynomial with a 5-point rule
        let rule = gauss_legendre(5);
        let integral: f64 = rule
            .iter()
            .map(|&(x, w)| w * (x.powi(9) + 3.0 * x.powi(4) - x + 2.0))
            .sum();
        // ∫_{-1}^{1} = 3·(2/5) + 4
        assert_abs_diff_eq!(integral, 1.2 + 4.0, epsilon = 1e-13);
    }

    #[test]
    fn mapped_rule_integrates_on_interval() {
        let rule = gauss_legendre_on(20, 0.0, 2.0);
        let integral: f64 = rule.iter().map(|&(x, w)| w * x.exp()).sum();
        assert_abs_diff_eq!(integral, 2.0f64.exp() - 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sphere_factor_total_area() {
        // area of the round 2-sphere via factor nodes
        let f = EllipsoidFactor::new(vec![1.0, 1.0, 1.0]);
        let nodes = factor_nodes(&f, 24);
        let area: f64 = nodes.iter().map(|n| n.weight).sum();
        assert_abs_diff_eq!(area, 4.0 * std::f64::consts::PI, epsilon = 1e-9);
    }

    #[test]
    fn ellipse_factor_total_length() {
        // circumference of {2x² + y²/2 = 1}: axes a = 1/√2, b = √2
        let f = EllipsoidFactor::new(vec![2.0, 0.5]);
        let nodes = factor_nodes(&f, 64);
        let len: f64 = nodes.iter().map(|n| n.weight).sum();
        // high-resolution reference by direct arclength quadrature
        let reference: f64 = gauss_legendre_on(400, 0.0, std::f64::consts::TAU)
            .iter()
            .map(|&(t, w)| {
                let dx = -t.sin() / 2.0f64.sqrt();
                let dy = t.cos() * 2.0f64.sqrt();
                w * (dx * dx + dy * dy).sqrt()
            })
            .sum();
        assert_abs_diff_eq!(len, reference, epsilon = 1e-8);
    }

    #[test]
    fn radial_map_clusters_and_integrates() {
        // ∫_0^4 √r dr = 16/3 via the u² map (integrand is polynomial in u)
        let spec = GridSpec { r_nodes: 16, angular_nodes: 4, s_nodes: 4, r_max: 4.0 };
        let g = QuadratureGrid::build(&[1.0], &[1.0], 1.0, 1.0, spec);
        let v: f64 = g.r.iter().map(|&(r, w)| w * r.sqrt()).sum();
        assert_abs_diff_eq!(v, 16.0 / 3.0, epsilon = 1e-12);
        assert!(g.weights_positive());
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert_abs_diff_eq!(pairwise_sum(&xs), naive, epsilon = 1e-12);
    }
}
