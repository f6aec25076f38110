//! Unit-level quadric factors `{x ∈ R^m : Σ d_j x_j² = 1}` with `d_j > 0`.
//!
//! Both slice families factor through products of these surfaces. Points are
//! charted through round-sphere angles with coordinates scaled by
//! `1/√d_j`, which keeps grid quality uniform for quadrature. The `m = 1`
//! factor is the two-point set `{±1/√d}`, and `m = 0` is the empty factor
//! acting as a multiplicative identity.

/// One quadric factor.
#[derive(Clone, Debug)]
pub struct EllipsoidFactor {
    d: Vec<f64>,
}

impl EllipsoidFactor {
    /// `d` are the positive coefficients of the defining quadratic form.
    pub fn new(d: Vec<f64>) -> Self {
        assert!(d.iter().all(|&v| v > 0.0), "quadric coefficients must be positive");
        EllipsoidFactor { d }
    }

    pub fn ambient_dim(&self) -> usize {
        self.d.len()
    }

    /// Number of continuous chart angles.
    pub fn n_angles(&self) -> usize {
        self.d.len().saturating_sub(1)
    }

    /// Number of discrete branches: 2 for the two-point factor, 1 otherwise.
    pub fn n_branches(&self) -> usize {
        if self.d.len() == 1 {
            2
        } else {
            1
        }
    }

    /// Chart angle ranges: polar angles over [0, π], the last over [0, 2π].
    pub fn angle_ranges(&self) -> Vec<(f64, f64)> {
        let m = self.d.len();
        if m < 2 {
            return Vec::new();
        }
        let mut ranges = vec![(0.0, std::f64::consts::PI); m - 2];
        ranges.push((0.0, std::f64::consts::TAU));
        ranges
    }

    /// Point on the factor. `branch` selects the sign for `m = 1` and is
    /// ignored otherwise.
    pub fn point(&self, angles: &[f64], branch: i8) -> Vec<f64> {
        let m = self.d.len();
        match m {
            0 => Vec::new(),
            1 => vec![f64::from(branch.signum().max(-1)) / self.d[0].sqrt()],
            _ => {
                let y = sphere_point(m, angles);
                y.iter().zip(&self.d).map(|(yi, di)| yi / di.sqrt()).collect()
            }
        }
    }

    /// Columns `∂P/∂angle_a` of the chart (only for `m >= 2`).
    pub fn jacobian(&self, angles: &[f64]) -> Vec<Vec<f64>> {
        let m = self.d.len();
        assert!(m >= 2);
        let jy = sphere_jacobian(m, angles);
        jy.into_iter()
            .map(|col| col.iter().zip(&self.d).map(|(v, di)| v / di.sqrt()).collect())
            .collect()
    }

    /// Chart area factor `√det(JᵀJ)`; 1 for the discrete and empty factors.
    pub fn area_factor(&self, angles: &[f64]) -> f64 {
        let m = self.d.len();
        if m < 2 {
            return 1.0;
        }
        let cols = self.jacobian(angles);
        let na = cols.len();
        let mut gram = nalgebra::DMatrix::zeros(na, na);
        for a in 0..na {
            for b in a..na {
                let dot: f64 = cols[a].iter().zip(&cols[b]).map(|(x, y)| x * y).sum();
                gram[(a, b)] = dot;
                gram[(b, a)] = dot;
            }
        }
        gram.determinant().max(0.0).sqrt()
    }

    /// Squared length of the component of the position normal to the factor
    /// within its subspace: `|X⊥|² = 1 / Σ d_j² p_j²` on the unit level.
    pub fn normal_component_sq(&self, p: &[f64]) -> f64 {
        if self.d.is_empty() {
            return 0.0;
        }
        let q: f64 = self.d.iter().zip(p).map(|(di, pi)| di * di * pi * pi).sum();
        1.0 / q
    }

    /// On-level residual `|Σ d_j p_j² − 1|`.
    pub fn level_residual(&self, p: &[f64]) -> f64 {
        if self.d.is_empty() {
            return 0.0;
        }
        let q: f64 = self.d.iter().zip(p).map(|(di, pi)| di * pi * pi).sum();
        (q - 1.0).abs()
    }
}

/// Round-sphere chart `y(t)` for `S^{m-1}`, hyperspherical angles.
fn sphere_point(m: usize, t: &[f64]) -> Vec<f64> {
    debug_assert_eq!(t.len(), m - 1);
    let mut y = vec![0.0; m];
    let mut sin_prod = 1.0;
    for i in 0..m - 1 {
        y[i] = sin_prod * t[i].cos();
        sin_prod *= t[i].sin();
    }
    y[m - 1] = sin_prod;
    y
}

/// Columns `∂y/∂t_a` of the round-sphere chart.
fn sphere_jacobian(m: usize, t: &[f64]) -> Vec<Vec<f64>> {
    let na = m - 1;
    let mut cols = vec![vec![0.0; m]; na];
    for a in 0..na {
        for i in 0..m {
            // y_i depends on t_0..t_min(i, na-1)
            let v = if i < m - 1 {
                if a > i {
                    0.0
                } else if a == i {
                    -prod_sin_except(t, i, usize::MAX) * t[i].sin()
                } else {
                    t[i].cos() * t[a].cos() * prod_sin_except(&t[..i], i, a)
                }
            } else {
                t[a].cos() * prod_sin_except(t, m - 1, a)
            };
            cols[a][i] = v;
        }
    }
    cols
}

/// Product of `sin t_j` for `j < upto`, skipping index `skip`.
fn prod_sin_except(t: &[f64], upto: usize, skip: usize) -> f64 {
    let mut p = 1.0;
    for (j, tj) in t.iter().enumerate().take(upto.min(t.len())) {
        if j == skip {
            continue;
        }
        p *= tj.sin();
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn circle_chart_matches_round_circle() {
        let f = EllipsoidFactor::new(vec![1.0, 1.0]);
        let p = f.point(&[0.7], 1);
        assert_abs_diff_eq!(p[0], 0.7f64.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.7f64.sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.area_factor(&[0.7]), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.normal_component_sq(&p), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sphere_area_factor_is_sin_polar() {
        let f = EllipsoidFactor::new(vec![1.0, 1.0, 1.0]);
        for &(t0, t1) in &[(0.4, 1.3), (1.1, 5.0), (2.3, 0.2)] {
            assert_abs_diff_eq!(f.area_factor(&[t0, t1]), t0.sin(), epsilon = 1e-12);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let f = EllipsoidFactor::new(vec![2.0, 0.5, 3.0, 1.0]);
        let t = [0.9, 1.7, 2.4];
        let j = f.jacobian(&t);
        let h = 1e-6;
        for a in 0..3 {
            let mut tp = t;
            tp[a] += h;
            let mut tm = t;
            tm[a] -= h;
            let pp = f.point(&tp, 1);
            let pm = f.point(&tm, 1);
            for i in 0..4 {
                let fd = (pp[i] - pm[i]) / (2.0 * h);
                assert_abs_diff_eq!(j[a][i], fd, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn points_lie_on_the_unit_level() {
        let f = EllipsoidFactor::new(vec![2.0, 3.0, 5.0]);
        for &(t0, t1) in &[(0.3, 0.9), (1.5, 4.2), (2.9, 2.2)] {
            let p = f.point(&[t0, t1], 1);
            assert!(f.level_residual(&p) < 1e-14);
        }
    }

    #[test]
    fn two_point_factor() {
        let f = EllipsoidFactor::new(vec![4.0]);
        assert_eq!(f.n_branches(), 2);
        assert_abs_diff_eq!(f.point(&[], 1)[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(f.point(&[], -1)[0], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(f.normal_component_sq(&[0.5]), 0.25, epsilon = 1e-15);
    }
}
