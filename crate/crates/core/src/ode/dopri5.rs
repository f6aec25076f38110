//! Dormand–Prince 5(4) embedded pair with PI step control and order-4 dense
//! output, following the classical coefficients.

/// Integration options.
#[derive(Clone, Debug)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: Option<f64>,
    pub max_steps: usize,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Dopri5Options {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            h_max: None,
            max_steps: 2_000_000,
        }
    }
}

impl Dopri5Options {
    pub fn with_tol(tol: f64) -> Self {
        Dopri5Options {
            rtol: tol,
            atol: tol * 1e-2,
            ..Default::default()
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IntegrateError {
    #[error("step size underflow at s = {s:.6e}")]
    StepUnderflow { s: f64 },
    #[error("step budget exhausted after {0} steps")]
    MaxSteps(usize),
    #[error("state monitor rejected the trajectory: {0}")]
    Monitor(String),
}

/// One accepted step with its interpolation coefficients.
#[derive(Clone, Debug)]
pub struct DenseSegment {
    pub s0: f64,
    pub h: f64,
    rcont: [Vec<f64>; 5],
}

impl DenseSegment {
    /// Order-4 interpolant at `s ∈ [s0, s0 + h]`.
    pub fn eval(&self, s: f64) -> Vec<f64> {
        let theta = (s - self.s0) / self.h;
        let theta1 = 1.0 - theta;
        let n = self.rcont[0].len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(
                self.rcont[0][i]
                    + theta
                        * (self.rcont[1][i]
                            + theta1
                                * (self.rcont[2][i]
                                    + theta * (self.rcont[3][i] + theta1 * self.rcont[4][i]))),
            );
        }
        out
    }
}

/// Dense trajectory over `[s0, s_end]` (forward orientation).
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub s0: f64,
    pub s_end: f64,
    pub y0: Vec<f64>,
    pub y_end: Vec<f64>,
    pub segments: Vec<DenseSegment>,
    pub accepted: usize,
    pub rejected: usize,
}

impl Trajectory {
    /// Interpolated state; `s` is clamped to the covered span.
    pub fn state_at(&self, s: f64) -> Vec<f64> {
        if self.segments.is_empty() || s <= self.s0 {
            return self.y0.clone();
        }
        if s >= self.s_end {
            return self.y_end.clone();
        }
        let idx = self
            .segments
            .partition_point(|seg| seg.s0 + seg.h < s)
            .min(self.segments.len() - 1);
        self.segments[idx].eval(s)
    }
}

// Dormand–Prince coefficients.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Integrate `dy/ds = f(s, y)` from `s0` to `s_end >= s0` with dense output.
/// `monitor` is invoked on every accepted step and may abort the run.
pub fn integrate<F, M>(
    f: F,
    s0: f64,
    y0: &[f64],
    s_end: f64,
    opts: &Dopri5Options,
    mut monitor: M,
) -> Result<Trajectory, IntegrateError>
where
    F: Fn(f64, &[f64], &mut [f64]),
    M: FnMut(f64, &[f64]) -> Result<(), String>,
{
    let n = y0.len();
    let span = s_end - s0;
    let mut traj = Trajectory {
        s0,
        s_end: s0,
        y0: y0.to_vec(),
        y_end: y0.to_vec(),
        segments: Vec::new(),
        accepted: 0,
        rejected: 0,
    };
    if span <= 0.0 {
        return Ok(traj);
    }
    let h_max = opts.h_max.unwrap_or(span);
    let mut k = vec![vec![0.0; n]; 7];
    let mut y = y0.to_vec();
    let mut s = s0;
    f(s, &y, &mut k[0]);

    let mut h = opts.h_init.unwrap_or_else(|| initial_step(&f, s, &y, &k[0], opts));
    h = h.min(h_max).min(span);

    let mut just_rejected = false;
    for _ in 0..opts.max_steps {
        if s >= s_end {
            return Ok(traj);
        }
        if h < 1e-14 * s.abs().max(1.0) {
            return Err(IntegrateError::StepUnderflow { s });
        }
        if s + h > s_end {
            h = s_end - s;
        }

        let mut y_next = vec![0.0; n];
        for stage in 0..6 {
            for (i, yn) in y_next.iter_mut().enumerate() {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(stage + 1) {
                    let a = A[stage][j];
                    if a != 0.0 {
                        acc += h * a * kj[i];
                    }
                }
                *yn = acc;
            }
            let stage_s = s + C[stage + 1] * h;
            let (_, tail) = k.split_at_mut(stage + 1);
            f(stage_s, &y_next, &mut tail[0]);
        }
        // stage 6 used the 5th-order weights: y_next is the proposal, k[6] = f(y_next)

        let mut err_sq = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += E[j] * kj[i];
                }
            }
            e *= h;
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_next[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / n as f64).sqrt();

        if err <= 1.0 {
            // dense coefficients for this step
            let mut rcont: [Vec<f64>; 5] = [
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
            ];
            for i in 0..n {
                let ydiff = y_next[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = -h * k[6][i] + ydiff - bspl;
                let mut dsum = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    if D[j] != 0.0 {
                        dsum += D[j] * kj[i];
                    }
                }
                rcont[4][i] = h * dsum;
            }
            traj.segments.push(DenseSegment { s0: s, h, rcont });
            traj.accepted += 1;

            s += h;
            y.copy_from_slice(&y_next);
            let (head, tail) = k.split_at_mut(1);
            head[0].copy_from_slice(&tail[5]); // FSAL
            traj.s_end = s;
            traj.y_end = y.clone();
            monitor(s, &y).map_err(IntegrateError::Monitor)?;

            let facmax = if just_rejected { 1.0 } else { 10.0 };
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, facmax);
            h = (h * fac).min(h_max);
            just_rejected = false;
        } else {
            traj.rejected += 1;
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h *= fac;
            just_rejected = true;
        }
    }
    Err(IntegrateError::MaxSteps(opts.max_steps))
}

fn initial_step<F>(f: &F, s: f64, y: &[f64], f0: &[f64], opts: &Dopri5Options) -> f64
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let sci: Vec<f64> = y.iter().map(|yi| opts.atol + opts.rtol * yi.abs()).collect();
    let d0 = (y.iter().zip(&sci).map(|(v, s)| (v / s) * (v / s)).sum::<f64>() / n as f64).sqrt();
    let d1 = (f0.iter().zip(&sci).map(|(v, s)| (v / s) * (v / s)).sum::<f64>() / n as f64).sqrt();
    let h0 = if d0 < 1e-10 || d1 < 1e-10 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(yi, fi)| yi + h0 * fi).collect();
    let mut f1 = vec![0.0; n];
    f(s + h0, &y1, &mut f1);
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(&sci)
        .map(|((a, b), s)| ((a - b) / s) * ((a - b) / s))
        .sum::<f64>()
        / n as f64)
        .sqrt()
        / h0;
    let m = d1.max(d2);
    let h1 = if m <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / m).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_span_returns_initial() {
        let t = integrate(
            |_s, _y, dy| dy[0] = 1.0,
            0.0,
            &[2.0],
            0.0,
            &Dopri5Options::default(),
            |_, _| Ok(()),
        )
        .unwrap();
        assert_eq!(t.y_end, vec![2.0]);
        assert_eq!(t.state_at(0.0), vec![2.0]);
    }

    #[test]
    fn harmonic_oscillator_endpoint_and_dense_output() {
        let f = |_s: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let t = integrate(
            f,
            0.0,
            &[1.0, 0.0],
            10.0,
            &Dopri5Options::with_tol(1e-12),
            |_, _| Ok(()),
        )
        .unwrap();
        assert_abs_diff_eq!(t.y_end[0], 10.0f64.cos(), epsilon = 1e-9);
        assert_abs_diff_eq!(t.y_end[1], -(10.0f64.sin()), epsilon = 1e-9);
        for &s in &[0.13, 1.7, 4.4, 9.99] {
            let y = t.state_at(s);
            assert_abs_diff_eq!(y[0], s.cos(), epsilon = 1e-8);
            assert_abs_diff_eq!(y[1], -s.sin(), epsilon = 1e-8);
        }
    }

    #[test]
    fn tolerance_ladder_self_convergence() {
        let f = |s: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[0] * s.sin();
        };
        let coarse = integrate(f, 0.0, &[1.0], 6.0, &Dopri5Options::with_tol(1e-6), |_, _| Ok(()))
            .unwrap()
            .y_end[0];
        let fine = integrate(f, 0.0, &[1.0], 6.0, &Dopri5Options::with_tol(1e-12), |_, _| Ok(()))
            .unwrap()
            .y_end[0];
        assert!((coarse - fine).abs() < 1e-5 * fine.abs());
    }

    #[test]
    fn monitor_can_abort() {
        let r = integrate(
            |_s, _y, dy| dy[0] = 1.0,
            0.0,
            &[0.0],
            10.0,
            &Dopri5Options::default(),
            |s, _| if s > 1.0 { Err("past one".into()) } else { Ok(()) },
        );
        assert!(matches!(r, Err(IntegrateError::Monitor(_))));
    }
}
