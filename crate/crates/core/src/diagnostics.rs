//! Runnable counterparts of the convergence analysis: the smoothed
//! absolute-value test functions `theta_h`, the threshold sequence `a_h`,
//! uniform moment bounds, inter-level Cauchy errors on shared drivers, the
//! step-function gap bound, and an exact pathwise-uniqueness surrogate.

use crate::coefficients::{DriftSpec, QuadraticDiffusionSpec};
use crate::drivers::{BrownianGrid, Partition};
use crate::engine::{path_rng, triangular_on_grid, JointPath, YProcess};
use crate::error::{Result, SimError};

/// Threshold sequence `a_h = exp(-h(h+1)/2)`: strictly decreasing to zero
/// with `int_{a_h}^{a_{h-1}} du/u = h` exactly.
pub fn a_seq(h: u32) -> f64 {
    let h = h as f64;
    (-h * (h + 1.0) / 2.0).exp()
}

/// Smooth approximation `theta_h` of the absolute value.
///
/// Built from the C^2 profile `Phi_h` with `Phi_h(0) = 0` and
/// `Phi_h''(u) = 1/(h u)` on `(a_h, a_{h-1})`, zero elsewhere; the profile
/// integrates to one over the support, so `Phi_h' = 1` beyond `a_{h-1}`
/// and the sandwich `|u| - a_{h-1} <= theta_h(u) <= |u|` holds.
#[derive(Debug, Clone, Copy)]
pub struct ThetaFamily {
    h: u32,
    a_h: f64,
    a_hm1: f64,
}

impl ThetaFamily {
    pub fn new(h: u32) -> Result<ThetaFamily> {
        if h < 1 {
            return Err(SimError::Domain("theta family index must be >= 1".into()));
        }
        Ok(ThetaFamily {
            h,
            a_h: a_seq(h),
            a_hm1: a_seq(h - 1),
        })
    }

    pub fn index(&self) -> u32 {
        self.h
    }

    pub fn a_h(&self) -> f64 {
        self.a_h
    }

    pub fn a_h_minus_1(&self) -> f64 {
        self.a_hm1
    }

    fn phi(&self, u: f64) -> f64 {
        let h = self.h as f64;
        if u <= self.a_h {
            0.0
        } else if u < self.a_hm1 {
            (u * (u / self.a_h).ln() - u + self.a_h) / h
        } else {
            // Phi(a_{h-1}) + (u - a_{h-1})
            u - (self.a_hm1 - self.a_h) / h
        }
    }

    fn phi_prime(&self, u: f64) -> f64 {
        let h = self.h as f64;
        if u <= self.a_h {
            0.0
        } else if u < self.a_hm1 {
            (u / self.a_h).ln() / h
        } else {
            1.0
        }
    }

    pub fn theta(&self, u: f64) -> f64 {
        self.phi(u.abs())
    }

    pub fn theta_prime(&self, u: f64) -> f64 {
        u.signum() * self.phi_prime(u.abs())
    }

    /// `theta_h''(u) = 1/(h |u|)` on `a_h < |u| < a_{h-1}`, zero elsewhere.
    pub fn theta_second(&self, u: f64) -> f64 {
        let v = u.abs();
        if v > self.a_h && v < self.a_hm1 {
            1.0 / (self.h as f64 * v)
        } else {
            0.0
        }
    }
}

/// A triangular model bundle: everything needed to produce one `(X, Y)`
/// path from a driver grid.
#[derive(Clone)]
pub struct TriangularModel {
    pub drift: DriftSpec,
    pub diffusion: QuadraticDiffusionSpec,
    pub y_process: YProcess,
    pub x0: f64,
    pub y0: f64,
    pub rho: f64,
    pub horizon: f64,
}

impl TriangularModel {
    pub fn path_on(&self, grid: &BrownianGrid) -> Result<JointPath> {
        triangular_on_grid(
            &self.drift,
            &self.diffusion,
            &self.y_process,
            self.x0,
            self.y0,
            grid,
        )
    }

    /// The single growth constant used when assembling bound formulas.
    pub fn declared_m(&self) -> f64 {
        self.drift.growth_m.max(self.diffusion.growth_m)
    }
}

/// Inter-level errors and evaluated proof constants from a shared-driver
/// refinement study.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub levels: Vec<u32>,
    pub meshes: Vec<f64>,
    /// `E|X^(k)_T - X^(k+1)_T|` for consecutive level pairs.
    pub l1_at_t: Vec<f64>,
    pub l1_se: Vec<f64>,
    /// `E[sup over coarse grid of |X^(k) - X^(k+1)|]` for consecutive pairs.
    pub sup_grid: Vec<f64>,
    pub sup_se: Vec<f64>,
    /// Fitted slopes of log2(error) against level.
    pub slope_l1: f64,
    pub slope_sup: f64,
    /// Uniform-bound constant `G` and the bound `G e^{MT}`.
    pub g_constant: f64,
    pub g_bound: f64,
    /// Step-gap constant `M1 = M (G e^{MT} + sup E[1+|Y|] + sqrt(sup E[(1+|Y|)^2]))`.
    pub m1: f64,
    /// Recursion constants at the finest mesh: `gamma1 = 1 + M ||Delta||`,
    /// `gamma2 = (M/2) sup E[(1+|Y|)^2]`.
    pub gamma1: f64,
    pub gamma2: f64,
    /// Largest per-grid-time sample mean of `|X^n|` over all levels.
    pub max_mean_abs_x: f64,
    pub max_mean_abs_x_se: f64,
}

impl ConvergenceReport {
    pub fn errors_strictly_decreasing(&self) -> bool {
        decreasing(&self.l1_at_t) && decreasing(&self.sup_grid)
    }

    /// Step-1 check: max over grid of mean |X^n| within the uniform bound
    /// (3-SE guard band).
    pub fn uniform_bound_holds(&self) -> bool {
        self.max_mean_abs_x <= self.g_bound + 3.0 * self.max_mean_abs_x_se
    }
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Uniform Step-1 bound: `G = |x0| + M T sup E[1+|Y|] + M sqrt(T sup E[(1+|Y|)^2])`,
/// returned together with `G e^{MT}`.
pub fn uniform_bound_g(
    x0: f64,
    m: f64,
    horizon: f64,
    sup_mean_1_plus_y: f64,
    sup_mean_1_plus_y_sq: f64,
) -> (f64, f64) {
    let g = x0.abs()
        + m * horizon * sup_mean_1_plus_y
        + m * (horizon * sup_mean_1_plus_y_sq).sqrt();
    (g, g * (m * horizon).exp())
}

/// Step-2 constant `M1` assembled from the declared growth constant, the
/// uniform bound and the simulated environment moments.
pub fn step_gap_m1(
    m: f64,
    g_bound: f64,
    sup_mean_1_plus_y: f64,
    sup_mean_1_plus_y_sq: f64,
) -> f64 {
    m * (g_bound + sup_mean_1_plus_y + sup_mean_1_plus_y_sq.sqrt())
}

#[derive(Clone)]
struct RunningMean {
    sum: f64,
    sumsq: f64,
    n: usize,
}

impl RunningMean {
    fn new() -> Self {
        RunningMean { sum: 0.0, sumsq: 0.0, n: 0 }
    }

    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sumsq += x * x;
        self.n += 1;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    fn se(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let nf = self.n as f64;
        let var = ((self.sumsq - self.sum * self.sum / nf) / (nf - 1.0)).max(0.0);
        (var / nf).sqrt()
    }
}

/// Shared-driver Cauchy study: one finest grid per path, coarsened down to
/// every requested level, with inter-level L1-at-T and sup-over-grid gaps
/// plus the evaluated Step-1/Step-2 constants.
pub fn cauchy_errors(
    model: &TriangularModel,
    levels: &[u32],
    n_paths: usize,
    seed: u64,
) -> Result<ConvergenceReport> {
    if levels.len() < 2 {
        return Err(SimError::Domain("need at least two levels".into()));
    }
    let mut sorted = levels.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != levels.len() || sorted != levels {
        return Err(SimError::Domain(
            "levels must be strictly increasing".into(),
        ));
    }
    if n_paths == 0 {
        return Err(SimError::Domain("need at least one path".into()));
    }
    let finest = *sorted.last().unwrap();
    let fine_part = Partition::dyadic(model.horizon, finest)?;
    let n_levels = sorted.len();

    let mut l1 = vec![RunningMean::new(); n_levels - 1];
    let mut sup = vec![RunningMean::new(); n_levels - 1];
    // per-level, per-grid-point accumulators of |X|
    let mut abs_x: Vec<Vec<RunningMean>> = sorted
        .iter()
        .map(|&k| {
            (0..=(1usize << k)).map(|_| RunningMean::new()).collect()
        })
        .collect();
    // environment moments from the finest level
    let mut y_m1 = vec![RunningMean::new(); fine_part.num_steps() + 1];
    let mut y_m2 = vec![RunningMean::new(); fine_part.num_steps() + 1];

    for p in 0..n_paths {
        let mut rng = path_rng(seed, p as u64);
        let fine = BrownianGrid::sample(fine_part, &mut rng).correlate(model.rho)?;
        let mut paths: Vec<JointPath> = Vec::with_capacity(n_levels);
        for &k in &sorted {
            let grid = fine.coarsen(k)?;
            paths.push(model.path_on(&grid)?);
        }
        for (li, path) in paths.iter().enumerate() {
            for (i, &x) in path.x.iter().enumerate() {
                abs_x[li][i].push(x.abs());
            }
        }
        for (i, &y) in paths[n_levels - 1].y.iter().enumerate() {
            y_m1[i].push(1.0 + y.abs());
            y_m2[i].push((1.0 + y.abs()) * (1.0 + y.abs()));
        }
        for pair in 0..n_levels - 1 {
            let coarse = &paths[pair];
            let fine_p = &paths[pair + 1];
            let stride = 1usize << (sorted[pair + 1] - sorted[pair]);
            l1[pair].push((coarse.x.last().unwrap() - fine_p.x.last().unwrap()).abs());
            let mut worst: f64 = 0.0;
            for (i, &xc) in coarse.x.iter().enumerate() {
                worst = worst.max((xc - fine_p.x[i * stride]).abs());
            }
            sup[pair].push(worst);
        }
    }

    let sup_e1 = y_m1.iter().map(RunningMean::mean).fold(f64::MIN, f64::max);
    let sup_e2 = y_m2.iter().map(RunningMean::mean).fold(f64::MIN, f64::max);
    let m = model.declared_m();
    let (g_constant, g_bound) = uniform_bound_g(model.x0, m, model.horizon, sup_e1, sup_e2);
    let m1 = step_gap_m1(m, g_bound, sup_e1, sup_e2);

    let mut max_mean = f64::MIN;
    let mut max_se = 0.0;
    for level in &abs_x {
        for acc in level {
            let mean = acc.mean();
            if mean > max_mean {
                max_mean = mean;
                max_se = acc.se();
            }
        }
    }

    let meshes: Vec<f64> = sorted
        .iter()
        .map(|&k| model.horizon / (1u64 << k) as f64)
        .collect();
    let l1_at_t: Vec<f64> = l1.iter().map(RunningMean::mean).collect();
    let l1_se: Vec<f64> = l1.iter().map(RunningMean::se).collect();
    let sup_grid: Vec<f64> = sup.iter().map(RunningMean::mean).collect();
    let sup_se: Vec<f64> = sup.iter().map(RunningMean::se).collect();
    let slope = |errs: &[f64]| -> f64 {
        // least squares of log2(err) against coarse level index
        let pts: Vec<(f64, f64)> = errs
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0.0)
            .map(|(i, &e)| (sorted[i] as f64, e.log2()))
            .collect();
        if pts.len() < 2 {
            return 0.0;
        }
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    };

    Ok(ConvergenceReport {
        slope_l1: slope(&l1_at_t),
        slope_sup: slope(&sup_grid),
        levels: sorted,
        meshes,
        l1_at_t,
        l1_se,
        sup_grid,
        sup_se,
        g_constant,
        g_bound,
        m1,
        gamma1: 1.0 + m * fine_part.mesh(),
        gamma2: m / 2.0 * sup_e2,
        max_mean_abs_x: max_mean,
        max_mean_abs_x_se: max_se,
    })
}

/// Result of the step-function gap check `E|X^n_t - X^n_{eta(t)}|` against
/// `M1 sqrt(||Delta||)`.
#[derive(Debug, Clone)]
pub struct StepBoundReport {
    pub level: u32,
    pub mesh: f64,
    pub empirical_max: f64,
    pub empirical_max_se: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Evaluates the scheme's continuous interpolant between grid points (at
/// `refine` extra dyadic levels) and compares the worst per-time mean gap
/// from the frozen left endpoint against `M1 sqrt(mesh)`.
pub fn step_bound_check(
    model: &TriangularModel,
    level: u32,
    n_paths: usize,
    seed: u64,
) -> Result<StepBoundReport> {
    let refine = 2u32;
    let fine_part = Partition::dyadic(model.horizon, level + refine)?;
    let stride = 1usize << refine;
    let n_fine = fine_part.num_steps();

    let mut gaps = vec![RunningMean::new(); n_fine + 1];
    let mut y_m1 = RunningMean::new();
    let mut y_m2 = RunningMean::new();

    for p in 0..n_paths {
        let mut rng = path_rng(seed, p as u64);
        let fine = BrownianGrid::sample(fine_part, &mut rng).correlate(model.rho)?;
        let coarse = fine.coarsen(level)?;
        let joint = model.path_on(&coarse)?;
        // rebuild the frozen step coefficients
        let scheme = crate::engine::euler_peano_path(
            |t, y, x| model.drift.bar_a(&model.diffusion, t, y, x),
            |t, y, x| model.diffusion.bar_g(t, y, x),
            &joint.y,
            model.x0,
            &coarse,
        )?;
        debug_assert_eq!(scheme.values(), &joint.x[..]);
        for &y in &joint.y {
            let v = 1.0 + y.abs();
            y_m1.push(v);
            y_m2.push(v * v);
        }
        // interpolant gap X^n_t - X^n_{eta(t)} at every fine grid point;
        // coarse points belong to the interval ending there, so the gap
        // there is a full coarse step
        let mut w2_since = 0.0;
        for j in 1..=n_fine {
            if (j - 1) % stride == 0 {
                w2_since = 0.0;
            }
            w2_since += fine.dw2()[j - 1];
            let k = (j - 1) / stride;
            let (a, g) = scheme.frozen_coefficients()[k];
            let t = fine_part.point(j);
            let t_k = fine_part.point(k * stride);
            gaps[j].push((a * (t - t_k) + g * w2_since).abs());
        }
        gaps[0].push(0.0);
    }
    let sup_e1 = y_m1.mean();
    let sup_e2 = y_m2.mean();

    let m = model.declared_m();
    let (_, g_bound) = uniform_bound_g(model.x0, m, model.horizon, sup_e1, sup_e2);
    let m1 = step_gap_m1(m, g_bound, sup_e1, sup_e2);
    let mesh = model.horizon / (1u64 << level) as f64;
    let bound = m1 * mesh.sqrt();

    let mut empirical_max: f64 = 0.0;
    let mut empirical_se = 0.0;
    for acc in &gaps {
        if acc.n > 0 && acc.mean() > empirical_max {
            empirical_max = acc.mean();
            empirical_se = acc.se();
        }
    }
    Ok(StepBoundReport {
        level,
        mesh,
        empirical_max,
        empirical_max_se: empirical_se,
        bound,
        pass: empirical_max <= bound + 3.0 * empirical_se,
    })
}

/// Runs the deterministic scheme twice against the identical driver grid
/// and returns the sup-over-grid gap; the contract is exactly zero.
pub fn pathwise_uniqueness_check(model: &TriangularModel, grid: &BrownianGrid) -> Result<f64> {
    let first = model.path_on(grid)?;
    let second = model.path_on(grid)?;
    let mut worst: f64 = 0.0;
    for (a, b) in first.x.iter().zip(second.x.iter()) {
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}

/// Two-sample Kolmogorov-Smirnov statistic (sup gap of the empirical CDFs).
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
    let mut a: Vec<f64> = a.to_vec();
    let mut b: Vec<f64> = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        if a[i] < b[j] {
            i += 1;
        } else if b[j] < a[i] {
            j += 1;
        } else {
            // advance both past the tied value so equal samples cancel
            let v = a[i];
            while i < a.len() && a[i] == v {
                i += 1;
            }
            while j < b.len() && b[j] == v {
                j += 1;
            }
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::greenhalgh_coeffs;
    use crate::transition::{ContactRate, GreenhalghParams};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn greenhalgh_model() -> TriangularModel {
        let p = GreenhalghParams {
            mu: 0.01,
            gamma: 0.05,
            lambda: ContactRate::Constant { l0: 0.2 },
        };
        let (drift, diffusion) = greenhalgh_coeffs(&p).unwrap();
        TriangularModel {
            drift,
            diffusion,
            y_process: YProcess::SquareRoot { mu: p.mu, absorb: true },
            x0: 30.0,
            y0: 100.0,
            rho: 0.0,
            horizon: 1.0,
        }
    }

    #[test]
    fn a_seq_values() {
        assert_eq!(a_seq(0), 1.0);
        assert_abs_diff_eq!(a_seq(1), (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(a_seq(2), (-3.0f64).exp(), epsilon = 1e-15);
        for h in 0..10 {
            assert!(a_seq(h + 1) < a_seq(h));
        }
    }

    #[test]
    fn a_seq_log_identity() {
        // int_{a_h}^{a_{h-1}} du/u = ln(a_{h-1}) - ln(a_h) = h
        for h in 1..=8u32 {
            let integral = a_seq(h - 1).ln() - a_seq(h).ln();
            assert_abs_diff_eq!(integral, h as f64, epsilon = 1e-9);
        }
    }

    #[test]
    fn theta_at_zero_and_far_field() {
        for h in 1..=6 {
            let fam = ThetaFamily::new(h).unwrap();
            assert_eq!(fam.theta(0.0), 0.0);
            for &u in &[fam.a_h_minus_1(), 0.5_f64.max(fam.a_h_minus_1()), 1.0, 5.0] {
                assert_eq!(fam.theta_prime(u), 1.0);
                assert_eq!(fam.theta_prime(-u), -1.0);
            }
        }
    }

    #[test]
    fn theta_sandwich_and_derivative_bounds() {
        for h in 1..=6 {
            let fam = ThetaFamily::new(h).unwrap();
            for i in 0..10_000 {
                let u = -2.0 + 4.0 * i as f64 / 9999.0;
                let th = fam.theta(u);
                assert!(th <= u.abs() + 1e-15, "h={h} u={u}");
                assert!(th >= u.abs() - fam.a_h_minus_1() - 1e-15, "h={h} u={u}");
                assert!(fam.theta_prime(u).abs() <= 1.0 + 1e-15);
                let ts = fam.theta_second(u);
                assert!(ts >= 0.0);
                if ts > 0.0 {
                    let v = u.abs();
                    assert!(v > fam.a_h() && v < fam.a_h_minus_1());
                    assert!(ts <= 2.0 / (h as f64 * v) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn theta_profile_is_c1_at_knots() {
        for h in 1..=6 {
            let fam = ThetaFamily::new(h).unwrap();
            let eps = 1e-10;
            for knot in [fam.a_h(), fam.a_h_minus_1()] {
                let below = fam.theta(knot - eps * knot);
                let above = fam.theta(knot + eps * knot);
                assert!((above - below).abs() < 1e-8 * knot.max(1e-30));
                let pb = fam.theta_prime(knot - eps * knot);
                let pa = fam.theta_prime(knot + eps * knot);
                assert!((pa - pb).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn cauchy_errors_zero_model_exact_zero() {
        let model = TriangularModel {
            drift: DriftSpec::zero(),
            diffusion: QuadraticDiffusionSpec::constant(0.0, 1.0, 0.0, 1.0, 1.0),
            y_process: YProcess::SquareRoot { mu: 1.0, absorb: true },
            x0: 0.5,
            y0: 1.0,
            rho: 0.0,
            horizon: 1.0,
        };
        let rep = cauchy_errors(&model, &[3, 4, 5], 20, 1).unwrap();
        assert!(rep.l1_at_t.iter().all(|&e| e == 0.0));
        assert!(rep.sup_grid.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn cauchy_errors_pure_drift_order_one() {
        // dX = X dt: deterministic Euler, inter-level gaps halve per level
        let model = TriangularModel {
            drift: DriftSpec {
                a: Arc::new(|_, _, x| x),
                growth_m: 2.0,
                lipschitz_l: 1.0,
            },
            // huge beta keeps the clamp interval far away from the path
            diffusion: QuadraticDiffusionSpec::constant(0.0, 1e8, 0.0, 1e9, 1.0),
            y_process: YProcess::SquareRoot { mu: 1.0, absorb: true },
            x0: 1.0,
            y0: 0.0,
            rho: 0.0,
            horizon: 1.0,
        };
        let rep = cauchy_errors(&model, &[4, 5, 6, 7], 2, 1).unwrap();
        for w in rep.l1_at_t.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
        }
        assert!(rep.slope_l1 < -0.8 && rep.slope_l1 > -1.2);
    }

    #[test]
    fn cauchy_errors_validates_levels() {
        let model = greenhalgh_model();
        assert!(cauchy_errors(&model, &[5], 2, 1).is_err());
        assert!(cauchy_errors(&model, &[5, 4], 2, 1).is_err());
    }

    #[test]
    fn uniform_bound_examples() {
        let (g, bound) = uniform_bound_g(1.0, 1.0, 1.0, 1.0, 1.0);
        assert_abs_diff_eq!(g, 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bound, 3.0 * std::f64::consts::E, epsilon = 1e-12);
        let (g0, bound0) = uniform_bound_g(2.5, 0.0, 1.0, 7.0, 50.0);
        assert_eq!(g0, 2.5);
        assert_eq!(bound0, 2.5);
    }

    #[test]
    fn step_bound_zero_model() {
        let model = TriangularModel {
            drift: DriftSpec::zero(),
            diffusion: QuadraticDiffusionSpec::constant(0.0, 1.0, 0.0, 1.0, 1.0),
            y_process: YProcess::SquareRoot { mu: 1.0, absorb: true },
            x0: 0.0,
            y0: 0.0,
            rho: 0.0,
            horizon: 1.0,
        };
        let rep = step_bound_check(&model, 4, 50, 3).unwrap();
        assert_eq!(rep.empirical_max, 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn step_bound_scaling_with_mesh() {
        let model = greenhalgh_model();
        let coarse = step_bound_check(&model, 5, 400, 9).unwrap();
        let fine = step_bound_check(&model, 6, 400, 9).unwrap();
        assert!(coarse.pass && fine.pass);
        let ratio = coarse.empirical_max / fine.empirical_max;
        assert!((1.2..1.8).contains(&ratio), "ratio {ratio}");
        // bound is nonincreasing in level for a fixed model
        assert!(fine.bound <= coarse.bound * 1.05);
    }

    #[test]
    fn uniqueness_is_exact() {
        let model = greenhalgh_model();
        let part = Partition::dyadic(1.0, 8).unwrap();
        let grid = BrownianGrid::sample(part, &mut path_rng(17, 0))
            .correlate(model.rho)
            .unwrap();
        assert_eq!(pathwise_uniqueness_check(&model, &grid).unwrap(), 0.0);
    }

    #[test]
    fn uniqueness_probe_perturbed_start() {
        let model = greenhalgh_model();
        let part = Partition::dyadic(1.0, 8).unwrap();
        let grid = BrownianGrid::sample(part, &mut path_rng(18, 0))
            .correlate(model.rho)
            .unwrap();
        let base = model.path_on(&grid).unwrap();
        let mut shifted = model.clone();
        shifted.x0 += 1e-3;
        let other = shifted.path_on(&grid).unwrap();
        let gap = base
            .x
            .iter()
            .zip(other.x.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(gap > 0.0);
    }

    #[test]
    fn ks_statistic_basics() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(two_sample_ks(&a, &a), 0.0);
        let b = [10.0, 11.0, 12.0, 13.0];
        assert_eq!(two_sample_ks(&a, &b), 1.0);
    }
}
