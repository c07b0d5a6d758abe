//! Path simulation: the square-root driving process, the explicit
//! left-endpoint (Euler-Peano) scheme for the truncated-coefficient
//! equation, the reduced triangular system, the full two-dimensional
//! matrix-form system, the degenerate pure-drift case, and seeded
//! ensembles with an order-independent reduction.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::coefficients::{DriftSpec, QuadraticDiffusionSpec};
use crate::drivers::{BrownianGrid, Partition};
use crate::error::{Result, SimError};
use crate::transition::{covariance_matrix, drift_vector, sqrt_matrix, TransitionTable};

/// Per-path substream: derived deterministically from `(seed, path index)`,
/// independent of worker count and execution order.
pub fn path_rng(seed: u64, path_index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(path_index.wrapping_add(1));
    rng
}

/// Full-truncation Euler scheme for `dY = sqrt(2 mu Y) dW1`:
/// `Y_{k+1} = Y_k + sqrt(2 mu max(Y_k, 0)) dW1_k`.
///
/// With `absorb`, `Y` is set to 0 forever after its first crossing below 0.
pub fn simulate_sqrt_y(y0: f64, mu: f64, grid: &BrownianGrid, absorb: bool) -> Result<Vec<f64>> {
    if y0 < 0.0 {
        return Err(SimError::Domain(format!("y0 must be >= 0, got {y0}")));
    }
    let n = grid.partition().num_steps();
    let mut path = Vec::with_capacity(n + 1);
    let mut y = y0;
    path.push(y);
    let mut absorbed = y == 0.0;
    for &dw in grid.dw1().iter() {
        if absorbed {
            path.push(0.0);
            continue;
        }
        y += (2.0 * mu * y.max(0.0)).sqrt() * dw;
        if absorb && y <= 0.0 {
            absorbed = true;
            y = 0.0;
        }
        path.push(y);
    }
    Ok(path)
}

/// Euler-Maruyama for a caller-supplied environment equation
/// `dY = m(t, Y) dt + sigma(t, Y) dW1`. Moment bounds are the caller's
/// obligation.
pub fn simulate_y_general<M, S>(y0: f64, m: M, sigma: S, grid: &BrownianGrid) -> Vec<f64>
where
    M: Fn(f64, f64) -> f64,
    S: Fn(f64, f64) -> f64,
{
    let part = grid.partition();
    let dt = part.mesh();
    let mut path = Vec::with_capacity(part.num_steps() + 1);
    let mut y = y0;
    path.push(y);
    for (k, &dw) in grid.dw1().iter().enumerate() {
        let t = part.point(k);
        y += m(t, y) * dt + sigma(t, y) * dw;
        path.push(y);
    }
    path
}

/// Driving process for the triangular system.
#[derive(Clone)]
pub enum YProcess {
    /// `dY = sqrt(2 mu Y) dW1` with full truncation.
    SquareRoot { mu: f64, absorb: bool },
    /// User-supplied drift and diffusion closures.
    General {
        m: crate::coefficients::CoefFn2,
        sigma: crate::coefficients::CoefFn2,
    },
}

impl YProcess {
    pub fn simulate(&self, y0: f64, grid: &BrownianGrid) -> Result<Vec<f64>> {
        match self {
            YProcess::SquareRoot { mu, absorb } => simulate_sqrt_y(y0, *mu, grid, *absorb),
            YProcess::General { m, sigma } => {
                Ok(simulate_y_general(y0, |t, y| m(t, y), |t, y| sigma(t, y), grid))
            }
        }
    }
}

/// One scheme path: grid values plus the coefficients frozen at each left
/// endpoint, which make the continuous interpolant evaluable anywhere.
#[derive(Debug, Clone)]
pub struct SchemePath {
    partition: Partition,
    values: Vec<f64>,
    /// `(a_k, g_k)` frozen at `(t_k, Y_{t_k}, X_{t_k})` for each step.
    frozen: Vec<(f64, f64)>,
}

impl SchemePath {
    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// Values at grid points, `num_steps + 1` entries.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn frozen_coefficients(&self) -> &[(f64, f64)] {
        &self.frozen
    }

    /// Continuous interpolant
    /// `X_t = X_{eta(t)} + a_k (t - eta(t)) + g_k (W2_t - W2_{eta(t)})`;
    /// the caller supplies the Brownian increment since the last grid point.
    /// At grid points with the full-step increment this reproduces the
    /// recursion values exactly.
    pub fn interpolate(&self, t: f64, w2_since_eta: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(self.values[0]);
        }
        let k = self.partition.eta_index(t)?;
        let (a, g) = self.frozen[k];
        Ok(self.values[k] + a * (t - self.partition.point(k)) + g * w2_since_eta)
    }
}

/// Explicit scheme with both arguments frozen at the left endpoint:
/// `X_{k+1} = X_k + a_bar(t_k, Y_k, X_k) dt + g_bar(t_k, Y_k, X_k) dW2_k`.
pub fn euler_peano_path<A, G>(
    a_bar: A,
    g_bar: G,
    y_path: &[f64],
    x0: f64,
    grid: &BrownianGrid,
) -> Result<SchemePath>
where
    A: Fn(f64, f64, f64) -> Result<f64>,
    G: Fn(f64, f64, f64) -> Result<f64>,
{
    let part = *grid.partition();
    let n = part.num_steps();
    if y_path.len() != n + 1 {
        return Err(SimError::Domain(format!(
            "y path has {} points, partition needs {}",
            y_path.len(),
            n + 1
        )));
    }
    let dt = part.mesh();
    let mut values = Vec::with_capacity(n + 1);
    let mut frozen = Vec::with_capacity(n);
    let mut x = x0;
    values.push(x);
    for (k, &dw) in grid.dw2().iter().enumerate() {
        let t = part.point(k);
        let y = y_path[k];
        let a = a_bar(t, y, x)?;
        let g = g_bar(t, y, x)?;
        frozen.push((a, g));
        // summed left to right so the interpolant at grid points is
        // bitwise identical
        x = x + a * dt + g * dw;
        values.push(x);
    }
    Ok(SchemePath { partition: part, values, frozen })
}

/// A paired `(X, Y)` (or `(S1, S2)`) path on a shared partition and driver.
#[derive(Debug, Clone)]
pub struct JointPath {
    pub partition: Partition,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Triangular system: grid points where `X` left the root interval.
    /// Two-dimensional system: steps where the state was clamped into the
    /// admissible region before coefficient evaluation.
    pub flagged_steps: usize,
}

/// Runs the triangular system on an already-sampled (and correlated)
/// driver grid: `Y` from the first component, then the Euler-Peano scheme
/// for `X` against the frozen `Y` path.
pub fn triangular_on_grid(
    drift: &DriftSpec,
    diffusion: &QuadraticDiffusionSpec,
    y_process: &YProcess,
    x0: f64,
    y0: f64,
    grid: &BrownianGrid,
) -> Result<JointPath> {
    let y_path = y_process.simulate(y0, grid)?;
    let scheme = euler_peano_path(
        |t, y, x| drift.bar_a(diffusion, t, y, x),
        |t, y, x| diffusion.bar_g(t, y, x),
        &y_path,
        x0,
        grid,
    )?;
    let part = *grid.partition();
    let mut outside = 0usize;
    for (k, &x) in scheme.values().iter().enumerate() {
        let t = part.point(k.min(part.num_steps() - 1));
        let (r1, r2) = diffusion.roots(t, y_path[k])?;
        if x < r1 || x > r2 {
            outside += 1;
        }
    }
    Ok(JointPath {
        partition: part,
        x: scheme.values().to_vec(),
        y: y_path,
        flagged_steps: outside,
    })
}

/// Samples a fresh driver grid, applies the correlation, and runs
/// [`triangular_on_grid`]. Deterministic given the stream.
pub fn simulate_triangular(
    drift: &DriftSpec,
    diffusion: &QuadraticDiffusionSpec,
    y_process: &YProcess,
    x0: f64,
    y0: f64,
    partition: Partition,
    rho: f64,
    rng: &mut ChaCha12Rng,
) -> Result<JointPath> {
    let grid = BrownianGrid::sample(partition, rng).correlate(rho)?;
    triangular_on_grid(drift, diffusion, y_process, x0, y0, &grid)
}

/// Euler step for the two-dimensional matrix-form system
/// `dS = mu(S) dt + B(S) dW` with `B` the symmetric square root of the
/// transition covariance and independent driver components.
///
/// States are clamped into the nonnegative quadrant (where every rate, and
/// hence the covariance, is admissible) before coefficient evaluation;
/// clamps are counted in `flagged_steps`.
pub fn full_2d_on_grid(
    table: &TransitionTable,
    s0: (f64, f64),
    grid: &BrownianGrid,
) -> Result<JointPath> {
    let part = *grid.partition();
    let dt = part.mesh();
    let n = part.num_steps();
    let mut s1 = s0.0;
    let mut s2 = s0.1;
    let mut xs = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);
    xs.push(s1);
    ys.push(s2);
    let mut clamps = 0usize;
    for k in 0..n {
        let t = part.point(k);
        let (c1, c2) = (s1.max(0.0), s2.max(0.0));
        if c1 != s1 || c2 != s2 {
            clamps += 1;
        }
        let (mu1, mu2) = drift_vector(table, t, c1, c2)?;
        let v = covariance_matrix(table, t, c1, c2)?;
        let b = sqrt_matrix(&v).map_err(|e| SimError::Numerical {
            step: k,
            message: e.to_string(),
        })?;
        let (dw1, dw2) = (grid.dw1()[k], grid.dw2()[k]);
        s1 = c1 + mu1 * dt + b[0][0] * dw1 + b[0][1] * dw2;
        s2 = c2 + mu2 * dt + b[1][0] * dw1 + b[1][1] * dw2;
        xs.push(s1);
        ys.push(s2);
    }
    Ok(JointPath {
        partition: part,
        x: xs,
        y: ys,
        flagged_steps: clamps,
    })
}

/// Samples an independent two-component driver and runs [`full_2d_on_grid`].
pub fn simulate_full_2d(
    table: &TransitionTable,
    s0: (f64, f64),
    partition: Partition,
    rng: &mut ChaCha12Rng,
) -> Result<JointPath> {
    let grid = BrownianGrid::sample(partition, rng);
    full_2d_on_grid(table, s0, &grid)
}

/// Left-endpoint quadrature of the degenerate (zero-discriminant) case:
/// `X_t = x0 + sum a(t_k, Y_k, alpha(t_k, Y_k)/2) (t_{k+1} - t_k)`.
pub fn degenerate_solution(
    drift: &DriftSpec,
    diffusion: &QuadraticDiffusionSpec,
    y_path: &[f64],
    x0: f64,
    partition: Partition,
) -> Result<Vec<f64>> {
    let n = partition.num_steps();
    if y_path.len() != n + 1 {
        return Err(SimError::Domain(format!(
            "y path has {} points, partition needs {}",
            y_path.len(),
            n + 1
        )));
    }
    let dt = partition.mesh();
    let mut values = Vec::with_capacity(n + 1);
    let mut x = x0;
    values.push(x);
    for k in 0..n {
        let t = partition.point(k);
        let y = y_path[k];
        let mid = (diffusion.alpha)(t, y) / 2.0;
        x += (drift.a)(t, y, mid) * dt;
        values.push(x);
    }
    Ok(values)
}

/// Per-time ensemble statistics plus the terminal sample.
///
/// Means and variances are reduced block-by-block in fixed block order, so
/// the result is bitwise identical for any worker count.
#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub var_x: Vec<f64>,
    pub mean_y: Vec<f64>,
    pub var_y: Vec<f64>,
    pub terminal_x: Vec<f64>,
    pub terminal_y: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
}

impl EnsembleStats {
    /// Standard error of the mean of `X` at time index `i`.
    pub fn se_mean_x(&self, i: usize) -> f64 {
        (self.var_x[i] / self.n_paths as f64).sqrt()
    }

    pub fn se_mean_y(&self, i: usize) -> f64 {
        (self.var_y[i] / self.n_paths as f64).sqrt()
    }

    /// Empirical quantile of the terminal `X` sample (sorted copy).
    pub fn quantile_terminal_x(&self, q: f64) -> f64 {
        quantile(&self.terminal_x, q)
    }

    pub fn quantile_terminal_y(&self, q: f64) -> f64 {
        quantile(&self.terminal_y, q)
    }

    /// Histogram of terminal `X` over `bins` equal cells of width `width`
    /// starting at `min`; out-of-range samples are dropped.
    pub fn histogram_terminal_x(&self, min: f64, width: f64, bins: usize) -> Vec<u64> {
        histogram(&self.terminal_x, min, width, bins)
    }

    pub fn histogram_terminal_y(&self, min: f64, width: f64, bins: usize) -> Vec<u64> {
        histogram(&self.terminal_y, min, width, bins)
    }
}

fn quantile(sample: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = sample.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((v.len() - 1) as f64 * q.clamp(0.0, 1.0)).round() as usize;
    v[idx]
}

fn histogram(sample: &[f64], min: f64, width: f64, bins: usize) -> Vec<u64> {
    let mut counts = vec![0u64; bins];
    for &x in sample {
        let b = ((x - min) / width).floor();
        if b >= 0.0 && (b as usize) < bins {
            counts[b as usize] += 1;
        }
    }
    counts
}

// Fixed reduction block: paths are simulated in index order inside each
// block and block sums are combined in block order.
const ENSEMBLE_BLOCK: usize = 256;

struct BlockSums {
    sum_x: Vec<f64>,
    sumsq_x: Vec<f64>,
    sum_y: Vec<f64>,
    sumsq_y: Vec<f64>,
    terminal_x: Vec<f64>,
    terminal_y: Vec<f64>,
}

/// Runs `n_paths` independent simulations with per-path substreams of
/// `seed` and reduces them deterministically.
///
/// `simulate` receives the path index and its private stream and returns
/// the `(x, y)` values at the `n_times` recording times. A failing path
/// aborts the ensemble with its index.
pub fn ensemble<F>(
    n_paths: usize,
    seed: u64,
    times: Vec<f64>,
    simulate: F,
) -> Result<EnsembleStats>
where
    F: Fn(usize, &mut ChaCha12Rng) -> Result<(Vec<f64>, Vec<f64>)> + Sync,
{
    if n_paths == 0 {
        return Err(SimError::Domain("need at least one path".into()));
    }
    let n_times = times.len();
    let n_blocks = n_paths.div_ceil(ENSEMBLE_BLOCK);
    let blocks: Vec<Result<BlockSums>> = (0..n_blocks)
        .into_par_iter()
        .map(|block| {
            let start = block * ENSEMBLE_BLOCK;
            let end = (start + ENSEMBLE_BLOCK).min(n_paths);
            let mut sums = BlockSums {
                sum_x: vec![0.0; n_times],
                sumsq_x: vec![0.0; n_times],
                sum_y: vec![0.0; n_times],
                sumsq_y: vec![0.0; n_times],
                terminal_x: Vec::with_capacity(end - start),
                terminal_y: Vec::with_capacity(end - start),
            };
            for p in start..end {
                let mut rng = path_rng(seed, p as u64);
                let (xs, ys) = simulate(p, &mut rng).map_err(|e| {
                    SimError::Numerical {
                        step: p,
                        message: format!("path {p} failed: {e}"),
                    }
                })?;
                if xs.len() != n_times || ys.len() != n_times {
                    return Err(SimError::Domain(format!(
                        "path {p} returned {} / {} values, expected {n_times}",
                        xs.len(),
                        ys.len()
                    )));
                }
                for i in 0..n_times {
                    sums.sum_x[i] += xs[i];
                    sums.sumsq_x[i] += xs[i] * xs[i];
                    sums.sum_y[i] += ys[i];
                    sums.sumsq_y[i] += ys[i] * ys[i];
                }
                sums.terminal_x.push(xs[n_times - 1]);
                sums.terminal_y.push(ys[n_times - 1]);
            }
            Ok(sums)
        })
        .collect();

    let mut sum_x = vec![0.0; n_times];
    let mut sumsq_x = vec![0.0; n_times];
    let mut sum_y = vec![0.0; n_times];
    let mut sumsq_y = vec![0.0; n_times];
    let mut terminal_x = Vec::with_capacity(n_paths);
    let mut terminal_y = Vec::with_capacity(n_paths);
    for block in blocks {
        let b = block?;
        for i in 0..n_times {
            sum_x[i] += b.sum_x[i];
            sumsq_x[i] += b.sumsq_x[i];
            sum_y[i] += b.sum_y[i];
            sumsq_y[i] += b.sumsq_y[i];
        }
        terminal_x.extend_from_slice(&b.terminal_x);
        terminal_y.extend_from_slice(&b.terminal_y);
    }
    let nf = n_paths as f64;
    let var = |sum: &[f64], sumsq: &[f64], i: usize| {
        if n_paths < 2 {
            0.0
        } else {
            ((sumsq[i] - sum[i] * sum[i] / nf) / (nf - 1.0)).max(0.0)
        }
    };
    let mean_x: Vec<f64> = sum_x.iter().map(|s| s / nf).collect();
    let mean_y: Vec<f64> = sum_y.iter().map(|s| s / nf).collect();
    let var_x: Vec<f64> = (0..n_times).map(|i| var(&sum_x, &sumsq_x, i)).collect();
    let var_y: Vec<f64> = (0..n_times).map(|i| var(&sum_y, &sumsq_y, i)).collect();
    Ok(EnsembleStats {
        times,
        mean_x,
        var_x,
        mean_y,
        var_y,
        terminal_x,
        terminal_y,
        n_paths,
        seed,
    })
}
