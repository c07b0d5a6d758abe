//! Nested dyadic time grids and the two-dimensional Brownian increments
//! living on them.
//!
//! All refinement is fine-to-coarse: the finest grid is sampled once and
//! coarse increments are exact sums of fine ones (fixed left-to-right
//! summation order), so every level represents the same Brownian path and
//! coarsening is bitwise reproducible.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SimError};

/// Equidistant dyadic partition of `[0, T]` with `2^level + 1` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partition {
    horizon: f64,
    level: u32,
}

impl Partition {
    /// `2^level` subintervals of mesh `T / 2^level`.
    pub fn dyadic(horizon: f64, level: u32) -> Result<Partition> {
        if !(horizon > 0.0) {
            return Err(SimError::Domain(format!("horizon must be > 0, got {horizon}")));
        }
        if level > 40 {
            return Err(SimError::Domain(format!("level {level} too fine")));
        }
        Ok(Partition { horizon, level })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Number of subintervals, `2^level`.
    pub fn num_steps(&self) -> usize {
        1usize << self.level
    }

    pub fn mesh(&self) -> f64 {
        // division by a power of two is exact
        self.horizon / self.num_steps() as f64
    }

    /// Grid point `t_i = i * mesh`; nested levels share points bitwise.
    pub fn point(&self, i: usize) -> f64 {
        debug_assert!(i <= self.num_steps());
        if i == self.num_steps() {
            self.horizon
        } else {
            i as f64 * self.mesh()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.num_steps()).map(move |i| self.point(i))
    }

    /// Index `k` such that `t` lies in `]t_k, t_{k+1}]`; `eta_index(0) = 0`.
    pub fn eta_index(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(SimError::Domain(format!(
                "t = {t} outside [0, {}]",
                self.horizon
            )));
        }
        if t == 0.0 {
            return Ok(0);
        }
        let n = self.num_steps();
        let mut k = ((t / self.mesh()).ceil() as usize).saturating_sub(1).min(n - 1);
        // guard against rounding in t / mesh
        while k > 0 && self.point(k) >= t {
            k -= 1;
        }
        while k + 1 < n && self.point(k + 1) < t {
            k += 1;
        }
        Ok(k)
    }

    /// Step function `eta(t)`: the left endpoint of the half-open interval
    /// `]t_k, t_{k+1}]` containing `t`, with `eta(0) = 0`.
    pub fn eta(&self, t: f64) -> Result<f64> {
        Ok(self.point(self.eta_index(t)?))
    }
}

/// Per-interval increments of a two-dimensional Brownian motion on a
/// partition. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianGrid {
    partition: Partition,
    dw1: Vec<f64>,
    dw2: Vec<f64>,
    rho: f64,
}

impl BrownianGrid {
    /// Samples independent standard increments per component
    /// (variance = interval length); deterministic given the stream.
    pub fn sample<R: Rng + ?Sized>(partition: Partition, rng: &mut R) -> BrownianGrid {
        let n = partition.num_steps();
        let sd = partition.mesh().sqrt();
        let mut dw1 = Vec::with_capacity(n);
        let mut dw2 = Vec::with_capacity(n);
        for _ in 0..n {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            dw1.push(sd * z1);
            dw2.push(sd * z2);
        }
        BrownianGrid { partition, dw1, dw2, rho: 0.0 }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn dw1(&self) -> &[f64] {
        &self.dw1
    }

    pub fn dw2(&self) -> &[f64] {
        &self.dw2
    }

    /// Replaces the second component by `rho * dW1 + sqrt(1 - rho^2) * dW2`;
    /// the first component is unchanged.
    pub fn correlate(&self, rho: f64) -> Result<BrownianGrid> {
        if !(-1.0..=1.0).contains(&rho) {
            return Err(SimError::Domain(format!("rho = {rho} outside [-1, 1]")));
        }
        if rho == 0.0 {
            return Ok(self.clone());
        }
        let comp = (1.0 - rho * rho).sqrt();
        let dw2 = self
            .dw1
            .iter()
            .zip(self.dw2.iter())
            .map(|(&a, &b)| rho * a + comp * b)
            .collect();
        Ok(BrownianGrid {
            partition: self.partition,
            dw1: self.dw1.clone(),
            dw2,
            rho,
        })
    }

    /// Coarse increments as exact sums of the constituent fine increments,
    /// summed left to right: the coarse grid is the same Brownian path.
    pub fn coarsen(&self, target_level: u32) -> Result<BrownianGrid> {
        let level = self.partition.level();
        if target_level > level {
            return Err(SimError::Domain(format!(
                "target level {target_level} finer than grid level {level}"
            )));
        }
        if target_level == level {
            return Ok(self.clone());
        }
        // Halve one level at a time so coarsening in stages and in one shot
        // produce bitwise-identical increments.
        let halve = |v: &[f64]| -> Vec<f64> {
            v.chunks_exact(2).map(|c| c[0] + c[1]).collect()
        };
        let mut dw1 = self.dw1.clone();
        let mut dw2 = self.dw2.clone();
        for _ in target_level..level {
            dw1 = halve(&dw1);
            dw2 = halve(&dw2);
        }
        Ok(BrownianGrid {
            partition: Partition {
                horizon: self.partition.horizon(),
                level: target_level,
            },
            dw1,
            dw2,
            rho: self.rho,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn dyadic_level_zero() {
        let p = Partition::dyadic(1.0, 0).unwrap();
        assert_eq!(p.points().collect::<Vec<_>>(), vec![0.0, 1.0]);
        assert_eq!(p.mesh(), 1.0);
    }

    #[test]
    fn dyadic_level_two() {
        let p = Partition::dyadic(1.0, 2).unwrap();
        assert_eq!(
            p.points().collect::<Vec<_>>(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert_eq!(p.mesh(), 0.25);
    }

    #[test]
    fn dyadic_rejects_nonpositive_horizon() {
        assert!(Partition::dyadic(0.0, 3).is_err());
        assert!(Partition::dyadic(-1.0, 3).is_err());
    }

    #[test]
    fn nesting_is_bitwise() {
        let coarse = Partition::dyadic(0.7, 3).unwrap();
        let fine = Partition::dyadic(0.7, 6).unwrap();
        let fine_points: Vec<f64> = fine.points().collect();
        for (i, t) in coarse.points().enumerate() {
            assert_eq!(t.to_bits(), fine_points[i * 8].to_bits());
        }
    }

    #[test]
    fn eta_conventions() {
        let p = Partition::dyadic(1.0, 2).unwrap();
        assert_eq!(p.eta(0.0).unwrap(), 0.0);
        assert_eq!(p.eta(0.3).unwrap(), 0.25);
        // grid points belong to the interval ending there
        assert_eq!(p.eta(0.5).unwrap(), 0.25);
        assert_eq!(p.eta(0.25).unwrap(), 0.0);
        assert_eq!(p.eta(1.0).unwrap(), 0.75);
        assert!(p.eta(1.5).is_err());
        assert!(p.eta(-0.1).is_err());
    }

    #[test]
    fn eta_within_mesh() {
        let p = Partition::dyadic(2.0, 7).unwrap();
        for i in 0..=1000 {
            let t = 2.0 * i as f64 / 1000.0;
            let e = p.eta(t).unwrap();
            assert!(e <= t && t - e <= p.mesh() + 1e-15);
        }
    }

    #[test]
    fn sample_is_deterministic() {
        let p = Partition::dyadic(1.0, 5).unwrap();
        let g1 = BrownianGrid::sample(p, &mut ChaCha12Rng::seed_from_u64(99));
        let g2 = BrownianGrid::sample(p, &mut ChaCha12Rng::seed_from_u64(99));
        assert_eq!(g1, g2);
    }

    #[test]
    fn increment_variance() {
        // per-increment variance ~ mesh and total variance ~ T, 3 SE
        let p = Partition::dyadic(1.0, 3).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let n = 100_000usize;
        let mut sum_sq_first = 0.0;
        let mut sum_sq_total = 0.0;
        for _ in 0..n {
            let g = BrownianGrid::sample(p, &mut rng);
            sum_sq_first += g.dw1()[0] * g.dw1()[0];
            let w_t: f64 = g.dw1().iter().sum();
            sum_sq_total += w_t * w_t;
        }
        let mesh = p.mesh();
        // Var(Z^2) = 2 sigma^4 for Z ~ N(0, sigma^2)
        let se_first = (2.0 * mesh * mesh / n as f64).sqrt();
        let se_total = (2.0 / n as f64).sqrt();
        assert!((sum_sq_first / n as f64 - mesh).abs() <= 3.0 * se_first);
        assert!((sum_sq_total / n as f64 - 1.0).abs() <= 3.0 * se_total);
    }

    #[test]
    fn correlate_identity_and_full() {
        let p = Partition::dyadic(1.0, 4).unwrap();
        let g = BrownianGrid::sample(p, &mut ChaCha12Rng::seed_from_u64(7));
        let g0 = g.correlate(0.0).unwrap();
        assert_eq!(g, g0);
        let g1 = g.correlate(1.0).unwrap();
        assert_eq!(g1.dw1(), g1.dw2());
        assert!(g.correlate(1.5).is_err());
    }

    #[test]
    fn correlate_empirical_rho() {
        let p = Partition::dyadic(1.0, 0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let n = 1_000_000usize;
        let mut sum = 0.0;
        for _ in 0..n {
            let g = BrownianGrid::sample(p, &mut rng).correlate(0.5).unwrap();
            sum += g.dw1()[0] * g.dw2()[0];
        }
        // E[dW1 dW2] = rho * T; Var(Z1 * (rho Z1 + c Z2)) = 1 + rho^2
        let se = ((1.0 + 0.25) / n as f64).sqrt();
        assert!((sum / n as f64 - 0.5).abs() <= 3.0 * se);
    }

    #[test]
    fn coarsen_to_own_level_is_identity() {
        let p = Partition::dyadic(1.0, 6).unwrap();
        let g = BrownianGrid::sample(p, &mut ChaCha12Rng::seed_from_u64(9));
        assert_eq!(g.coarsen(6).unwrap(), g);
        assert!(g.coarsen(7).is_err());
    }

    #[test]
    fn coarsen_sums_pairs_exactly() {
        let p = Partition::dyadic(1.0, 6).unwrap();
        let g = BrownianGrid::sample(p, &mut ChaCha12Rng::seed_from_u64(10));
        let c = g.coarsen(5).unwrap();
        for i in 0..c.dw1().len() {
            let expect = g.dw1()[2 * i] + g.dw1()[2 * i + 1];
            assert_eq!(c.dw1()[i].to_bits(), expect.to_bits());
        }
    }

    #[test]
    fn coarsen_is_transitive_bitwise() {
        let p = Partition::dyadic(1.0, 8).unwrap();
        let g = BrownianGrid::sample(p, &mut ChaCha12Rng::seed_from_u64(11));
        for j in 0..=5u32 {
            let direct = g.coarsen(j).unwrap();
            let via = g.coarsen(5).unwrap().coarsen(j).unwrap();
            assert_eq!(direct, via);
        }
    }

    #[test]
    fn coarse_path_statistics_match_fine_restriction() {
        let p = Partition::dyadic(1.0, 7).unwrap();
        let g = BrownianGrid::sample(p, &mut ChaCha12Rng::seed_from_u64(12));
        let c = g.coarsen(4).unwrap();
        // cumulative sums at shared points agree (same summation order)
        let stride = 8;
        let mut fine_cum = 0.0;
        let mut fine_at_coarse = vec![0.0];
        for (i, &d) in g.dw1().iter().enumerate() {
            fine_cum += d;
            if (i + 1) % stride == 0 {
                fine_at_coarse.push(fine_cum);
            }
        }
        let mut coarse_cum = 0.0;
        for (i, &d) in c.dw1().iter().enumerate() {
            coarse_cum += d;
            assert_abs_diff_eq!(coarse_cum, fine_at_coarse[i + 1], epsilon = 1e-12);
        }
    }
}
