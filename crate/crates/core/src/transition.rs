//! Two-state jump model: transition table, drift vector, covariance matrix,
//! its symmetric square root, and a fixed-step jump-chain simulator.
//!
//! The model is a pair of counts `(s1, s2)` that in a small interval `dt`
//! change by one of nine moves (single births/deaths in either state,
//! transfers in both directions, simultaneous birth/death, or no change),
//! each with probability `rate * dt`.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Result, SimError};

/// A rate function of `(t, s1, s2)`, in units of 1/time.
pub type RateFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

fn const_rate(v: f64) -> RateFn {
    Arc::new(move |_, _, _| v)
}

/// The nine-move transition table with per-channel rate functions and the
/// jump amplitudes of the two states.
///
/// Channel order is fixed: `d1, b1, d2, b2, m12, m21, m11, m22`, matching
/// the moves `[-l1,0], [l1,0], [0,-l2], [0,l2], [-l1,l2], [l1,-l2],
/// [-l1,-l2], [l1,l2]` in that order; the ninth move is "no change".
#[derive(Clone)]
pub struct TransitionTable {
    pub d1: RateFn,
    pub b1: RateFn,
    pub d2: RateFn,
    pub b2: RateFn,
    pub m12: RateFn,
    pub m21: RateFn,
    pub m11: RateFn,
    pub m22: RateFn,
    /// Jump amplitude of state 1 (counts per event, >= 0).
    pub lambda1: f64,
    /// Jump amplitude of state 2 (counts per event, >= 0).
    pub lambda2: f64,
}

/// The three entries `(a, b, c)` of the symmetric covariance matrix
/// `V = [[a, b], [b, c]]`, in units of count^2/time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceEntries {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CovarianceEntries {
    /// `w = sqrt(ac - b^2)`; well defined only when V is PSD.
    pub fn w(&self) -> f64 {
        (self.a * self.c - self.b * self.b).max(0.0).sqrt()
    }

    pub fn discriminant(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0.0 && self.b == 0.0 && self.c == 0.0
    }
}

/// Contact-rate family for the SIS instantiation: continuous and monotone
/// non-decreasing functions of the total population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContactRate {
    /// lambda(n) = l0
    Constant { l0: f64 },
    /// lambda(n) = l0 + slope * n
    Affine { l0: f64, slope: f64 },
    /// lambda(n) = l0 * n / (half + n)
    Saturating { l0: f64, half: f64 },
}

impl ContactRate {
    pub fn eval(&self, n: f64) -> f64 {
        match *self {
            ContactRate::Constant { l0 } => l0,
            ContactRate::Affine { l0, slope } => l0 + slope * n,
            ContactRate::Saturating { l0, half } => {
                if n <= 0.0 {
                    0.0
                } else {
                    l0 * n / (half + n)
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ContactRate::Constant { l0 } => l0 >= 0.0,
            ContactRate::Affine { l0, slope } => l0 >= 0.0 && slope >= 0.0,
            ContactRate::Saturating { l0, half } => l0 >= 0.0 && half > 0.0,
        };
        if !ok {
            return Err(SimError::Domain(format!(
                "contact rate parameters out of range: {self:?}"
            )));
        }
        // Monotonicity check by sampling; all shipped families are monotone
        // by construction, this guards against future additions.
        let mut prev = self.eval(0.0);
        for i in 1..=64 {
            let n = i as f64 * 10.0;
            let cur = self.eval(n);
            if cur < prev - 1e-12 {
                return Err(SimError::Assumption(format!(
                    "contact rate not monotone non-decreasing near n = {n}"
                )));
            }
            prev = cur;
        }
        Ok(())
    }
}

/// Parameters of the SIS-with-demography instantiation of the table.
#[derive(Debug, Clone, Copy)]
pub struct GreenhalghParams {
    /// Per-capita birth/death rate, > 0.
    pub mu: f64,
    /// Recovery rate, >= 0.
    pub gamma: f64,
    /// Contact rate as a function of total population.
    pub lambda: ContactRate,
}

impl GreenhalghParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(SimError::Domain(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(self.gamma >= 0.0) {
            return Err(SimError::Domain(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        self.lambda.validate()
    }
}

/// Infection pressure `lambda(n) * s1 * s2 / n`, defined as 0 at `n <= 0`
/// (the product s1*s2 <= n^2/4 forces the limit).
pub fn infection_rate(lambda: &ContactRate, s1: f64, s2: f64) -> f64 {
    let n = s1 + s2;
    if n <= 0.0 {
        0.0
    } else {
        lambda.eval(n) * s1 * s2 / n
    }
}

/// Builds the transition table for the SIS model with demographic
/// stochasticity: `d1 = mu*s1`, `b1 = mu*n`, `d2 = mu*s2`, `b2 = 0`,
/// `m12 = lambda(n)*s1*s2/n`, `m21 = gamma*s2`, `m11 = m22 = 0`, unit jumps.
pub fn greenhalgh_table(p: &GreenhalghParams) -> Result<TransitionTable> {
    p.validate()?;
    let mu = p.mu;
    let gamma = p.gamma;
    let lambda = p.lambda;
    Ok(TransitionTable {
        d1: Arc::new(move |_, s1, _| mu * s1),
        b1: Arc::new(move |_, s1, s2| mu * (s1 + s2)),
        d2: Arc::new(move |_, _, s2| mu * s2),
        b2: const_rate(0.0),
        m12: Arc::new(move |_, s1, s2| infection_rate(&lambda, s1, s2)),
        m21: Arc::new(move |_, _, s2| gamma * s2),
        m11: const_rate(0.0),
        m22: const_rate(0.0),
        lambda1: 1.0,
        lambda2: 1.0,
    })
}

/// All eight channel rates evaluated at one state, in fixed channel order.
#[derive(Debug, Clone, Copy)]
pub struct Rates {
    pub d1: f64,
    pub b1: f64,
    pub d2: f64,
    pub b2: f64,
    pub m12: f64,
    pub m21: f64,
    pub m11: f64,
    pub m22: f64,
}

impl Rates {
    pub fn m_total(&self) -> f64 {
        self.m12 + self.m21 + self.m11 + self.m22
    }

    pub fn sum(&self) -> f64 {
        self.d1 + self.b1 + self.d2 + self.b2 + self.m_total()
    }

    fn as_array(&self) -> [f64; 8] {
        [
            self.d1, self.b1, self.d2, self.b2, self.m12, self.m21, self.m11, self.m22,
        ]
    }
}

impl TransitionTable {
    /// Evaluates every channel rate at `(t, s1, s2)`, rejecting negative values.
    pub fn rates(&self, t: f64, s1: f64, s2: f64) -> Result<Rates> {
        let r = Rates {
            d1: (self.d1)(t, s1, s2),
            b1: (self.b1)(t, s1, s2),
            d2: (self.d2)(t, s1, s2),
            b2: (self.b2)(t, s1, s2),
            m12: (self.m12)(t, s1, s2),
            m21: (self.m21)(t, s1, s2),
            m11: (self.m11)(t, s1, s2),
            m22: (self.m22)(t, s1, s2),
        };
        for (name, v) in [
            ("d1", r.d1),
            ("b1", r.b1),
            ("d2", r.d2),
            ("b2", r.b2),
            ("m12", r.m12),
            ("m21", r.m21),
            ("m11", r.m11),
            ("m22", r.m22),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(SimError::Assumption(format!(
                    "rate {name} = {v} at (t={t}, s1={s1}, s2={s2})"
                )));
            }
        }
        Ok(r)
    }
}

/// Per-unit-time mean of the state change,
/// `((-d1+b1-m12+m21+m22-m11)*l1, (-d2+b2+m12-m21+m22-m11)*l2)`.
pub fn drift_vector(table: &TransitionTable, t: f64, s1: f64, s2: f64) -> Result<(f64, f64)> {
    let r = table.rates(t, s1, s2)?;
    let mu1 = (-r.d1 + r.b1 - r.m12 + r.m21 + r.m22 - r.m11) * table.lambda1;
    let mu2 = (-r.d2 + r.b2 + r.m12 - r.m21 + r.m22 - r.m11) * table.lambda2;
    Ok((mu1, mu2))
}

/// Per-unit-time second moment of the state change:
/// `a = (d1+b1+ma)*l1^2`, `c = (d2+b2+ma)*l2^2`,
/// `b = (-m12-m21+m22+m11)*l1*l2` with `ma` the sum of the four transfer rates.
pub fn covariance_matrix(
    table: &TransitionTable,
    t: f64,
    s1: f64,
    s2: f64,
) -> Result<CovarianceEntries> {
    let r = table.rates(t, s1, s2)?;
    let ma = r.m_total();
    Ok(CovarianceEntries {
        a: (r.d1 + r.b1 + ma) * table.lambda1 * table.lambda1,
        c: (r.d2 + r.b2 + ma) * table.lambda2 * table.lambda2,
        b: (-r.m12 - r.m21 + r.m22 + r.m11) * table.lambda1 * table.lambda2,
    })
}

/// Symmetric square root `B = (1/d) [[a+w, b], [b, c+w]]` of
/// `V = [[a, b], [b, c]]`, with `w = sqrt(ac - b^2)` and `d = sqrt(a+c+2w)`.
///
/// Returns the zero matrix for `V = 0`.
pub fn sqrt_matrix(v: &CovarianceEntries) -> Result<[[f64; 2]; 2]> {
    if v.is_zero() {
        return Ok([[0.0, 0.0], [0.0, 0.0]]);
    }
    if v.a < 0.0 || v.c < 0.0 {
        return Err(SimError::Assumption(format!(
            "diagonal entries must be nonnegative: a = {}, c = {}",
            v.a, v.c
        )));
    }
    let disc = v.discriminant();
    // Tolerate tiny negative discriminants from rounding in a*c - b*b.
    let tol = 1e-12 * (v.a * v.c).abs().max(v.b * v.b);
    if disc < -tol {
        return Err(SimError::Assumption(format!(
            "covariance matrix not PSD: ac - b^2 = {disc}"
        )));
    }
    let w = disc.max(0.0).sqrt();
    let d2 = v.a + v.c + 2.0 * w;
    if d2 <= 0.0 {
        return Err(SimError::Numerical {
            step: 0,
            message: format!("degenerate square root: a+c+2w = {d2} with V != 0"),
        });
    }
    let d = d2.sqrt();
    Ok([[(v.a + w) / d, v.b / d], [v.b / d, (v.c + w) / d]])
}

/// One fixed-step jump: samples exactly one of the nine moves with
/// probabilities `rate * dt` (residual: no change) from a single uniform
/// draw against cumulative probabilities in channel order.
pub fn jump_step<R: Rng + ?Sized>(
    table: &TransitionTable,
    t: f64,
    state: (f64, f64),
    dt: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let (s1, s2) = state;
    let r = table.rates(t, s1, s2)?;
    let total = r.sum() * dt;
    if total > 1.0 {
        return Err(SimError::StepSize(format!(
            "sum of jump probabilities {total} > 1 at (t={t}, s1={s1}, s2={s2}); shrink dt"
        )));
    }
    let (l1, l2) = (table.lambda1, table.lambda2);
    let moves: [(f64, f64); 8] = [
        (-l1, 0.0),
        (l1, 0.0),
        (0.0, -l2),
        (0.0, l2),
        (-l1, l2),
        (l1, -l2),
        (-l1, -l2),
        (l1, l2),
    ];
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (rate, mv) in r.as_array().iter().zip(moves.iter()) {
        cum += rate * dt;
        // Boundary ties resolve toward the lower index.
        if u <= cum {
            return Ok((s1 + mv.0, s2 + mv.1));
        }
    }
    Ok(state)
}

/// Iterates `jump_step` on an equidistant grid of step `dt` up to horizon `t_end`.
///
/// Returns the `n+1` visited states; deterministic given the stream.
pub fn simulate_jump_chain<R: Rng + ?Sized>(
    table: &TransitionTable,
    state0: (f64, f64),
    dt: f64,
    t_end: f64,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    if dt <= 0.0 || t_end < 0.0 {
        return Err(SimError::Domain(format!(
            "need dt > 0 and t_end >= 0, got dt = {dt}, t_end = {t_end}"
        )));
    }
    let steps_f = t_end / dt;
    let steps = steps_f.round() as usize;
    if (steps as f64 - steps_f).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(SimError::Domain(format!(
            "dt = {dt} does not divide t_end = {t_end}"
        )));
    }
    let mut path = Vec::with_capacity(steps + 1);
    let mut state = state0;
    path.push(state);
    for k in 0..steps {
        state = jump_step(table, k as f64 * dt, state, dt, rng)?;
        path.push(state);
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn zero_table() -> TransitionTable {
        TransitionTable {
            d1: const_rate(0.0),
            b1: const_rate(0.0),
            d2: const_rate(0.0),
            b2: const_rate(0.0),
            m12: const_rate(0.0),
            m21: const_rate(0.0),
            m11: const_rate(0.0),
            m22: const_rate(0.0),
            lambda1: 1.0,
            lambda2: 1.0,
        }
    }

    fn greenhalgh() -> TransitionTable {
        greenhalgh_table(&GreenhalghParams {
            mu: 0.01,
            gamma: 0.05,
            lambda: ContactRate::Constant { l0: 0.2 },
        })
        .unwrap()
    }

    #[test]
    fn drift_zero_rates() {
        let t = zero_table();
        assert_eq!(drift_vector(&t, 0.0, 3.0, 4.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn drift_zero_amplitudes() {
        let mut t = greenhalgh();
        t.lambda1 = 0.0;
        t.lambda2 = 0.0;
        assert_eq!(drift_vector(&t, 0.0, 50.0, 50.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn drift_greenhalgh_example() {
        // m12 = 0.2*50*50/100 = 5, m21 = 0.05*50 = 2.5, d1 = 0.5, b1 = 1, d2 = 0.5
        let (m1, m2) = drift_vector(&greenhalgh(), 0.0, 50.0, 50.0).unwrap();
        assert_abs_diff_eq!(m1, -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m2, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn drift_components_cancel_for_greenhalgh() {
        let tbl = greenhalgh();
        for &(s1, s2) in &[(50.0, 50.0), (10.0, 90.0), (1.0, 0.0), (0.0, 0.0), (7.0, 3.0)] {
            let (m1, m2) = drift_vector(&tbl, 0.0, s1, s2).unwrap();
            assert_abs_diff_eq!(m1, -m2, epsilon = 1e-12);
        }
    }

    #[test]
    fn covariance_greenhalgh_example() {
        let v = covariance_matrix(&greenhalgh(), 0.0, 50.0, 50.0).unwrap();
        assert_abs_diff_eq!(v.a, 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.b, -7.5, epsilon = 1e-12);
        assert_abs_diff_eq!(v.c, 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.discriminant(), 15.75, epsilon = 1e-12);
    }

    #[test]
    fn covariance_single_channel() {
        let mut t = zero_table();
        t.b1 = const_rate(1.0);
        let v = covariance_matrix(&t, 0.0, 0.0, 0.0).unwrap();
        assert_eq!((v.a, v.b, v.c), (1.0, 0.0, 0.0));
    }

    #[test]
    fn covariance_zero_rates() {
        let v = covariance_matrix(&zero_table(), 0.0, 1.0, 2.0).unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn negative_rate_rejected() {
        let mut t = zero_table();
        t.d1 = const_rate(-1.0);
        assert!(matches!(
            drift_vector(&t, 0.0, 0.0, 0.0),
            Err(SimError::Assumption(_))
        ));
    }

    #[test]
    fn sqrt_diagonal() {
        let b = sqrt_matrix(&CovarianceEntries { a: 4.0, b: 0.0, c: 9.0 }).unwrap();
        assert_abs_diff_eq!(b[0][0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b[1][1], 3.0, epsilon = 1e-12);
        assert_eq!(b[0][1], 0.0);
    }

    #[test]
    fn sqrt_identity() {
        let b = sqrt_matrix(&CovarianceEntries { a: 1.0, b: 0.0, c: 1.0 }).unwrap();
        assert_abs_diff_eq!(b[0][0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b[1][1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sqrt_zero_matrix() {
        let b = sqrt_matrix(&CovarianceEntries { a: 0.0, b: 0.0, c: 0.0 }).unwrap();
        assert_eq!(b, [[0.0, 0.0], [0.0, 0.0]]);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let v = CovarianceEntries { a: 1.0, b: 2.0, c: 1.0 };
        assert!(sqrt_matrix(&v).is_err());
    }

    #[test]
    fn sqrt_multiply_back_random() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..1000 {
            // V = A A^T is PSD by construction.
            let a11: f64 = rng.gen_range(-10.0..10.0);
            let a12: f64 = rng.gen_range(-10.0..10.0);
            let a21: f64 = rng.gen_range(-10.0..10.0);
            let a22: f64 = rng.gen_range(-10.0..10.0);
            let v = CovarianceEntries {
                a: a11 * a11 + a12 * a12,
                b: a11 * a21 + a12 * a22,
                c: a21 * a21 + a22 * a22,
            };
            let b = sqrt_matrix(&v).unwrap();
            let norm = v.a.abs().max(v.b.abs()).max(v.c.abs());
            let bb00 = b[0][0] * b[0][0] + b[0][1] * b[0][1];
            let bb01 = b[0][0] * b[0][1] + b[0][1] * b[1][1];
            let bb11 = b[0][1] * b[0][1] + b[1][1] * b[1][1];
            assert!((bb00 - v.a).abs() <= 1e-12 * norm);
            assert!((bb01 - v.b).abs() <= 1e-12 * norm);
            assert!((bb11 - v.c).abs() <= 1e-12 * norm);
        }
    }

    #[test]
    fn greenhalgh_table_empty_population() {
        let tbl = greenhalgh();
        let r = tbl.rates(0.0, 0.0, 0.0).unwrap();
        assert_eq!(r.sum(), 0.0);
    }

    #[test]
    fn greenhalgh_covariance_c_entry() {
        // c = lambda(N) s1 s2 / N + (mu+gamma) s2 = 5 + 3 = 8
        let v = covariance_matrix(&greenhalgh(), 0.0, 50.0, 50.0).unwrap();
        assert_abs_diff_eq!(v.c, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn greenhalgh_moment_identities() {
        // a + 2b + c = 2 mu N and b + c = mu s2 power the reduced system.
        let tbl = greenhalgh();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..100 {
            let s1: f64 = rng.gen_range(0.0..200.0);
            let s2: f64 = rng.gen_range(0.0..200.0);
            let v = covariance_matrix(&tbl, 0.0, s1, s2).unwrap();
            assert_abs_diff_eq!(v.a + 2.0 * v.b + v.c, 2.0 * 0.01 * (s1 + s2), epsilon = 1e-10);
            assert_abs_diff_eq!(v.b + v.c, 0.01 * s2, epsilon = 1e-10);
        }
    }

    #[test]
    fn jump_step_zero_rates_is_identity() {
        let t = zero_table();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(jump_step(&t, 0.0, (5.0, 7.0), 0.1, &mut rng).unwrap(), (5.0, 7.0));
        }
    }

    #[test]
    fn jump_step_rejects_large_dt() {
        let mut t = zero_table();
        t.b1 = const_rate(100.0);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert!(matches!(
            jump_step(&t, 0.0, (0.0, 0.0), 0.1, &mut rng),
            Err(SimError::StepSize(_))
        ));
    }

    #[test]
    fn jump_step_one_step_moments() {
        // One-step mean and second moment vs drift*dt and covariance*dt,
        // 10^6 replicates, 3 standard errors.
        let tbl = greenhalgh();
        let (s1, s2) = (50.0, 50.0);
        let dt = 0.01;
        let n = 1_000_000usize;
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let (mut sum1, mut sum2) = (0.0, 0.0);
        let (mut sum11, mut sum22, mut sum12) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let (a, b) = jump_step(&tbl, 0.0, (s1, s2), dt, &mut rng).unwrap();
            let (d1, d2) = (a - s1, b - s2);
            sum1 += d1;
            sum2 += d2;
            sum11 += d1 * d1;
            sum22 += d2 * d2;
            sum12 += d1 * d2;
        }
        let nf = n as f64;
        let (mu1, mu2) = drift_vector(&tbl, 0.0, s1, s2).unwrap();
        let v = covariance_matrix(&tbl, 0.0, s1, s2).unwrap();
        // increments are in {-1,0,1}; var <= E d^2 = v * dt
        let se1 = (v.a * dt / nf).sqrt();
        let se2 = (v.c * dt / nf).sqrt();
        assert!((sum1 / nf - mu1 * dt).abs() <= 3.0 * se1);
        assert!((sum2 / nf - mu2 * dt).abs() <= 3.0 * se2);
        // second-moment SEs: Var(d^2) <= E d^4 = E d^2 for unit jumps
        let se11 = (v.a * dt / nf).sqrt();
        let se22 = (v.c * dt / nf).sqrt();
        let se12 = ((v.a * dt).min(v.c * dt) / nf).sqrt();
        assert!((sum11 / nf - v.a * dt).abs() <= 3.0 * se11);
        assert!((sum22 / nf - v.c * dt).abs() <= 3.0 * se22);
        assert!((sum12 / nf - v.b * dt).abs() <= 3.0 * se12);
    }

    #[test]
    fn chain_zero_horizon() {
        let tbl = greenhalgh();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let path = simulate_jump_chain(&tbl, (10.0, 5.0), 0.01, 0.0, &mut rng).unwrap();
        assert_eq!(path, vec![(10.0, 5.0)]);
    }

    #[test]
    fn chain_zero_rates_constant() {
        let t = zero_table();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let path = simulate_jump_chain(&t, (3.0, 4.0), 0.1, 1.0, &mut rng).unwrap();
        assert_eq!(path.len(), 11);
        assert!(path.iter().all(|&s| s == (3.0, 4.0)));
    }

    #[test]
    fn chain_population_mean_conserved() {
        // b1 = mu N balances d1 + d2, so E[s1 + s2] is constant.
        let tbl = greenhalgh();
        let n_paths = 20_000usize;
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut sum_n = 0.0;
        let mut sum_n2 = 0.0;
        for _ in 0..n_paths {
            let path = simulate_jump_chain(&tbl, (50.0, 50.0), 0.01, 1.0, &mut rng).unwrap();
            let (s1, s2) = *path.last().unwrap();
            sum_n += s1 + s2;
            sum_n2 += (s1 + s2) * (s1 + s2);
        }
        let mean = sum_n / n_paths as f64;
        let var = sum_n2 / n_paths as f64 - mean * mean;
        let se = (var / n_paths as f64).sqrt();
        assert!((mean - 100.0).abs() <= 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn chain_rejects_nondividing_dt() {
        let tbl = greenhalgh();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert!(simulate_jump_chain(&tbl, (1.0, 1.0), 0.3, 1.0, &mut rng).is_err());
    }
}
