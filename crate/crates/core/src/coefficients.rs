//! Coefficient family for the one-dimensional equation driven by a random
//! environment `y`: a quadratic-in-x diffusion `g = sqrt(scale * (-x^2 +
//! alpha(t,y) x + beta(t,y)))`, its truncation `bar_g` (zero outside the root
//! interval), and the clamped drift `bar_a`.
//!
//! Growth, Lipschitz and Hoelder constants are declared by the model author
//! and audited empirically by [`validate_assumptions`]; no symbolic
//! verification is attempted.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Result, SimError};
use crate::transition::{ContactRate, GreenhalghParams};

/// A coefficient of `(t, y)`.
pub type CoefFn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// A coefficient of `(t, y, x)`.
pub type CoefFn3 = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Diffusion specification `g^2 = scale * (-x^2 + alpha x + beta)` with
/// declared growth constant `M` and Hoelder constant `H`.
///
/// `scale` is a nonnegative leading factor; `scale = 1` recovers the
/// normalized quadratic form. Wherever `scale = 0` the diffusion vanishes.
#[derive(Clone)]
pub struct QuadraticDiffusionSpec {
    pub alpha: CoefFn2,
    pub beta: CoefFn2,
    pub scale: CoefFn2,
    /// Declared growth constant: |alpha|, |beta| <= M (1 + |y|).
    pub growth_m: f64,
    /// Declared Hoelder-1/2 constant of `bar_g` in (y, x).
    pub holder_h: f64,
}

/// Drift specification with declared growth constant `M`
/// (|a| <= M (1 + |y| + |x|)) and Lipschitz constant `L`.
#[derive(Clone)]
pub struct DriftSpec {
    pub a: CoefFn3,
    pub growth_m: f64,
    pub lipschitz_l: f64,
}

impl QuadraticDiffusionSpec {
    /// Constant-coefficient spec with unit scale; handy for tests and the
    /// `custom` CLI model.
    pub fn constant(alpha: f64, beta: f64, scale: f64, growth_m: f64, holder_h: f64) -> Self {
        QuadraticDiffusionSpec {
            alpha: Arc::new(move |_, _| alpha),
            beta: Arc::new(move |_, _| beta),
            scale: Arc::new(move |_, _| scale),
            growth_m,
            holder_h,
        }
    }

    /// Roots `r1 <= r2` of `-x^2 + alpha x + beta = 0` at `(t, y)`.
    ///
    /// Errors when the discriminant `alpha^2 + 4 beta` is negative.
    pub fn roots(&self, t: f64, y: f64) -> Result<(f64, f64)> {
        let alpha = (self.alpha)(t, y);
        let beta = (self.beta)(t, y);
        let disc = alpha * alpha + 4.0 * beta;
        if disc < 0.0 {
            return Err(SimError::RootCondition { t, y, discriminant: disc });
        }
        let s = disc.sqrt();
        Ok(((alpha - s) / 2.0, (alpha + s) / 2.0))
    }

    /// Truncated diffusion coefficient: `sqrt(scale * (-x^2 + alpha x + beta))`
    /// on `[r1, r2]`, zero outside; continuous, vanishing at both roots.
    pub fn bar_g(&self, t: f64, y: f64, x: f64) -> Result<f64> {
        let (r1, r2) = self.roots(t, y)?;
        if x < r1 || x > r2 {
            return Ok(0.0);
        }
        let scale = (self.scale)(t, y);
        // Factored form of -x^2 + alpha x + beta: exactly zero at the
        // computed roots and nonnegative on [r1, r2] by construction.
        let q = (x - r1) * (r2 - x);
        Ok((scale * q.max(0.0)).max(0.0).sqrt())
    }

    /// Analytic maximum of `bar_g(t, y, .)`, attained at `x = alpha / 2`.
    pub fn peak(&self, t: f64, y: f64) -> Result<f64> {
        let alpha = (self.alpha)(t, y);
        let beta = (self.beta)(t, y);
        let disc = alpha * alpha / 4.0 + beta;
        if disc < 0.0 {
            return Err(SimError::RootCondition { t, y, discriminant: 4.0 * disc });
        }
        let scale = (self.scale)(t, y);
        Ok((scale * disc).max(0.0).sqrt())
    }
}

impl DriftSpec {
    pub fn constant(value: f64, growth_m: f64, lipschitz_l: f64) -> Self {
        DriftSpec {
            a: Arc::new(move |_, _, _| value),
            growth_m,
            lipschitz_l,
        }
    }

    pub fn zero() -> Self {
        DriftSpec::constant(0.0, 1e-12, 1e-12)
    }

    /// Clamped drift: `a(t, y, clamp(x, r1, r2))`, constant in `x` on each
    /// side of the root interval.
    pub fn bar_a(&self, spec: &QuadraticDiffusionSpec, t: f64, y: f64, x: f64) -> Result<f64> {
        let (r1, r2) = spec.roots(t, y)?;
        Ok((self.a)(t, y, x.clamp(r1, r2)))
    }
}

/// The SIS instantiation: drift `a(t,y,x) = lambda(y) x (y-x) / y - (mu+gamma) x`
/// and diffusion with `scale = lambda(y)/y`, `alpha = y (lambda(y)+mu+gamma)/lambda(y)`,
/// `beta = 0`, so the root interval is `[0, y (1 + (mu+gamma)/lambda(y))]`.
///
/// Both coefficients are defined as 0 for `y <= 0` (and where `lambda(y) = 0`).
pub fn greenhalgh_coeffs(p: &GreenhalghParams) -> Result<(DriftSpec, QuadraticDiffusionSpec)> {
    p.validate()?;
    let mu = p.mu;
    let gamma = p.gamma;
    let lam = p.lambda;
    let lam_at = move |y: f64| if y > 0.0 { lam.eval(y) } else { 0.0 };

    let drift = DriftSpec {
        a: Arc::new(move |_, y, x| {
            if y <= 0.0 {
                0.0
            } else {
                lam.eval(y) * x * (y - x) / y - (mu + gamma) * x
            }
        }),
        // Declared constants for the built-in model; audited, not proved.
        growth_m: 2.0 * (1.0 + (mu + gamma) / positive_floor(&lam)),
        lipschitz_l: 4.0 * (1.0 + mu + gamma),
    };
    let diffusion = QuadraticDiffusionSpec {
        alpha: Arc::new(move |_, y| {
            let l = lam_at(y);
            if l > 0.0 {
                y * (l + mu + gamma) / l
            } else {
                0.0
            }
        }),
        beta: Arc::new(|_, _| 0.0),
        scale: Arc::new(move |_, y| {
            let l = lam_at(y);
            if l > 0.0 {
                l / y
            } else {
                0.0
            }
        }),
        growth_m: 2.0 * (1.0 + (mu + gamma) / positive_floor(&lam)),
        holder_h: 10.0,
    };
    Ok((drift, diffusion))
}

// Smallest contact-rate value used when declaring growth constants; the
// affine/saturating families are bounded below by their value at n = 1.
fn positive_floor(lam: &ContactRate) -> f64 {
    let v = lam.eval(1.0).max(lam.eval(0.0));
    if v > 0.0 {
        v
    } else {
        1.0
    }
}

/// Rectangular sampling domain for the empirical assumption audit.
#[derive(Debug, Clone, Copy)]
pub struct DomainBox {
    pub y_min: f64,
    pub y_max: f64,
    pub x_min: f64,
    pub x_max: f64,
}

/// Empirical estimates of the assumption constants over a sampled domain.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    /// max(|alpha|, |beta|) / (1 + |y|) over samples.
    pub m_hat_diffusion: f64,
    /// |a| / (1 + |y| + |x|) over samples.
    pub m_hat_drift: f64,
    /// Hoelder-1/2 quotient of `bar_g` over sampled pairs.
    pub h_hat: f64,
    /// Lipschitz quotient of `bar_a` over sampled pairs.
    pub l_hat: f64,
    /// Declared constants that the estimates exceed.
    pub flags: Vec<String>,
}

impl AssumptionReport {
    pub fn ok(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Samples `n` points (and point pairs) in `domain` and estimates the
/// growth, Hoelder and Lipschitz constants; declared constants that are
/// exceeded are flagged in the report, never thrown.
pub fn validate_assumptions<R: Rng + ?Sized>(
    drift: &DriftSpec,
    spec: &QuadraticDiffusionSpec,
    domain: &DomainBox,
    n: usize,
    rng: &mut R,
) -> Result<AssumptionReport> {
    if n < 2 {
        return Err(SimError::Domain(format!("need n >= 2 samples, got {n}")));
    }
    let mut m_diff: f64 = 0.0;
    let mut m_drift: f64 = 0.0;
    let mut h_hat: f64 = 0.0;
    let mut l_hat: f64 = 0.0;
    let sample = |rng: &mut R| -> (f64, f64) {
        (
            rng.gen_range(domain.y_min..=domain.y_max),
            rng.gen_range(domain.x_min..=domain.x_max),
        )
    };
    for _ in 0..n {
        let (y1, x1) = sample(rng);
        let (y2, x2) = sample(rng);
        let alpha = (spec.alpha)(0.0, y1);
        let beta = (spec.beta)(0.0, y1);
        m_diff = m_diff.max(alpha.abs().max(beta.abs()) / (1.0 + y1.abs()));
        let a1 = drift.bar_a(spec, 0.0, y1, x1)?;
        m_drift = m_drift.max(a1.abs() / (1.0 + y1.abs() + x1.abs()));
        let g1 = spec.bar_g(0.0, y1, x1)?;
        let g2 = spec.bar_g(0.0, y2, x2)?;
        let a2 = drift.bar_a(spec, 0.0, y2, x2)?;
        let holder_den = (y1 - y2).abs().sqrt() + (x1 - x2).abs().sqrt();
        let lip_den = (y1 - y2).abs() + (x1 - x2).abs();
        if holder_den > 1e-12 {
            h_hat = h_hat.max((g1 - g2).abs() / holder_den);
        }
        if lip_den > 1e-12 {
            l_hat = l_hat.max((a1 - a2).abs() / lip_den);
        }
    }
    let mut flags = Vec::new();
    if m_diff > spec.growth_m {
        flags.push(format!(
            "diffusion growth estimate {m_diff:.6} exceeds declared M = {}",
            spec.growth_m
        ));
    }
    if m_drift > drift.growth_m {
        flags.push(format!(
            "drift growth estimate {m_drift:.6} exceeds declared M = {}",
            drift.growth_m
        ));
    }
    if h_hat > spec.holder_h {
        flags.push(format!(
            "Hoelder estimate {h_hat:.6} exceeds declared H = {}",
            spec.holder_h
        ));
    }
    if l_hat > drift.lipschitz_l {
        flags.push(format!(
            "Lipschitz estimate {l_hat:.6} exceeds declared L = {}",
            drift.lipschitz_l
        ));
    }
    Ok(AssumptionReport {
        m_hat_diffusion: m_diff,
        m_hat_drift: m_drift,
        h_hat,
        l_hat,
        flags,
    })
}
