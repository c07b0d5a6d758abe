//! Scenario configuration in a flat `key = value` format, one entry per
//! line, `#` comments. Chosen over nested formats because it is trivially
//! diffable and needs no parser dependency.
//!
//! Parsing is total: every violation (unknown key, duplicate key, type
//! mismatch, range violation) is collected and reported together, not just
//! the first one.

use std::collections::BTreeMap;
use std::fmt;

use crate::transition::{ContactRate, GreenhalghParams};

/// All violations found in a config file.
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Which model family the scenario simulates.
#[derive(Debug, Clone)]
pub enum ModelConfig {
    Greenhalgh(GreenhalghParams),
    /// Constant-coefficient quadratic diffusion `g^2 = scale(-x^2+alpha x+beta)`
    /// with constant drift, driven by a square-root `Y` with rate `y_mu`.
    Custom {
        alpha: f64,
        beta: f64,
        scale: f64,
        drift: f64,
        growth_m: f64,
        holder_h: f64,
        lipschitz_l: f64,
        y_mu: f64,
    },
}

/// Lattice solver selected by the `fokker-planck` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Master,
    ForwardEquation,
}

/// A fully validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub model: ModelConfig,
    /// Horizon `T`.
    pub t: f64,
    /// Dyadic level of the simulation grid.
    pub level: u32,
    /// Levels used by `converge` (strictly increasing).
    pub levels: Vec<u32>,
    pub paths: usize,
    pub seed: u64,
    /// Driver correlation, `[-1, 1]`.
    pub rho: f64,
    /// Absorb the square-root process at 0.
    pub absorb: bool,
    pub x0: f64,
    pub y0: f64,
    /// Fixed step of the jump chain / master equation.
    pub dt: f64,
    pub s1_0: f64,
    pub s2_0: f64,
    pub grid_kind: GridKind,
    pub n1: usize,
    pub n2: usize,
    pub h1: f64,
    pub h2: f64,
    pub x1_min: f64,
    pub x2_min: f64,
    /// Step of the forward-equation solver.
    pub grid_dt: f64,
    /// Initial smoothing of the forward-equation start, in cells
    /// (0 = point mass; the mixed-derivative stencil needs smooth data).
    pub sigma0: f64,
    /// Pass threshold for `compare`.
    pub threshold: f64,
    pub out_dir: String,
    /// Raw config text, echoed into the run manifest.
    pub raw: String,
}

struct Raw {
    // key -> (value, line number), first occurrence
    map: BTreeMap<String, (String, usize)>,
    consumed: Vec<String>,
    violations: Vec<String>,
}

impl Raw {
    fn parse(text: &str) -> Raw {
        let mut map: BTreeMap<String, (String, usize)> = BTreeMap::new();
        let mut violations = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let stripped = match line.find('#') {
                Some(p) => &line[..p],
                None => line,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let Some(eq) = stripped.find('=') else {
                violations.push(format!("line {lineno}: expected 'key = value', got '{stripped}'"));
                continue;
            };
            let key = stripped[..eq].trim().to_string();
            let value = stripped[eq + 1..].trim().to_string();
            if key.is_empty() || value.is_empty() {
                violations.push(format!("line {lineno}: empty key or value"));
                continue;
            }
            if let Some((_, first)) = map.get(&key) {
                violations.push(format!(
                    "duplicate key '{key}' at lines {first} and {lineno}"
                ));
            } else {
                map.insert(key, (value, lineno));
            }
        }
        Raw { map, consumed: Vec::new(), violations }
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.consumed.push(key.to_string());
        self.map.get(key).cloned()
    }

    fn str_or(&mut self, key: &str, default: &str) -> String {
        match self.take(key) {
            Some((v, _)) => v,
            None => default.to_string(),
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> f64 {
        match self.take(key) {
            Some((v, line)) => match v.parse::<f64>() {
                Ok(x) => x,
                Err(_) => {
                    self.violations
                        .push(format!("line {line}: '{key}' must be a number, got '{v}'"));
                    default
                }
            },
            None => default,
        }
    }

    fn f64_req(&mut self, key: &str) -> f64 {
        match self.take(key) {
            Some((v, line)) => match v.parse::<f64>() {
                Ok(x) => x,
                Err(_) => {
                    self.violations
                        .push(format!("line {line}: '{key}' must be a number, got '{v}'"));
                    f64::NAN
                }
            },
            None => {
                self.violations.push(format!("missing required key '{key}'"));
                f64::NAN
            }
        }
    }

    fn u64_or(&mut self, key: &str, default: u64) -> u64 {
        match self.take(key) {
            Some((v, line)) => match v.parse::<u64>() {
                Ok(x) => x,
                Err(_) => {
                    self.violations.push(format!(
                        "line {line}: '{key}' must be a nonnegative integer, got '{v}'"
                    ));
                    default
                }
            },
            None => default,
        }
    }

    fn usize_or(&mut self, key: &str, default: usize) -> usize {
        self.u64_or(key, default as u64) as usize
    }

    fn bool_or(&mut self, key: &str, default: bool) -> bool {
        match self.take(key) {
            Some((v, line)) => match v.as_str() {
                "true" => true,
                "false" => false,
                _ => {
                    self.violations.push(format!(
                        "line {line}: '{key}' must be 'true' or 'false', got '{v}'"
                    ));
                    default
                }
            },
            None => default,
        }
    }

    fn check(&mut self, ok: bool, message: String) {
        if !ok {
            self.violations.push(message);
        }
    }

    fn finish(mut self) -> Result<(), ConfigError> {
        for (key, (_, line)) in &self.map {
            if !self.consumed.iter().any(|c| c == key) {
                self.violations
                    .push(format!("unknown key '{key}' (line {line})"));
            }
        }
        if self.violations.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { violations: self.violations })
        }
    }
}

/// Parses and validates a scenario; on failure returns every violation.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut raw = Raw::parse(text);

    let kind = raw.str_or("model.kind", "");
    let model = match kind.as_str() {
        "greenhalgh" => {
            let mu = raw.f64_req("model.mu");
            let gamma = raw.f64_req("model.gamma");
            raw.check(!(mu <= 0.0), format!("'model.mu' must be > 0, got {mu}"));
            raw.check(!(gamma < 0.0), format!("'model.gamma' must be >= 0, got {gamma}"));
            let lkind = raw.str_or("model.lambda.kind", "constant");
            let l0 = raw.f64_req("model.lambda.l0");
            raw.check(!(l0 < 0.0), format!("'model.lambda.l0' must be >= 0, got {l0}"));
            let lambda = match lkind.as_str() {
                "constant" => ContactRate::Constant { l0 },
                "affine" => {
                    let slope = raw.f64_or("model.lambda.slope", 0.0);
                    raw.check(
                        !(slope < 0.0),
                        format!("'model.lambda.slope' must be >= 0, got {slope}"),
                    );
                    ContactRate::Affine { l0, slope }
                }
                "saturating" => {
                    let half = raw.f64_or("model.lambda.half", 1.0);
                    raw.check(
                        !(half <= 0.0),
                        format!("'model.lambda.half' must be > 0, got {half}"),
                    );
                    ContactRate::Saturating { l0, half }
                }
                other => {
                    raw.violations.push(format!(
                        "'model.lambda.kind' must be constant | affine | saturating, got '{other}'"
                    ));
                    ContactRate::Constant { l0: l0.max(0.0) }
                }
            };
            ModelConfig::Greenhalgh(GreenhalghParams { mu: mu.max(f64::MIN_POSITIVE), gamma: gamma.max(0.0), lambda })
        }
        "custom" => {
            let alpha = raw.f64_req("model.alpha");
            let beta = raw.f64_req("model.beta");
            let scale = raw.f64_or("model.scale", 1.0);
            let drift = raw.f64_or("model.drift", 0.0);
            let growth_m = raw.f64_or("model.growth_m", 1.0);
            let holder_h = raw.f64_or("model.holder_h", 1.0);
            let lipschitz_l = raw.f64_or("model.lipschitz_l", 1.0);
            let y_mu = raw.f64_or("model.y_mu", 1.0);
            raw.check(!(scale < 0.0), format!("'model.scale' must be >= 0, got {scale}"));
            raw.check(
                alpha.is_nan() || beta.is_nan() || alpha * alpha + 4.0 * beta >= 0.0,
                format!("'model.alpha'/'model.beta' give negative discriminant {}", alpha * alpha + 4.0 * beta),
            );
            raw.check(!(growth_m <= 0.0), format!("'model.growth_m' must be > 0, got {growth_m}"));
            raw.check(!(holder_h <= 0.0), format!("'model.holder_h' must be > 0, got {holder_h}"));
            raw.check(
                !(lipschitz_l <= 0.0),
                format!("'model.lipschitz_l' must be > 0, got {lipschitz_l}"),
            );
            raw.check(!(y_mu <= 0.0), format!("'model.y_mu' must be > 0, got {y_mu}"));
            ModelConfig::Custom { alpha, beta, scale, drift, growth_m, holder_h, lipschitz_l, y_mu }
        }
        "" => {
            raw.violations.push("missing required key 'model.kind'".into());
            ModelConfig::Custom {
                alpha: 0.0,
                beta: 0.0,
                scale: 0.0,
                drift: 0.0,
                growth_m: 1.0,
                holder_h: 1.0,
                lipschitz_l: 1.0,
                y_mu: 1.0,
            }
        }
        other => {
            raw.violations
                .push(format!("'model.kind' must be greenhalgh | custom, got '{other}'"));
            ModelConfig::Custom {
                alpha: 0.0,
                beta: 0.0,
                scale: 0.0,
                drift: 0.0,
                growth_m: 1.0,
                holder_h: 1.0,
                lipschitz_l: 1.0,
                y_mu: 1.0,
            }
        }
    };

    let t = raw.f64_or("sim.t", 1.0);
    raw.check(!(t <= 0.0), format!("'sim.t' must be > 0, got {t}"));
    let level = raw.u64_or("sim.level", 8) as u32;
    raw.check(level <= 40, format!("'sim.level' must be <= 40, got {level}"));
    let levels: Vec<u32> = match raw.take("sim.levels") {
        Some((v, line)) => {
            let mut out = Vec::new();
            let mut ok = true;
            for piece in v.split(',') {
                match piece.trim().parse::<u32>() {
                    Ok(l) if l <= 40 => out.push(l),
                    _ => ok = false,
                }
            }
            if !ok || out.len() < 2 || out.windows(2).any(|w| w[1] <= w[0]) {
                raw.violations.push(format!(
                    "line {line}: 'sim.levels' must be a strictly increasing comma list of levels <= 40, got '{v}'"
                ));
            }
            out
        }
        None => vec![level.min(38), level.min(38) + 1, level.min(38) + 2],
    };
    let paths = raw.usize_or("sim.paths", 1000);
    raw.check(paths >= 1, format!("'sim.paths' must be >= 1, got {paths}"));
    let seed = raw.u64_or("sim.seed", 0);
    let rho = raw.f64_or("sim.rho", 0.0);
    raw.check(
        (-1.0..=1.0).contains(&rho),
        format!("'sim.rho' must lie in [-1, 1], got {rho}"),
    );
    let absorb = raw.bool_or("sim.absorb", true);
    let x0 = raw.f64_or("sim.x0", 30.0);
    let y0 = raw.f64_or("sim.y0", 100.0);
    raw.check(!(y0 < 0.0), format!("'sim.y0' must be >= 0, got {y0}"));
    let dt = raw.f64_or("sim.dt", 1e-3);
    raw.check(!(dt <= 0.0), format!("'sim.dt' must be > 0, got {dt}"));
    let s1_0 = raw.f64_or("sim.s1_0", 50.0);
    let s2_0 = raw.f64_or("sim.s2_0", 50.0);
    raw.check(!(s1_0 < 0.0), format!("'sim.s1_0' must be >= 0, got {s1_0}"));
    raw.check(!(s2_0 < 0.0), format!("'sim.s2_0' must be >= 0, got {s2_0}"));

    let grid_kind = match raw.str_or("grid.kind", "master").as_str() {
        "master" => GridKind::Master,
        "fp" => GridKind::ForwardEquation,
        other => {
            raw.violations
                .push(format!("'grid.kind' must be master | fp, got '{other}'"));
            GridKind::Master
        }
    };
    let n1 = raw.usize_or("grid.n1", 128);
    let n2 = raw.usize_or("grid.n2", 128);
    raw.check(n1 >= 2 && n2 >= 2, format!("'grid.n1'/'grid.n2' must be >= 2, got {n1}/{n2}"));
    let h1 = raw.f64_or("grid.h1", 1.0);
    let h2 = raw.f64_or("grid.h2", 1.0);
    raw.check(!(h1 <= 0.0) && !(h2 <= 0.0), format!("'grid.h1'/'grid.h2' must be > 0, got {h1}/{h2}"));
    let x1_min = raw.f64_or("grid.x1_min", 0.0);
    let x2_min = raw.f64_or("grid.x2_min", 0.0);
    raw.check(!(x1_min < 0.0) && !(x2_min < 0.0), format!("'grid.x1_min'/'grid.x2_min' must be >= 0, got {x1_min}/{x2_min}"));
    let grid_dt = raw.f64_or("grid.dt", dt.min(1e-3));
    raw.check(!(grid_dt <= 0.0), format!("'grid.dt' must be > 0, got {grid_dt}"));
    let sigma0 = raw.f64_or("grid.sigma0", 2.0);
    raw.check(!(sigma0 < 0.0), format!("'grid.sigma0' must be >= 0, got {sigma0}"));
    let threshold = raw.f64_or("compare.threshold", 0.05);
    raw.check(!(threshold <= 0.0), format!("'compare.threshold' must be > 0, got {threshold}"));
    let out_dir = raw.str_or("output.dir", "out");

    raw.finish()?;
    Ok(ScenarioConfig {
        model,
        t,
        level,
        levels,
        paths,
        seed,
        rho,
        absorb,
        x0,
        y0,
        dt,
        s1_0,
        s2_0,
        grid_kind,
        n1,
        n2,
        h1,
        h2,
        x1_min,
        x2_min,
        grid_dt,
        sigma0,
        threshold,
        out_dir,
        raw: text.to_string(),
    })
}
