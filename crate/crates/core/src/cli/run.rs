//! Subcommand execution: builds models from a [`ScenarioConfig`], runs the
//! library, and serializes results as CSV.
//!
//! Conventions: data goes to files in the output directory, diagnostics to
//! the error stream; the only numeric result on standard output is the
//! `compare` distance line. Every run writes a `manifest.txt` (version,
//! effective seed, command, config echo) from which it can be reproduced
//! byte-for-byte. All numbers are serialized with 17 significant digits so
//! they round-trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::cli::config::{parse_config, ConfigError, GridKind, ModelConfig, ScenarioConfig};
use crate::coefficients::{
    greenhalgh_coeffs, validate_assumptions, DomainBox, DriftSpec, QuadraticDiffusionSpec,
};
use crate::diagnostics::{cauchy_errors, TriangularModel};
use crate::drivers::{BrownianGrid, Partition};
use crate::engine::{ensemble, path_rng, triangular_on_grid, YProcess};
use crate::error::SimError;
use crate::fokker_planck::{compare_density, fp_step, master_step, DensityField};
use crate::transition::{
    covariance_matrix, drift_vector, greenhalgh_table, simulate_jump_chain, CovarianceEntries,
    GreenhalghParams,
};

/// The sis-sde subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Jump,
    Converge,
    Validate,
    FokkerPlanck,
    Compare,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Jump => "jump",
            Command::Converge => "converge",
            Command::Validate => "validate",
            Command::FokkerPlanck => "fokker-planck",
            Command::Compare => "compare",
        }
    }
}

/// Exit codes: 0 ok, 2 config error, 3 assumption violation, 4 numerical
/// failure.
#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    ConfigIo(String),
    Assumption(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::ConfigIo(_) => 2,
            CliError::Assumption(_) => 3,
            CliError::Failure(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::ConfigIo(m) => write!(f, "config error: {m}"),
            CliError::Assumption(m) => write!(f, "assumption violation: {m}"),
            CliError::Failure(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> CliError {
        match e {
            SimError::Assumption(m) => CliError::Assumption(m),
            other => CliError::Failure(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Failure(format!("i/o error: {e}"))
    }
}

/// Full-precision decimal serialization (17 significant digits).
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Reads, parses and runs; prints diagnostics to stderr and returns the
/// process exit code.
pub fn run(
    cmd: Command,
    config_path: &Path,
    seed_override: Option<u64>,
    out_override: Option<&Path>,
) -> i32 {
    match try_run(cmd, config_path, seed_override, out_override) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn try_run(
    cmd: Command,
    config_path: &Path,
    seed_override: Option<u64>,
    out_override: Option<&Path>,
) -> Result<(), CliError> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| CliError::ConfigIo(format!("cannot read {}: {e}", config_path.display())))?;
    let mut cfg = parse_config(&text).map_err(CliError::Config)?;
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    let out_dir = out_override
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| cfg.out_dir.clone().into());
    fs::create_dir_all(&out_dir)?;
    write_manifest(&cfg, cmd, &out_dir)?;
    match cmd {
        Command::Simulate => run_simulate(&cfg, &out_dir),
        Command::Jump => run_jump(&cfg, &out_dir),
        Command::Converge => run_converge(&cfg, &out_dir),
        Command::Validate => run_validate(&cfg, &out_dir),
        Command::FokkerPlanck => run_fokker_planck(&cfg, &out_dir),
        Command::Compare => run_compare(&cfg, &out_dir),
    }
}

fn write_manifest(cfg: &ScenarioConfig, cmd: Command, out_dir: &Path) -> Result<(), CliError> {
    let mut m = String::new();
    let _ = writeln!(m, "sis-sde {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "command = {}", cmd.name());
    let _ = writeln!(m, "seed = {}", cfg.seed);
    let _ = writeln!(m, "--- config ---");
    m.push_str(&cfg.raw);
    if !cfg.raw.ends_with('\n') {
        m.push('\n');
    }
    fs::write(out_dir.join("manifest.txt"), m)?;
    Ok(())
}

fn build_model(cfg: &ScenarioConfig) -> Result<TriangularModel, SimError> {
    let (drift, diffusion, y_process) = match &cfg.model {
        ModelConfig::Greenhalgh(p) => {
            let (drift, diffusion) = greenhalgh_coeffs(p)?;
            (
                drift,
                diffusion,
                YProcess::SquareRoot { mu: p.mu, absorb: cfg.absorb },
            )
        }
        ModelConfig::Custom {
            alpha,
            beta,
            scale,
            drift,
            growth_m,
            holder_h,
            lipschitz_l,
            y_mu,
        } => (
            DriftSpec::constant(*drift, *growth_m, *lipschitz_l),
            QuadraticDiffusionSpec::constant(*alpha, *beta, *scale, *growth_m, *holder_h),
            YProcess::SquareRoot { mu: *y_mu, absorb: cfg.absorb },
        ),
    };
    Ok(TriangularModel {
        drift,
        diffusion,
        y_process,
        x0: cfg.x0,
        y0: cfg.y0,
        rho: cfg.rho,
        horizon: cfg.t,
    })
}

fn greenhalgh_params(cfg: &ScenarioConfig) -> Result<GreenhalghParams, CliError> {
    match &cfg.model {
        ModelConfig::Greenhalgh(p) => Ok(*p),
        ModelConfig::Custom { .. } => Err(CliError::Config(ConfigError {
            violations: vec!["this subcommand requires model.kind = greenhalgh".into()],
        })),
    }
}

fn write_moments(
    out_dir: &Path,
    stats: &crate::engine::EnsembleStats,
) -> Result<(), CliError> {
    let mut csv = String::from("t,mean_x,var_x,mean_y,var_y,se_mean_x,se_mean_y\n");
    for i in 0..stats.times.len() {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            num(stats.times[i]),
            num(stats.mean_x[i]),
            num(stats.var_x[i]),
            num(stats.mean_y[i]),
            num(stats.var_y[i]),
            num(stats.se_mean_x(i)),
            num(stats.se_mean_y(i)),
        );
    }
    fs::write(out_dir.join("moments.csv"), csv)?;
    Ok(())
}

fn run_simulate(cfg: &ScenarioConfig, out_dir: &Path) -> Result<(), CliError> {
    let model = build_model(cfg)?;
    let part = Partition::dyadic(cfg.t, cfg.level)?;
    let times: Vec<f64> = part.points().collect();

    let mut csv = String::from("path_id,t,x,y\n");
    for p in 0..cfg.paths {
        let mut rng = path_rng(cfg.seed, p as u64);
        let grid = BrownianGrid::sample(part, &mut rng)
            .correlate(cfg.rho)?;
        let path = model.path_on(&grid)?;
        for (i, &t) in times.iter().enumerate() {
            let _ = writeln!(csv, "{p},{},{},{}", num(t), num(path.x[i]), num(path.y[i]));
        }
    }
    fs::write(out_dir.join("trajectories.csv"), csv)?;

    let stats = ensemble(cfg.paths, cfg.seed, times, |_, rng| {
        let grid = BrownianGrid::sample(part, rng).correlate(cfg.rho)?;
        let path = triangular_on_grid(
            &model.drift,
            &model.diffusion,
            &model.y_process,
            model.x0,
            model.y0,
            &grid,
        )?;
        Ok((path.x, path.y))
    })
    ?;
    write_moments(out_dir, &stats)
}

fn run_jump(cfg: &ScenarioConfig, out_dir: &Path) -> Result<(), CliError> {
    let p = greenhalgh_params(cfg)?;
    let table = greenhalgh_table(&p)?;
    let steps = (cfg.t / cfg.dt).round() as usize;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * cfg.dt).collect();

    let mut csv = String::from("path_id,t,x,y\n");
    for pid in 0..cfg.paths {
        let mut rng = path_rng(cfg.seed, pid as u64);
        let path = simulate_jump_chain(&table, (cfg.s1_0, cfg.s2_0), cfg.dt, cfg.t, &mut rng)?;
        for (k, &(s1, s2)) in path.iter().enumerate() {
            let _ = writeln!(csv, "{pid},{},{},{}", num(times[k]), num(s1), num(s2));
        }
    }
    fs::write(out_dir.join("trajectories.csv"), csv)?;

    let stats = ensemble(cfg.paths, cfg.seed, times, |_, rng| {
        let path = simulate_jump_chain(&table, (cfg.s1_0, cfg.s2_0), cfg.dt, cfg.t, rng)?;
        let (xs, ys) = path.iter().cloned().unzip();
        Ok((xs, ys))
    })
    ?;
    write_moments(out_dir, &stats)
}

fn run_converge(cfg: &ScenarioConfig, out_dir: &Path) -> Result<(), CliError> {
    let model = build_model(cfg)?;
    let report =
        cauchy_errors(&model, &cfg.levels, cfg.paths, cfg.seed)?;

    let mut csv = String::from("level,mesh,l1_error,l1_se,sup_error,sup_se\n");
    for i in 0..report.l1_at_t.len() {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            report.levels[i],
            num(report.meshes[i]),
            num(report.l1_at_t[i]),
            num(report.l1_se[i]),
            num(report.sup_grid[i]),
            num(report.sup_se[i]),
        );
    }
    fs::write(out_dir.join("convergence.csv"), csv)?;

    let mut bounds = String::from("name,value\n");
    for (name, value) in [
        ("g_constant", report.g_constant),
        ("g_bound", report.g_bound),
        ("m1", report.m1),
        ("gamma1", report.gamma1),
        ("gamma2", report.gamma2),
        ("slope_l1", report.slope_l1),
        ("slope_sup", report.slope_sup),
        ("max_mean_abs_x", report.max_mean_abs_x),
        ("max_mean_abs_x_se", report.max_mean_abs_x_se),
    ] {
        let _ = writeln!(bounds, "{name},{}", num(value));
    }
    fs::write(out_dir.join("bounds.csv"), bounds)?;
    Ok(())
}

fn run_validate(cfg: &ScenarioConfig, out_dir: &Path) -> Result<(), CliError> {
    let model = build_model(cfg)?;
    let y_max = 2.0 * cfg.y0.max(1.0);
    let (_, r2) = model
        .diffusion
        .roots(0.0, y_max)?;
    let x_hi = 2.0 * r2.abs().max(cfg.x0.abs()).max(1.0);
    let domain = DomainBox {
        y_min: 0.0,
        y_max,
        x_min: -x_hi,
        x_max: x_hi,
    };
    let mut rng = path_rng(cfg.seed, 0);
    let report = validate_assumptions(&model.drift, &model.diffusion, &domain, 20_000, &mut rng)?;

    let mut txt = String::new();
    let _ = writeln!(txt, "m_hat_diffusion = {}", num(report.m_hat_diffusion));
    let _ = writeln!(txt, "m_hat_drift = {}", num(report.m_hat_drift));
    let _ = writeln!(txt, "h_hat = {}", num(report.h_hat));
    let _ = writeln!(txt, "l_hat = {}", num(report.l_hat));
    let _ = writeln!(txt, "declared_growth_m_drift = {}", num(model.drift.growth_m));
    let _ = writeln!(
        txt,
        "declared_growth_m_diffusion = {}",
        num(model.diffusion.growth_m)
    );
    let _ = writeln!(txt, "declared_holder_h = {}", num(model.diffusion.holder_h));
    let _ = writeln!(txt, "declared_lipschitz_l = {}", num(model.drift.lipschitz_l));
    let _ = writeln!(txt, "status = {}", if report.ok() { "ok" } else { "violated" });
    for flag in &report.flags {
        let _ = writeln!(txt, "flag = {flag}");
    }
    fs::write(out_dir.join("assumptions.txt"), txt)?;
    if report.ok() {
        Ok(())
    } else {
        Err(CliError::Assumption(report.flags.join("; ")))
    }
}

fn check_divides(dt: f64, t: f64) -> Result<usize, CliError> {
    let steps_f = t / dt;
    let steps = steps_f.round() as usize;
    if steps == 0 || (steps as f64 - steps_f).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(CliError::Failure(format!("dt = {dt} does not divide t = {t}")));
    }
    Ok(steps)
}

fn write_density(field: &DensityField, out_dir: &Path) -> Result<(), CliError> {
    let mut csv = String::from("x1,x2,p\n");
    for (x1, x2, p) in field.cells() {
        let _ = writeln!(csv, "{},{},{}", num(x1), num(x2), num(p));
    }
    fs::write(out_dir.join("density.csv"), csv)?;
    Ok(())
}

fn master_density(cfg: &ScenarioConfig) -> Result<DensityField, CliError> {
    let p = greenhalgh_params(cfg)?;
    let table = greenhalgh_table(&p)?;
    let steps = check_divides(cfg.dt, cfg.t)?;
    let i1 = cfg.s1_0.round() as usize;
    let i2 = cfg.s2_0.round() as usize;
    let mut field = DensityField::unit_lattice(cfg.n1, cfg.n2)
        .and_then(|f| f.point_mass(i1, i2))?;
    for k in 0..steps {
        field = master_step(&field, &table, k as f64 * cfg.dt, cfg.dt)?;
    }
    Ok(field)
}

fn run_fokker_planck(cfg: &ScenarioConfig, out_dir: &Path) -> Result<(), CliError> {
    let field = match cfg.grid_kind {
        GridKind::Master => master_density(cfg)?,
        GridKind::ForwardEquation => {
            let p = greenhalgh_params(cfg)?;
            let table = greenhalgh_table(&p)?;
            let steps = check_divides(cfg.grid_dt, cfg.t)?;
            let clamp_cell = |v: f64, n: usize| -> usize {
                (v.round().max(0.0) as usize).min(n - 1)
            };
            let i1 = clamp_cell((cfg.s1_0 - cfg.x1_min) / cfg.h1, cfg.n1);
            let i2 = clamp_cell((cfg.s2_0 - cfg.x2_min) / cfg.h2, cfg.n2);
            let empty = DensityField::zeros(cfg.x1_min, cfg.x2_min, cfg.h1, cfg.h2, cfg.n1, cfg.n2)?;
            let mut field = if cfg.sigma0 > 0.0 {
                let (c1, c2) = empty.coords(i1, i2);
                empty.gaussian(c1, c2, cfg.sigma0 * cfg.h1, cfg.sigma0 * cfg.h2)?
            } else {
                empty.point_mass(i1, i2)?
            };
            // lattice coordinates are nonnegative by config validation, so
            // the rate evaluations below cannot fail
            let drift = |x1: f64, x2: f64| -> (f64, f64) {
                drift_vector(&table, 0.0, x1.max(0.0), x2.max(0.0)).unwrap_or((0.0, 0.0))
            };
            let cov = |x1: f64, x2: f64| -> CovarianceEntries {
                covariance_matrix(&table, 0.0, x1.max(0.0), x2.max(0.0))
                    .unwrap_or(CovarianceEntries { a: 0.0, b: 0.0, c: 0.0 })
            };
            for _ in 0..steps {
                field = fp_step(&field, drift, cov, cfg.grid_dt)?;
            }
            field
        }
    };
    write_density(&field, out_dir)
}

fn run_compare(cfg: &ScenarioConfig, out_dir: &Path) -> Result<(), CliError> {
    let p = greenhalgh_params(cfg)?;
    let table = greenhalgh_table(&p)?;
    let master = master_density(cfg)?;
    write_density(&master, out_dir)?;

    let stats = ensemble(cfg.paths, cfg.seed, vec![cfg.t], |_, rng| {
        let path = simulate_jump_chain(&table, (cfg.s1_0, cfg.s2_0), cfg.dt, cfg.t, rng)?;
        let &(s1, s2) = path.last().unwrap();
        Ok((vec![s1], vec![s2]))
    })
    ?;
    let samples: Vec<(f64, f64)> = stats
        .terminal_x
        .iter()
        .zip(stats.terminal_y.iter())
        .map(|(&a, &b)| (a, b))
        .collect();
    let hist = DensityField::from_samples(&samples, 0.0, 0.0, 1.0, 1.0, cfg.n1, cfg.n2)?;
    let distance = compare_density(&master, &hist)?;
    let pass = distance <= cfg.threshold;
    println!(
        "l1_distance = {} {}",
        num(distance),
        if pass { "PASS" } else { "FAIL" }
    );
    if pass {
        Ok(())
    } else {
        Err(CliError::Failure(format!(
            "compare distance {distance} exceeds threshold {}",
            cfg.threshold
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    const GREENHALGH: &str = "\
model.kind = greenhalgh
model.mu = 0.01
model.gamma = 0.05
model.lambda.l0 = 0.2
sim.level = 5
sim.paths = 8
sim.seed = 7
";

    fn write_cfg(dir: &Path, text: &str) -> std::path::PathBuf {
        let p = dir.join("scenario.cfg");
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn simulate_is_byte_deterministic() {
        let dir = tempdir().unwrap();
        let cfg = write_cfg(dir.path(), GREENHALGH);
        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        assert_eq!(run(Command::Simulate, &cfg, None, Some(&out_a)), 0);
        assert_eq!(run(Command::Simulate, &cfg, None, Some(&out_b)), 0);
        for name in ["trajectories.csv", "moments.csv", "manifest.txt"] {
            let a = fs::read(out_a.join(name)).unwrap();
            let b = fs::read(out_b.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs");
        }
    }

    #[test]
    fn seed_override_changes_output() {
        let dir = tempdir().unwrap();
        let cfg = write_cfg(dir.path(), GREENHALGH);
        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        assert_eq!(run(Command::Simulate, &cfg, Some(1), Some(&out_a)), 0);
        assert_eq!(run(Command::Simulate, &cfg, Some(2), Some(&out_b)), 0);
        let a = fs::read(out_a.join("trajectories.csv")).unwrap();
        let b = fs::read(out_b.join("trajectories.csv")).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn bad_config_exits_two() {
        let dir = tempdir().unwrap();
        let cfg = write_cfg(dir.path(), "model.kind = greenhalgh\nmodel.mu = -1\n");
        assert_eq!(run(Command::Simulate, &cfg, None, Some(dir.path())), 2);
        let missing = dir.path().join("nope.cfg");
        assert_eq!(run(Command::Simulate, &missing, None, Some(dir.path())), 2);
    }

    #[test]
    fn converge_zero_model_all_zero_errors() {
        let dir = tempdir().unwrap();
        let cfg = write_cfg(
            dir.path(),
            "\
model.kind = custom
model.alpha = 1.0
model.beta = 1.0
model.scale = 0.0
model.drift = 0.0
sim.levels = 3,4,5
sim.paths = 4
",
        );
        let out = dir.path().join("out");
        assert_eq!(run(Command::Converge, &cfg, None, Some(&out)), 0);
        let csv = fs::read_to_string(out.join("convergence.csv")).unwrap();
        for line in csv.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[2].parse::<f64>().unwrap(), 0.0);
            assert_eq!(fields[4].parse::<f64>().unwrap(), 0.0);
        }
    }

    #[test]
    fn validate_flags_low_declared_holder_exit_three() {
        let dir = tempdir().unwrap();
        let cfg = write_cfg(
            dir.path(),
            "\
model.kind = custom
model.alpha = 10.0
model.beta = 0.0
model.scale = 1.0
model.drift = 0.0
model.holder_h = 1e-9
",
        );
        let out = dir.path().join("out");
        assert_eq!(run(Command::Validate, &cfg, None, Some(&out)), 3);
        let txt = fs::read_to_string(out.join("assumptions.txt")).unwrap();
        assert!(txt.contains("status = violated"));
        assert!(txt.contains("Hoelder"));
    }

    #[test]
    fn validate_greenhalgh_passes() {
        let dir = tempdir().unwrap();
        let cfg = write_cfg(dir.path(), GREENHALGH);
        let out = dir.path().join("out");
        assert_eq!(run(Command::Validate, &cfg, None, Some(&out)), 0);
        let txt = fs::read_to_string(out.join("assumptions.txt")).unwrap();
        assert!(txt.contains("status = ok"));
    }

    #[test]
    fn jump_requires_greenhalgh() {
        let dir = tempdir().unwrap();
        let cfg = write_cfg(
            dir.path(),
            "model.kind = custom\nmodel.alpha = 1.0\nmodel.beta = 1.0\n",
        );
        assert_eq!(run(Command::Jump, &cfg, None, Some(dir.path())), 2);
    }

    #[test]
    fn fokker_planck_master_writes_density() {
        let dir = tempdir().unwrap();
        let cfg = write_cfg(
            dir.path(),
            &format!("{GREENHALGH}sim.t = 0.1\nsim.dt = 0.05\ngrid.n1 = 80\ngrid.n2 = 80\n"),
        );
        let out = dir.path().join("out");
        assert_eq!(run(Command::FokkerPlanck, &cfg, None, Some(&out)), 0);
        let csv = fs::read_to_string(out.join("density.csv")).unwrap();
        assert!(csv.starts_with("x1,x2,p\n"));
        let total: f64 = csv
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-10, "mass {total}");
    }

    #[test]
    fn fokker_planck_forward_equation_runs() {
        let dir = tempdir().unwrap();
        let cfg = write_cfg(
            dir.path(),
            &format!(
                "{GREENHALGH}sim.t = 0.05\ngrid.kind = fp\ngrid.dt = 0.0125\n\
grid.n1 = 40\ngrid.n2 = 40\ngrid.h1 = 4.0\ngrid.h2 = 4.0\n"
            ),
        );
        let out = dir.path().join("out");
        assert_eq!(run(Command::FokkerPlanck, &cfg, None, Some(&out)), 0);
    }

    #[test]
    fn compare_small_run_passes() {
        let dir = tempdir().unwrap();
        let cfg = write_cfg(
            dir.path(),
            "\
model.kind = greenhalgh
model.mu = 0.01
model.gamma = 0.05
model.lambda.l0 = 0.2
sim.seed = 7
sim.t = 0.2
sim.dt = 0.02
sim.paths = 4000
grid.n1 = 90
grid.n2 = 90
compare.threshold = 0.6
",
        );
        let out = dir.path().join("out");
        assert_eq!(run(Command::Compare, &cfg, None, Some(&out)), 0);
    }
}
