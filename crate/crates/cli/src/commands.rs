//! The four subcommands. Each returns a serializable artifact and whether
//! every check it carries passed.

use serde::Serialize;

use hkgc::error::Result;
use hkgc::gaugefix::{Certificate, SolverConfig};
use hkgc::moduli::{check_omega_c, metric_report, point_to_solution, MetricConfig, MetricReport, ModuliPoint};
use hkgc::nahm::{nahm_residual, polar_path, residual_l2, NahmQuadruple};
use hkgc::sample;
use hkgc::twistor::{verify_transition_against_reextraction, zeta_ring, TwistorReport, OVERLAP_RING};
use hkgc::verify::{run_suite, Check, Suite, VerifyConfig, TWISTOR_TOL};

use crate::config::RunConfig;

pub const SOLVE_GRID: usize = 256;
pub const TWISTOR_GRID: usize = 512;

fn progress(cfg: &RunConfig, msg: impl FnOnce() -> String) {
    if cfg.verbose {
        eprintln!("hkgc: {}", msg());
    }
}

#[derive(Debug, Serialize)]
pub struct SolveArtifact {
    pub group: String,
    #[serde(rename = "N")]
    pub grid: usize,
    pub tol: f64,
    pub point: ModuliPoint,
    pub certificate: Certificate,
    /// L^2 norm of all three Nahm residual components of the output.
    pub nahm_residual: f64,
    pub quadruple: NahmQuadruple,
}

pub fn solve(cfg: &RunConfig) -> Result<(SolveArtifact, bool)> {
    let m = cfg.load_point()?.unwrap_or_else(|| ModuliPoint::identity(&cfg.group));
    let grid = cfg.grid_or(SOLVE_GRID);
    let solver = cfg.solver(SolverConfig::default());
    progress(cfg, || format!("solving at N={grid}, tol={:e}", solver.residual_tol));
    let fixed = point_to_solution(&cfg.group, &m, grid, &solver)?;
    let quadruple = fixed.quadruple();
    let nahm = residual_l2(&cfg.group, &nahm_residual(&quadruple));
    let cert = fixed.certificate;
    progress(cfg, || format!("real residual {:.3e}, complex residual {:.3e}", cert.real_residual, cert.complex_residual));
    let ok = cert.converged && cert.real_residual <= solver.residual_tol;
    let artifact = SolveArtifact {
        group: cfg.group.label(),
        grid,
        tol: solver.residual_tol,
        point: m,
        certificate: cert,
        nahm_residual: nahm,
        quadruple,
    };
    Ok((artifact, ok))
}

#[derive(Debug, Serialize)]
pub struct MetricArtifact {
    pub group: String,
    /// Every resolution solved at: `[N]`, or `[N, 2N]` when extrapolating.
    pub grids: Vec<usize>,
    pub omega_c_deviation: f64,
    pub report: MetricReport,
}

pub fn metric(cfg: &RunConfig) -> Result<(MetricArtifact, bool)> {
    let m = cfg.load_point()?.unwrap_or_else(|| ModuliPoint::identity(&cfg.group));
    let base = MetricConfig::default();
    let mc = MetricConfig {
        grid: cfg.grid_or(base.grid),
        extrapolate: cfg.extrapolate,
        solver: cfg.solver(base.solver),
        ..base
    };
    let grids = if mc.extrapolate { vec![mc.grid, 2 * mc.grid] } else { vec![mc.grid] };
    progress(cfg, || format!("metric at grids {grids:?}"));
    let report = metric_report(&cfg.group, &m, &mc)?;
    let dev = check_omega_c(&cfg.group, &report)?;
    progress(cfg, || format!("omega_c deviation {dev:.3e}"));
    let ok = report.residuals.iter().all(|r| r.real_residual <= mc.solver.residual_tol);
    Ok((MetricArtifact { group: cfg.group.label(), grids, omega_c_deviation: dev, report }, ok))
}

#[derive(Debug, Serialize)]
pub struct VerifyArtifact {
    pub suite: String,
    pub group: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

pub fn verify_config(cfg: &RunConfig) -> VerifyConfig {
    let base = VerifyConfig::default();
    VerifyConfig {
        spec: cfg.group,
        seed: cfg.seed,
        points: cfg.points.unwrap_or(base.points),
        metric: MetricConfig {
            grid: cfg.grid_or(base.metric.grid),
            solver: cfg.solver(base.metric.solver),
            ..base.metric
        },
        ..base
    }
}

pub fn verify(cfg: &RunConfig, suite: Suite) -> Result<VerifyArtifact> {
    let vc = verify_config(cfg);
    progress(cfg, || format!("suite {suite} with seed {} over {} random points", vc.seed, vc.points));
    let checks = run_suite(suite, &vc)?;
    for c in checks.iter().filter(|c| !c.passed) {
        progress(cfg, || format!("FAILED {}:{} measured {:.3e} > {:.1e}", c.suite, c.name, c.measured, c.tolerance));
    }
    Ok(VerifyArtifact {
        suite: suite.name().into(),
        group: cfg.group.label(),
        seed: cfg.seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// One row per check: `suite,name,measured,tolerance,passed`.
pub fn checks_csv(checks: &[Check]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in checks {
        w.serialize(c).map_err(|e| hkgc::error::Error::Invalid(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| hkgc::error::Error::Invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Transition checks over the overlap ring at the point from `--point`, or
/// at a point drawn from `--seed`.
pub fn twistor(cfg: &RunConfig) -> Result<(Vec<TwistorReport>, bool)> {
    let m = match cfg.load_point()? {
        Some(m) => m,
        None => sample::moduli_point(&mut sample::rng(cfg.seed), &cfg.group, 1.0),
    };
    let grid = cfg.grid_or(TWISTOR_GRID);
    let curve = polar_path(m.u())?;
    let (count, lo, hi) = OVERLAP_RING;
    let reports = zeta_ring(count, lo, hi)
        .into_iter()
        .map(|z| verify_transition_against_reextraction(&cfg.group, &curve, m.eta(), z, grid))
        .collect::<Result<Vec<_>>>()?;
    let worst = reports.iter().map(TwistorReport::deviation).fold(0.0f64, f64::max);
    progress(cfg, || format!("{} zeta samples at N={grid}, worst deviation {worst:.3e}", reports.len()));
    Ok((reports, worst <= TWISTOR_TOL))
}
