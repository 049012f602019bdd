//! Seeded property suites over the moduli space and twistor space.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaugefix::SolverConfig;
use crate::liecore::{max_abs_diff, GroupSpec, Matrix, C64};
use crate::moduli::{
    act_gxg, act_so3, chart_jacobian, check_omega_c, metric_report, point_to_solution, solution_to_point, spectrum,
    MetricConfig, MetricReport, ModuliPoint,
};
use crate::nahm::{polar_path, Quaternion};
use crate::sample;
use crate::twistor::{transition, transition_inverse, verify_transition_against_reextraction, zeta_ring, Patch, TwistorCoord, OVERLAP_RING};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Quaternion,
    Symmetry,
    Twistor,
    FlatAbelian,
    OmegaC,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [Suite::Quaternion, Suite::Symmetry, Suite::Twistor, Suite::FlatAbelian, Suite::OmegaC];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Quaternion => "quaternion",
            Suite::Symmetry => "symmetry",
            Suite::Twistor => "twistor",
            Suite::FlatAbelian => "flat-abelian",
            Suite::OmegaC => "omega-c",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown suite `{s}`")))
    }
}

/// One measured quantity against its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(suite: Suite, name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self { suite: suite.name(), name: name.into(), measured, tolerance, passed: measured <= tolerance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub spec: GroupSpec,
    pub seed: u64,
    /// Random points per suite, in addition to the origin.
    pub points: usize,
    /// Points for the symmetry suite, which costs several metrics each.
    pub symmetry_points: usize,
    /// Metric grid of the symmetry suite. Gram spectra are compared in
    /// absolute terms, and large eigenvalues need the finer grid.
    pub symmetry_grid: usize,
    pub metric: MetricConfig,
    /// Grid of the solves inside the `SO(3)` chart Jacobian.
    pub jacobian_grid: usize,
    pub twistor_grid: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            spec: GroupSpec::su2(),
            seed: 42,
            points: 5,
            symmetry_points: 2,
            symmetry_grid: 128,
            metric: MetricConfig {
                grid: 64,
                epsilon: 1e-4,
                extrapolate: true,
                solver: SolverConfig { residual_tol: 1e-6, ..SolverConfig::default() },
            },
            jacobian_grid: 256,
            twistor_grid: 512,
        }
    }
}

pub const QUATERNION_TOL: f64 = 1e-4;
pub const OMEGA_C_TOL: f64 = 1e-5;
pub const SPECTRUM_TOL: f64 = 1e-5;
pub const FLAT_TOL: f64 = 1e-8;
pub const TWISTOR_TOL: f64 = 1e-7;
pub const COCYCLE_TOL: f64 = 1e-10;

fn rng_for(cfg: &VerifyConfig, suite: Suite) -> sample::SampleRng {
    sample::rng(cfg.seed.wrapping_mul(31).wrapping_add(suite as u64))
}

/// The origin followed by `cfg.points` seeded points.
pub fn suite_points(cfg: &VerifyConfig) -> Vec<ModuliPoint> {
    let mut rng = rng_for(cfg, Suite::Quaternion);
    std::iter::once(ModuliPoint::identity(&cfg.spec))
        .chain((0..cfg.points).map(|_| sample::moduli_point(&mut rng, &cfg.spec, 1.0)))
        .collect()
}

pub fn point_reports(cfg: &VerifyConfig, points: &[ModuliPoint]) -> Result<Vec<MetricReport>> {
    points.iter().map(|m| metric_report(&cfg.spec, m, &cfg.metric)).collect()
}

fn max_entry(m: &DMatrix<f64>) -> f64 {
    m.abs().max()
}

/// `|Q^2 + 1|` for each induced structure and `|IJ - K|`.
pub fn quaternion_defects(r: &MetricReport) -> [f64; 4] {
    let d = r.gram().nrows();
    let id = DMatrix::<f64>::identity(d, d);
    let s = |q| r.structure(q);
    let sq = |q| max_entry(&(s(q) * s(q) + &id));
    [
        sq(Quaternion::I),
        sq(Quaternion::J),
        sq(Quaternion::K),
        max_entry(&(s(Quaternion::I) * s(Quaternion::J) - s(Quaternion::K))),
    ]
}

fn quaternion_checks(reports: &[MetricReport]) -> Vec<Check> {
    let names = ["I^2+1", "J^2+1", "K^2+1", "IJ-K"];
    reports
        .iter()
        .enumerate()
        .flat_map(|(p, r)| {
            quaternion_defects(r)
                .into_iter()
                .zip(names)
                .map(move |(x, n)| Check::new(Suite::Quaternion, format!("point{p}:{n}"), x, QUATERNION_TOL))
        })
        .collect()
}

fn omega_c_checks(spec: &GroupSpec, reports: &[MetricReport]) -> Result<Vec<Check>> {
    reports
        .iter()
        .enumerate()
        .map(|(p, r)| Ok(Check::new(Suite::OmegaC, format!("point{p}:omega_c"), check_omega_c(spec, r)?, OMEGA_C_TOL)))
        .collect()
}

fn spectrum_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    spectrum(a).iter().zip(spectrum(b)).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Gram spectrum of `before` against the spectrum at `g m` under `G x G`.
pub fn gxg_spectrum_gap(cfg: &VerifyConfig, before: &MetricReport, gl: &Matrix, gr: &Matrix) -> Result<f64> {
    let after = metric_report(&cfg.spec, &act_gxg(&cfg.spec, gl, gr, &before.point)?, &cfg.metric)?;
    Ok(spectrum_gap(before.gram(), after.gram()))
}

/// Gram spectrum of `before` against the pullback of the Gram matrix at `R m`.
pub fn so3_spectrum_gap(cfg: &VerifyConfig, before: &MetricReport, r: &[[f64; 3]; 3]) -> Result<f64> {
    let solver = cfg.metric.solver.polished();
    let grid = cfg.jacobian_grid;
    let spec = cfg.spec;
    let rotate = |p: &ModuliPoint| -> Result<ModuliPoint> {
        let a = point_to_solution(&spec, p, grid, &solver)?.quadruple();
        solution_to_point(&act_so3(r, &a)?)
    };
    let (image, jac) = chart_jacobian(&spec, &before.point, cfg.metric.epsilon, rotate)?;
    let after = metric_report(&spec, &image, &cfg.metric)?;
    Ok(spectrum_gap(before.gram(), &(jac.transpose() * after.gram() * &jac)))
}

fn symmetry_checks(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let cfg = &VerifyConfig { metric: MetricConfig { grid: cfg.symmetry_grid, ..cfg.metric }, ..*cfg };
    let mut rng = rng_for(cfg, Suite::Symmetry);
    let mut out = Vec::new();
    for p in 0..cfg.symmetry_points {
        let m = sample::moduli_point(&mut rng, &cfg.spec, 1.0);
        let gl = sample::unitary(&mut rng, &cfg.spec, 2.0);
        let gr = sample::unitary(&mut rng, &cfg.spec, 2.0);
        let r = sample::rotation(&mut rng);
        let base = metric_report(&cfg.spec, &m, &cfg.metric)?;
        out.push(Check::new(Suite::Symmetry, format!("point{p}:GxG"), gxg_spectrum_gap(cfg, &base, &gl, &gr)?, SPECTRUM_TOL));
        out.push(Check::new(Suite::Symmetry, format!("point{p}:SO3"), so3_spectrum_gap(cfg, &base, &r)?, SPECTRUM_TOL));
    }
    Ok(out)
}

/// The 27 points `U = exp(a + i b)`, `eta = c + 0.3 i` with `a, b, c` in `{-0.8, 0, 0.8}`.
pub fn abelian_grid() -> Vec<ModuliPoint> {
    let vals = [-0.8, 0.0, 0.8];
    let mut out = Vec::with_capacity(27);
    for a in vals {
        for b in vals {
            for c in vals {
                let u = Matrix::from_element(1, 1, C64::new(a, b).exp());
                let eta = Matrix::from_element(1, 1, C64::new(c, 0.3));
                out.push(ModuliPoint::new_unchecked(u, eta));
            }
        }
    }
    out
}

/// Largest entrywise spread of the U(1) Gram matrix over [`abelian_grid`],
/// and the largest distance from `diag(1, 1, 4, 4)`.
pub fn abelian_spread(metric: &MetricConfig) -> Result<(f64, f64)> {
    let spec = GroupSpec::u1();
    let grams = abelian_grid()
        .par_iter()
        .map(|m| Ok(metric_report(&spec, m, metric)?.data.gram))
        .collect::<Result<Vec<_>>>()?;
    let flat = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 4.0, 4.0]));
    let mut spread = 0.0f64;
    let mut off = 0.0f64;
    for g in &grams {
        spread = spread.max(max_entry(&(g - &grams[0])));
        off = off.max(max_entry(&(g - &flat)));
    }
    Ok((spread, off))
}

fn flat_abelian_checks(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let metric = MetricConfig { grid: 16, extrapolate: false, ..cfg.metric };
    let (spread, off) = abelian_spread(&metric)?;
    Ok(vec![
        Check::new(Suite::FlatAbelian, "gram_spread", spread, FLAT_TOL),
        Check::new(Suite::FlatAbelian, "gram_vs_flat", off, FLAT_TOL),
    ])
}

fn twistor_checks(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let mut rng = rng_for(cfg, Suite::Twistor);
    let m = sample::moduli_point(&mut rng, &cfg.spec, 1.0);
    let curve = polar_path(m.u())?;
    let (count, lo, hi) = OVERLAP_RING;
    let ring = zeta_ring(count, lo, hi);
    let reports = ring
        .par_iter()
        .map(|&z| verify_transition_against_reextraction(&cfg.spec, &curve, m.eta(), z, cfg.twistor_grid))
        .collect::<Result<Vec<_>>>()?;
    let mut out: Vec<Check> = reports
        .iter()
        .enumerate()
        .map(|(k, r)| Check::new(Suite::Twistor, format!("zeta{k}:reextraction"), r.deviation(), TWISTOR_TOL))
        .collect();
    for (k, &zeta) in ring.iter().enumerate() {
        let p = TwistorCoord { patch: Patch::U, g: m.u().clone(), eta: m.eta().clone(), zeta };
        let back = transition_inverse(&transition(&p)?)?;
        let d = max_abs_diff(&back.g, &p.g).max(max_abs_diff(&back.eta, &p.eta)).max((back.zeta - zeta).norm());
        out.push(Check::new(Suite::Twistor, format!("zeta{k}:cocycle"), d, COCYCLE_TOL));
    }
    Ok(out)
}

/// Run one suite, or all of them with the metric reports shared between
/// the quaternion and omega-c suites.
pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let needs_reports = matches!(suite, Suite::Quaternion | Suite::OmegaC | Suite::All);
    let reports = if needs_reports { point_reports(cfg, &suite_points(cfg))? } else { Vec::new() };
    let mut out = Vec::new();
    for s in Suite::EACH.into_iter().filter(|s| suite == Suite::All || *s == suite) {
        out.extend(match s {
            Suite::Quaternion => quaternion_checks(&reports),
            Suite::OmegaC => omega_c_checks(&cfg.spec, &reports)?,
            Suite::Symmetry => symmetry_checks(cfg)?,
            Suite::FlatAbelian => flat_abelian_checks(cfg)?,
            Suite::Twistor => twistor_checks(cfg)?,
            Suite::All => unreachable!(),
        });
    }
    Ok(out)
}
