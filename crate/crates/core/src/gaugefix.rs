//! Complex gauge fixing: from a solution of the complex equation, find a
//! based complex gauge transformation after which the real equation holds.
//! Also the Dirichlet boundary-value solver for `D*D` and the projection of
//! tangent tuples onto the slice orthogonal to gauge orbits.

use nalgebra::{DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liecore::{ad_matrix, commutator, hermitian_fn, hermitian_part, mat_of, vec_of, GroupSpec, Matrix, Role, C64, I};
use crate::nahm::{
    gauge_act_complex, pair_to_quadruple, real_residual, complex_residual, ComplexPair, GaugeTransform,
    NahmQuadruple, Path,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Target L^2 norm of the real-equation residual.
    pub residual_tol: f64,
    pub max_newton_iters: usize,
    pub max_flow_steps: usize,
    /// Initial step of the preconditioned flow; grows after accepted steps.
    pub flow_step: f64,
    /// Line-search shrink factor.
    pub shrink: f64,
    /// Residual below which full steps are attempted.
    pub newton_switch: f64,
    /// Keep iterating past `residual_tol` until the residual stagnates.
    pub polish: bool,
    /// Per-iteration telemetry on standard error.
    pub verbose: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-8,
            max_newton_iters: 50,
            max_flow_steps: 5000,
            flow_step: 0.05,
            shrink: 0.5,
            newton_switch: 1e-3,
            polish: false,
            verbose: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Invalid(format!("{name} must be positive, got {v}")))
            }
        };
        pos("residual_tol", self.residual_tol)?;
        pos("flow_step", self.flow_step)?;
        pos("newton_switch", self.newton_switch)?;
        pos("max_newton_iters", self.max_newton_iters as f64)?;
        pos("max_flow_steps", self.max_flow_steps as f64)?;
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Invalid(format!("shrink must lie in (0, 1), got {}", self.shrink)));
        }
        Ok(())
    }

    pub fn polished(mut self) -> Self {
        self.polish = true;
        self
    }
}

/// Block tridiagonal system factored by block Gaussian elimination.
#[derive(Debug, Clone)]
struct BlockTridiag {
    diag: Vec<Matrix>,
    /// `sub[k]` couples unknown `k` into row `k + 1`.
    sub: Vec<Matrix>,
    /// `sup[k]` couples unknown `k + 1` into row `k`.
    sup: Vec<Matrix>,
    lus: Vec<LU<C64, Dyn, Dyn>>,
    gammas: Vec<Matrix>,
}

impl BlockTridiag {
    fn factor(diag: Vec<Matrix>, sub: Vec<Matrix>, sup: Vec<Matrix>) -> Result<Self> {
        let m = diag.len();
        let mut lus = Vec::with_capacity(m);
        let mut gammas: Vec<Matrix> = Vec::with_capacity(m.saturating_sub(1));
        for k in 0..m {
            let mk = if k == 0 { diag[0].clone() } else { &diag[k] - &sub[k - 1] * &gammas[k - 1] };
            let scale = mk.iter().fold(0.0f64, |a, z| a.max(z.norm()));
            let lu = mk.lu();
            let u = lu.u();
            let pivot = (0..u.nrows()).fold(f64::INFINITY, |a, i| a.min(u[(i, i)].norm()));
            if !(pivot > 1e-13 * scale) {
                return Err(Error::SingularSystem { block: k });
            }
            if k + 1 < m {
                gammas.push(lu.solve(&sup[k]).ok_or(Error::SingularSystem { block: k })?);
            }
            lus.push(lu);
        }
        Ok(Self { diag, sub, sup, lus, gammas })
    }

    fn solve(&self, rhs: &[DVector<C64>]) -> Result<Vec<DVector<C64>>> {
        let m = self.diag.len();
        let mut y: Vec<DVector<C64>> = Vec::with_capacity(m);
        for k in 0..m {
            let r = if k == 0 { rhs[0].clone() } else { &rhs[k] - &self.sub[k - 1] * &y[k - 1] };
            y.push(self.lus[k].solve(&r).ok_or(Error::SingularSystem { block: k })?);
        }
        for k in (0..m.saturating_sub(1)).rev() {
            let next = y[k + 1].clone();
            y[k] -= &self.gammas[k] * next;
        }
        Ok(y)
    }

    fn apply(&self, x: &[DVector<C64>]) -> Vec<DVector<C64>> {
        let m = self.diag.len();
        (0..m)
            .map(|k| {
                let mut y = &self.diag[k] * &x[k];
                if k > 0 {
                    y += &self.sub[k - 1] * &x[k - 1];
                }
                if k + 1 < m {
                    y += &self.sup[k] * &x[k + 1];
                }
                y
            })
            .collect()
    }
}

/// Second-order Dirichlet discretization of
/// `D*D c = -(d/ds + ad A_0)^2 c - sum_i ad(A_i)^2 c`
/// on the interior nodes, assembled from edge differences so that the
/// discrete operator is Hermitian positive definite. It is complex linear
/// and acts equally on anti-Hermitian and Hermitian paths.
#[derive(Debug, Clone)]
pub struct DStarDOperator {
    grid: usize,
    n: usize,
    system: BlockTridiag,
}

impl DStarDOperator {
    pub fn new(a: &NahmQuadruple) -> Result<Self> {
        let grid = a.grid();
        let n = a.n();
        let d = n * n;
        let inv_h = grid as f64;
        let id = Matrix::identity(d, d);
        let a0 = a.component(0);
        // Edge k joins nodes k and k + 1: E_k c = B_minus c_k + B_plus c_{k+1}.
        let edges: Vec<(Matrix, Matrix)> = (0..grid)
            .map(|k| {
                let mid = (a0.at(k) + a0.at(k + 1)) * C64::new(0.5, 0.0);
                let m = ad_matrix(&mid) * C64::new(0.5, 0.0);
                (&m - &id * C64::new(inv_h, 0.0), &m + &id * C64::new(inv_h, 0.0))
            })
            .collect();
        let node_term = |k: usize| {
            let mut acc = Matrix::zeros(d, d);
            for i in 1..4 {
                let m = ad_matrix(a.component(i).at(k));
                acc += m.adjoint() * m;
            }
            acc
        };
        let interior = grid - 1;
        let mut diag = Vec::with_capacity(interior);
        let mut sub = Vec::with_capacity(interior - 1);
        let mut sup = Vec::with_capacity(interior - 1);
        for k in 1..grid {
            let (_, plus_prev) = &edges[k - 1];
            let (minus_next, plus_next) = &edges[k];
            diag.push(plus_prev.adjoint() * plus_prev + minus_next.adjoint() * minus_next + node_term(k));
            if k + 1 < grid {
                sup.push(minus_next.adjoint() * plus_next);
                sub.push(plus_next.adjoint() * minus_next);
            }
        }
        Ok(Self { grid, n, system: BlockTridiag::factor(diag, sub, sup)? })
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check(&self, p: &Path) -> Result<()> {
        if p.grid() != self.grid {
            return Err(Error::DimensionMismatch { expected: self.grid, found: p.grid() });
        }
        if p.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: p.n() });
        }
        Ok(())
    }

    fn interior(p: &Path) -> Vec<DVector<C64>> {
        (1..p.grid()).map(|k| vec_of(p.at(k))).collect()
    }

    fn assemble(&self, role: Role, xs: Vec<DVector<C64>>) -> Result<Path> {
        let mut samples = Vec::with_capacity(self.grid + 1);
        samples.push(Matrix::zeros(self.n, self.n));
        samples.extend(xs.iter().map(|x| mat_of(x, self.n)));
        samples.push(Matrix::zeros(self.n, self.n));
        Path::new(samples, role)
    }

    /// `D*D u` at interior nodes, treating the endpoint values of `u` as zero.
    pub fn apply(&self, u: &Path) -> Result<Path> {
        self.check(u)?;
        self.assemble(u.role(), self.system.apply(&Self::interior(u)))
    }

    /// Solution of `D*D u = rhs` with `u(0) = u(1) = 0`; endpoint values of `rhs` are ignored.
    pub fn solve(&self, rhs: &Path) -> Result<Path> {
        self.check(rhs)?;
        self.assemble(rhs.role(), self.system.solve(&Self::interior(rhs))?)
    }
}

pub fn solve_dstar_d(op: &DStarDOperator, rhs: &Path) -> Result<Path> {
    op.solve(rhs)
}

/// `D u = (du/ds + [A_0, u], [A_1, u], [A_2, u], [A_3, u])` with the five-point stencils.
pub fn d_op(a: &NahmQuadruple, u: &Path) -> Result<NahmQuadruple> {
    a.component(0).check_compatible(u)?;
    let du = u.derivative();
    let a0 = du.map_indexed(Role::CompactAlgebra, |k, d| d + commutator(a.component(0).at(k), u.at(k)));
    let ad = |i: usize| u.map_indexed(Role::CompactAlgebra, |k, x| commutator(a.component(i).at(k), x));
    NahmQuadruple::new([a0, ad(1), ad(2), ad(3)])
}

/// Infinitesimal action of the gauge generator `u`: `-D u`.
pub fn gauge_motion(a: &NahmQuadruple, u: &Path) -> Result<NahmQuadruple> {
    Ok(d_op(a, u)?.scale(-1.0))
}

/// Slice defect `da_0/ds + sum_i [A_i, a_i]`; zero exactly on horizontal tuples.
pub fn slice_residual(a: &NahmQuadruple, v: &NahmQuadruple) -> Result<Path> {
    a.component(0).check_compatible(v.component(0))?;
    let d = v.component(0).derivative();
    Ok(d.map_indexed(Role::CompactAlgebra, |k, d0| {
        let mut acc = d0.clone();
        for i in 0..4 {
            acc += commutator(a.component(i).at(k), v.component(i).at(k));
        }
        acc
    }))
}

/// Formal adjoint of [`d_op`]: `D* v = -(da_0/ds + sum_i [A_i, a_i])`.
pub fn dstar_op(a: &NahmQuadruple, v: &NahmQuadruple) -> Result<Path> {
    Ok(slice_residual(a, v)?.scale(C64::new(-1.0, 0.0)))
}

/// Nodes on either side of a grid node that a stencil-composed residual can reach.
const BAND: usize = 7;

/// Exact Jacobian of a node-local map whose row `k` (`0..=N`) depends only
/// on the interior unknowns within [`BAND`] nodes, assembled by grouped
/// finite differences: columns `2 BAND + 1` nodes apart share one evaluation.
/// Entries are real `d x d` blocks in the coordinates of `basis`.
struct BandedJacobian {
    grid: usize,
    n: usize,
    basis: Vec<Matrix>,
    duals: Vec<Matrix>,
    /// `blocks[k][j + BAND - k]` is the block of row node `k`, column node `j`.
    blocks: Vec<Vec<DMatrix<f64>>>,
}

impl BandedJacobian {
    /// `eval(delta)` returns the residual path at `x0 + delta`; `base` is `eval(0)`.
    fn assemble<F>(grid: usize, basis: Vec<Matrix>, eps: f64, base: &Path, eval: F) -> Result<Self>
    where
        F: Fn(&Path) -> Result<Path> + Sync,
    {
        use rayon::prelude::*;
        let n = base.n();
        let d = basis.len();
        let stride = 2 * BAND + 1;
        let duals: Vec<Matrix> = basis.iter().map(|b| b / C64::new(b.norm_squared(), 0.0)).collect();
        let columns: Vec<(usize, usize, Path)> = (0..stride)
            .flat_map(|color| (0..d).map(move |a| (color, a)))
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(color, a)| {
                let mut samples = vec![Matrix::zeros(n, n); grid + 1];
                for j in (1 + color..grid).step_by(stride) {
                    samples[j] = &basis[a] * C64::new(eps, 0.0);
                }
                let out = eval(&Path::new(samples, base.role())?)?;
                Ok((color, a, out))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut blocks = vec![vec![DMatrix::zeros(d, d); 2 * BAND + 1]; grid + 1];
        for (color, a, out) in &columns {
            for j in (1 + color..grid).step_by(stride) {
                for k in j.saturating_sub(BAND)..=(j + BAND).min(grid) {
                    let diff = out.at(k) - base.at(k);
                    let block = &mut blocks[k][j + BAND - k];
                    for b in 0..d {
                        block[(b, *a)] = coord(&duals[b], &diff) / eps;
                    }
                }
            }
        }
        Ok(Self { grid, n, basis, duals, blocks })
    }

    fn block(&self, k: usize, j: usize) -> Option<&DMatrix<f64>> {
        (k.abs_diff(j) <= BAND).then(|| &self.blocks[k][j + BAND - k])
    }

    fn coords(&self, m: &Matrix) -> DVector<f64> {
        DVector::from_iterator(self.duals.len(), self.duals.iter().map(|b| coord(b, m)))
    }

    /// Solve `J x = rhs` on the interior rows; `x` vanishes at both ends.
    fn solve(&self, rhs: &Path) -> Result<Path> {
        let unknowns = self.grid - 1;
        let system = banded_system(unknowns, self.basis.len(), BAND + 1, |i, j| self.block(i + 1, j + 1).cloned())?;
        let x = system.solve_nodes(|i| self.coords(rhs.at(i + 1)))?;
        self.to_path(&x, rhs.role())
    }

    /// Minimize `sum_k w_k |J_k x - rhs_k|^2` over all rows with trapezoid
    /// weights `w_k`, by banded normal equations.
    fn least_squares(&self, rhs: &Path) -> Result<Path> {
        let grid = self.grid;
        let unknowns = grid - 1;
        let weight = |k: usize| if k == 0 || k == grid { 0.5 } else { 1.0 };
        let rows = |j: usize| j.saturating_sub(BAND)..=(j + BAND).min(grid);
        let system = banded_system(unknowns, self.basis.len(), 2 * BAND + 1, |i, j| {
            let (ci, cj) = (i + 1, j + 1);
            if ci.abs_diff(cj) > 2 * BAND {
                return None;
            }
            let mut acc = DMatrix::zeros(self.basis.len(), self.basis.len());
            for k in rows(ci) {
                if let (Some(a), Some(b)) = (self.block(k, ci), self.block(k, cj)) {
                    acc += a.transpose() * b * weight(k);
                }
            }
            Some(acc)
        })?;
        let r: Vec<DVector<f64>> = (0..=grid).map(|k| self.coords(rhs.at(k))).collect();
        let x = system.solve_nodes(|i| {
            let c = i + 1;
            let mut acc = DVector::zeros(self.basis.len());
            for k in rows(c) {
                if let Some(a) = self.block(k, c) {
                    acc += a.transpose() * &r[k] * weight(k);
                }
            }
            acc
        })?;
        self.to_path(&x, rhs.role())
    }

    fn to_path(&self, x: &[DVector<f64>], role: Role) -> Result<Path> {
        let mut samples = vec![Matrix::zeros(self.n, self.n); self.grid + 1];
        for (i, xi) in x.iter().enumerate() {
            for (b, v) in xi.iter().enumerate() {
                samples[i + 1] += &self.basis[b] * C64::new(*v, 0.0);
            }
        }
        Path::new(samples, role)
    }
}

fn coord(dual: &Matrix, m: &Matrix) -> f64 {
    dual.iter().zip(m.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// A block tridiagonal factorization of a node-banded system, with nodes
/// grouped `group` at a time.
struct GroupedSystem {
    nodes: usize,
    d: usize,
    group: usize,
    system: BlockTridiag,
}

/// `entry(i, j)` is the `d x d` block coupling unknown nodes `i` and `j`;
/// it must vanish when the nodes are more than `group` apart.
fn banded_system(
    nodes: usize,
    d: usize,
    group: usize,
    entry: impl Fn(usize, usize) -> Option<DMatrix<f64>>,
) -> Result<GroupedSystem> {
    let groups = nodes.div_ceil(group);
    let range = |g: usize| (g * group)..((g + 1) * group).min(nodes);
    let fill = |rg: usize, cg: usize| {
        let (rows, cols) = (range(rg), range(cg));
        let mut m = Matrix::zeros(rows.len() * d, cols.len() * d);
        for (ri, i) in rows.clone().enumerate() {
            for (cj, j) in cols.clone().enumerate() {
                if let Some(b) = entry(i, j) {
                    for r in 0..d {
                        for c in 0..d {
                            m[(ri * d + r, cj * d + c)] = C64::new(b[(r, c)], 0.0);
                        }
                    }
                }
            }
        }
        m
    };
    let diag = (0..groups).map(|g| fill(g, g)).collect();
    let sub = (1..groups).map(|g| fill(g, g - 1)).collect();
    let sup = (1..groups).map(|g| fill(g - 1, g)).collect();
    Ok(GroupedSystem { nodes, d, group, system: BlockTridiag::factor(diag, sub, sup)? })
}

impl GroupedSystem {
    fn solve_nodes(&self, rhs: impl Fn(usize) -> DVector<f64>) -> Result<Vec<DVector<f64>>> {
        let groups = self.nodes.div_ceil(self.group);
        let blocks: Vec<DVector<C64>> = (0..groups)
            .map(|g| {
                let nodes = (g * self.group)..((g + 1) * self.group).min(self.nodes);
                DVector::from_iterator(nodes.len() * self.d, nodes.flat_map(|i| rhs(i).into_iter().map(|v| C64::new(*v, 0.0)).collect::<Vec<_>>()))
            })
            .collect();
        let x = self.system.solve(&blocks)?;
        Ok(x.iter()
            .flat_map(|xg| xg.as_slice().chunks(self.d).map(|c| DVector::from_iterator(self.d, c.iter().map(|z| z.re))).collect::<Vec<_>>())
            .collect())
    }
}

/// Final state of a solver run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub real_residual: f64,
    pub complex_residual: f64,
    pub flow_steps: usize,
    pub newton_iters: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct GaugeFixed {
    pub g: GaugeTransform,
    pub pair: ComplexPair,
    /// Hermitian `h` with `g = expm(h)`, vanishing at both ends.
    pub log_g: Path,
    pub certificate: Certificate,
}

impl GaugeFixed {
    pub fn quadruple(&self) -> NahmQuadruple {
        pair_to_quadruple(&self.pair)
    }
}

struct Trial {
    h: Path,
    g: GaugeTransform,
    pair: ComplexPair,
    rho: Path,
    res: f64,
}

fn evaluate(spec: &GroupSpec, p: &ComplexPair, h: Path) -> Result<Trial> {
    let g = h.map(Role::ComplexGroup, |x| hermitian_fn(x, f64::exp));
    let g_inv = h.map(Role::ComplexGroup, |x| hermitian_fn(x, |l| (-l).exp()));
    let g = GaugeTransform::from_parts(g, g_inv);
    let pair = gauge_act_complex(&g, p)?;
    let rho = real_residual(&pair);
    let res = rho.l2_norm(spec);
    if !res.is_finite() {
        return Err(Error::NonConvergence { iterations: 0, residual: res });
    }
    Ok(Trial { h, g, pair, rho, res })
}

/// Gauge fixing started from `g = 1`.
pub fn gauge_fix(spec: &GroupSpec, p: &ComplexPair, cfg: &SolverConfig) -> Result<GaugeFixed> {
    let h0 = Path::zeros(p.grid(), p.n(), Role::ComplexAlgebra)?;
    gauge_fix_from(spec, p, &h0, cfg)
}

/// Gauge fixing over `g = expm(h)`, `h` Hermitian with `h(0) = h(1) = 0`,
/// started from `h0`. Flow steps solve `D*D dh = -rho` at the current
/// data (the linearization of the real residual along `expm(dh)`), taking
/// damped steps while the residual is above `newton_switch`. Below it,
/// Newton steps use the exact Jacobian of the discrete residual.
pub fn gauge_fix_from(spec: &GroupSpec, p: &ComplexPair, h0: &Path, cfg: &SolverConfig) -> Result<GaugeFixed> {
    cfg.validate()?;
    p.alpha.check_compatible(h0)?;
    let hermitian_basis: Vec<Matrix> = spec.algebra_basis().iter().map(|x| x * I).collect();
    // Search directions stay in i*g; for SU(n) this drops trace parts that
    // finite differences leave in the residual.
    let onto_basis = |x: &Matrix| {
        let mut out = Matrix::zeros(p.n(), p.n());
        for b in &hermitian_basis {
            out += b * C64::new(coord(&(b / C64::new(b.norm_squared(), 0.0)), x), 0.0);
        }
        out
    };
    let h0 = h0.map_indexed(Role::ComplexAlgebra, |k, x| {
        if k == 0 || k == h0.grid() { Matrix::zeros(p.n(), p.n()) } else { onto_basis(&hermitian_part(x)) }
    });
    let mut cur = evaluate(spec, p, h0)?;
    let mut tau = cfg.flow_step;
    let (mut flow_steps, mut newton_iters) = (0usize, 0usize);
    let log = |phase: &str, it: usize, res: f64, step: f64| {
        if cfg.verbose {
            eprintln!("gauge_fix phase={phase} iter={it} residual={res:.6e} step={step:.3e}");
        }
    };
    log("start", 0, cur.res, 0.0);
    loop {
        if cur.res <= cfg.residual_tol && !cfg.polish {
            break;
        }
        let newton = cur.res <= cfg.newton_switch;
        if newton {
            if newton_iters >= cfg.max_newton_iters {
                break;
            }
            newton_iters += 1;
        } else {
            if flow_steps >= cfg.max_flow_steps {
                break;
            }
            flow_steps += 1;
        }
        let dir = if newton {
            let jac = BandedJacobian::assemble(p.grid(), hermitian_basis.clone(), 1e-7, &cur.rho, |delta| {
                Ok(evaluate(spec, p, cur.h.add(delta)?)?.rho)
            })?;
            jac.least_squares(&cur.rho)?
        } else {
            DStarDOperator::new(&pair_to_quadruple(&cur.pair))?.solve(&cur.rho)?.map(Role::ComplexAlgebra, onto_basis)
        };
        let mut step = if newton { 1.0 } else { tau };
        let mut accepted = None;
        while step >= 1e-8 {
            let h = cur.h.zip_map(&dir, Role::ComplexAlgebra, |a, b| hermitian_part(&(a - b * C64::new(step, 0.0))))?;
            let trial = evaluate(spec, p, h)?;
            if trial.res < cur.res * (1.0 - 1e-4 * step) {
                accepted = Some(trial);
                break;
            }
            step *= cfg.shrink;
        }
        let Some(next) = accepted else {
            break;
        };
        let gain = next.res / cur.res;
        log(if newton { "newton" } else { "flow" }, flow_steps + newton_iters, next.res, step);
        if !newton {
            tau = if step >= tau { (2.0 * tau).min(1.0) } else { step };
        }
        let was_converged = cur.res <= cfg.residual_tol;
        cur = next;
        // Polishing stops once a Newton step no longer halves the residual.
        if was_converged && newton && gain > 0.5 {
            break;
        }
    }
    let complex = complex_residual(&cur.pair).l2_norm(spec);
    let certificate = Certificate {
        real_residual: cur.res,
        complex_residual: complex,
        flow_steps,
        newton_iters,
        converged: cur.res <= cfg.residual_tol,
    };
    if !certificate.converged {
        return Err(Error::NonConvergence { iterations: flow_steps + newton_iters, residual: cur.res });
    }
    Ok(GaugeFixed { g: cur.g, pair: cur.pair, log_g: cur.h, certificate })
}

/// A tangent tuple moved onto the slice, with its final slice defect.
#[derive(Debug, Clone)]
pub struct Projection {
    pub tangent: NahmQuadruple,
    /// L^2 norm of the slice defect over interior nodes, where it is solved for.
    pub slice_residual: f64,
    /// L^2 norm of the slice defect including both end nodes, where `w` is
    /// pinned and the defect is discretization error.
    pub boundary_defect: f64,
    pub iterations: usize,
}

/// Slice projection at a fixed base, with the stencil system factored once.
pub struct Projector {
    spec: GroupSpec,
    base: NahmQuadruple,
    jac: BandedJacobian,
}

impl Projector {
    pub fn new(spec: &GroupSpec, a: &NahmQuadruple) -> Result<Self> {
        let grid = a.grid();
        let zero = Path::zeros(grid, a.n(), Role::CompactAlgebra)?;
        let jac = BandedJacobian::assemble(grid, spec.algebra_basis(), 1.0, &zero, |w| slice_residual(a, &d_op(a, w)?))?;
        Ok(Self { spec: *spec, base: a.clone(), jac })
    }

    pub fn base(&self) -> &NahmQuadruple {
        &self.base
    }

    /// `v + D w` with `w` vanishing at the ends, chosen so that the slice
    /// defect vanishes at every interior node. Fails when the interior
    /// defect exceeds `residual_tol * max(1, |v|)`.
    pub fn project(&self, v: &NahmQuadruple, cfg: &SolverConfig) -> Result<Projection> {
        let a = &self.base;
        a.component(0).check_compatible(v.component(0))?;
        let interior = |s: &Path| {
            let h = s.step();
            (1..s.grid()).map(|k| self.spec.norm_sq(s.at(k))).sum::<f64>().sqrt() * h.sqrt()
        };
        let mut t = v.clone();
        let mut s = slice_residual(a, &t)?;
        let mut res = interior(&s);
        let mut iterations = 0;
        // The map is linear; repeated solves only refine rounding.
        while iterations < 3 {
            let w = self.jac.solve(&s)?;
            let next = t.sub(&d_op(a, &w)?)?;
            let s_next = slice_residual(a, &next)?;
            let res_next = interior(&s_next);
            iterations += 1;
            if res_next >= res {
                break;
            }
            t = next;
            s = s_next;
            res = res_next;
        }
        if res > cfg.residual_tol * v.l2_norm(&self.spec).max(1.0) {
            return Err(Error::NonConvergence { iterations, residual: res });
        }
        Ok(Projection { tangent: t, slice_residual: res, boundary_defect: s.l2_norm(&self.spec), iterations })
    }
}

/// Remove the gauge-orbit component of `v` at `a`. See [`Projector`] for
/// repeated projections at one base.
pub fn horizontal_project(
    spec: &GroupSpec,
    a: &NahmQuadruple,
    v: &NahmQuadruple,
    cfg: &SolverConfig,
) -> Result<Projection> {
    Projector::new(spec, a)?.project(v, cfg)
}

#[cfg(test)]
mod tests;
