//! The moduli space `M = T*G^c` in the coordinates `(U, eta)`: passage
//! between points and gauge-fixed solutions, horizontal tangent
//! representatives, the L^2 metric with its Kähler forms, and the
//! symmetry actions of `G x G` and `SO(3)`.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaugefix::{gauge_fix, Certificate, GaugeFixed, Projector, SolverConfig};
use crate::liecore::{
    anti_hermitian_part, expm, inverse, logm_principal, GroupSpec, Matrix, Role, C64, I, KERNEL_TOL,
};
use crate::nahm::{
    generate_from_moduli, l2_inner_unchecked, matrix_to_pairs, pairs_to_matrix, quadruple_to_pair, quaternion_act,
    NahmQuadruple, Path, Quaternion,
};
use crate::ode::integrate_left;

/// A point `(U, eta)` of `G^c x g^c`: endpoint `u(1)` of the path and the
/// Lie-algebra element classifying a complex-gauge orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuliPoint {
    u: Matrix,
    eta: Matrix,
}

impl ModuliPoint {
    pub fn new(spec: &GroupSpec, u: Matrix, eta: Matrix) -> Result<Self> {
        let m = Self { u, eta };
        m.check(spec)?;
        Ok(m)
    }

    pub(crate) fn new_unchecked(u: Matrix, eta: Matrix) -> Self {
        Self { u, eta }
    }

    pub fn identity(spec: &GroupSpec) -> Self {
        Self { u: spec.identity(), eta: spec.zero() }
    }

    pub fn u(&self) -> &Matrix {
        &self.u
    }

    pub fn eta(&self) -> &Matrix {
        &self.eta
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    /// Role and size checks against `spec`.
    pub fn check(&self, spec: &GroupSpec) -> Result<()> {
        for x in [&self.u, &self.eta] {
            if x.shape() != (spec.n, spec.n) {
                return Err(Error::DimensionMismatch { expected: spec.n, found: x.nrows() });
            }
        }
        spec.check_role(&self.u, Role::ComplexGroup, KERNEL_TOL)?;
        spec.check_role(&self.eta, Role::ComplexAlgebra, KERNEL_TOL)
    }

    /// `(U expm(t X), eta + t Z)` for the direction `(X, Z)`.
    pub fn displaced(&self, d: &Direction, t: f64) -> ModuliPoint {
        let t = C64::new(t, 0.0);
        Self { u: &self.u * expm(&(&d.log_u * t)), eta: &self.eta + &d.eta * t }
    }

    /// Coordinates of `other` in the chart `(X, Z) -> (U expm(X), eta + Z)`
    /// centred here, in the basis of [`coordinate_directions`].
    pub fn chart_coordinates(&self, spec: &GroupSpec, other: &ModuliPoint) -> Result<Vec<f64>> {
        let x = logm_principal(&(inverse(&self.u)? * &other.u))?;
        let z = &other.eta - &self.eta;
        Ok(complex_coords(spec, &x).into_iter().chain(complex_coords(spec, &z)).collect())
    }
}

/// Coordinates of `x` in g^c against the real basis `(e_k, i e_k)`.
fn complex_coords(spec: &GroupSpec, x: &Matrix) -> Vec<f64> {
    let re = anti_hermitian_part(x);
    let im = anti_hermitian_part(&(x * (-I)));
    let mut out = spec.algebra_coords(&re);
    out.extend(spec.algebra_coords(&im));
    out
}

#[derive(Serialize, Deserialize)]
struct PointJson {
    #[serde(rename = "U")]
    u: Vec<Vec<[f64; 2]>>,
    eta: Vec<Vec<[f64; 2]>>,
}

/// Row-major nested `[[[re, im], ...], ...]`.
pub fn matrix_to_rows(m: &Matrix) -> Vec<Vec<[f64; 2]>> {
    let flat = matrix_to_pairs(m);
    flat.chunks(m.ncols()).map(|c| c.to_vec()).collect()
}

pub fn rows_to_matrix(rows: &[Vec<[f64; 2]>]) -> Result<Matrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Invalid("empty matrix".into()));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::Invalid(format!("matrix must be square: {n} rows but a row of length {}", r.len())));
    }
    let flat: Vec<[f64; 2]> = rows.iter().flatten().copied().collect();
    pairs_to_matrix(n, &flat)
}

impl Serialize for ModuliPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PointJson { u: matrix_to_rows(&self.u), eta: matrix_to_rows(&self.eta) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModuliPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = PointJson::deserialize(d)?;
        let u = rows_to_matrix(&raw.u).map_err(D::Error::custom)?;
        let eta = rows_to_matrix(&raw.eta).map_err(D::Error::custom)?;
        if u.shape() != eta.shape() {
            return Err(D::Error::custom("U and eta must have the same size"));
        }
        Ok(ModuliPoint { u, eta })
    }
}

/// Generate along the polar path, then gauge fix.
pub fn point_to_solution(spec: &GroupSpec, m: &ModuliPoint, grid: usize, cfg: &SolverConfig) -> Result<GaugeFixed> {
    m.check(spec)?;
    let generated = generate_from_moduli(m, grid)?;
    gauge_fix(spec, &generated.pair, cfg)
}

/// Recover `(U, eta)`: integrate `u' = -2 alpha u` from `u(0) = 1` and read
/// `eta = beta(0)`.
pub fn solution_to_point(a: &NahmQuadruple) -> Result<ModuliPoint> {
    let pair = quadruple_to_pair(a);
    let n = a.n();
    let u = integrate_left(&pair.alpha, C64::new(-2.0, 0.0), &Matrix::identity(n, n))?;
    let u_end = u.last().cloned().unwrap_or_else(|| Matrix::identity(n, n));
    Ok(ModuliPoint::new_unchecked(u_end, pair.beta.first().clone()))
}

/// A real coordinate direction `(X, Z)` in `g^c + g^c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub label: String,
    pub log_u: Matrix,
    pub eta: Matrix,
}

/// The real basis of `g^c + g^c`, ordered as `U` along g, `U` along `i g`,
/// `eta` along g, `eta` along `i g`.
pub fn coordinate_directions(spec: &GroupSpec) -> Vec<Direction> {
    let basis = spec.algebra_basis();
    let zero = spec.zero();
    let mut out = Vec::with_capacity(4 * basis.len());
    for (part, on_u) in [("U", true), ("eta", false)] {
        for (tag, factor) in [("g", C64::new(1.0, 0.0)), ("ig", I)] {
            for (k, e) in basis.iter().enumerate() {
                let x = e * factor;
                let (log_u, eta) = if on_u { (x, zero.clone()) } else { (zero.clone(), x) };
                out.push(Direction { label: format!("{part}.{tag}{}", k + 1), log_u, eta });
            }
        }
    }
    out
}

/// Horizontal representative of one coordinate direction.
#[derive(Debug, Clone)]
pub struct TangentRep {
    pub label: String,
    pub a: NahmQuadruple,
    pub slice_residual: f64,
    pub boundary_defect: f64,
    /// Certificates of the solves at `-eps` and `+eps`.
    pub certificates: [Certificate; 2],
}

/// Tangent representatives at one point and grid.
pub struct TangentBasis {
    pub point: ModuliPoint,
    pub base: GaugeFixed,
    pub reps: Vec<TangentRep>,
    projector: Projector,
}

impl TangentBasis {
    pub fn grid(&self) -> usize {
        self.base.pair.grid()
    }

    pub fn projector(&self) -> &Projector {
        &self.projector
    }
}

/// One horizontal representative per coordinate direction: central
/// differences of gauge-fixed solutions at `m(+-eps)`, then projected onto
/// the slice at `m`.
pub fn tangent_basis(
    spec: &GroupSpec,
    m: &ModuliPoint,
    grid: usize,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<TangentBasis> {
    let dirs = coordinate_directions(spec);
    let labels = dirs.iter().map(|d| d.label.clone()).collect();
    tangent_basis_along(spec, m, grid, eps, cfg, labels, |i, t| m.displaced(&dirs[i], t))
}

/// Representatives of the curves `t -> curve(i, t)` through `m = curve(i, 0)`.
fn tangent_basis_along(
    spec: &GroupSpec,
    m: &ModuliPoint,
    grid: usize,
    eps: f64,
    cfg: &SolverConfig,
    labels: Vec<String>,
    curve: impl Fn(usize, f64) -> ModuliPoint + Sync,
) -> Result<TangentBasis> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Invalid(format!("finite-difference step must be positive, got {eps}")));
    }
    let solve_cfg = cfg.polished();
    let base = point_to_solution(spec, m, grid, &solve_cfg)?;
    let projector = Projector::new(spec, &base.quadruple())?;
    let slice_cfg = SolverConfig { residual_tol: 10.0 * cfg.residual_tol, ..*cfg };
    let reps = labels
        .into_par_iter()
        .enumerate()
        .map(|(i, label)| {
            let plus = point_to_solution(spec, &curve(i, eps), grid, &solve_cfg)?;
            let minus = point_to_solution(spec, &curve(i, -eps), grid, &solve_cfg)?;
            let diff = plus.quadruple().sub(&minus.quadruple())?.scale(1.0 / (2.0 * eps));
            let p = projector.project(&diff, &slice_cfg)?;
            Ok(TangentRep {
                label,
                a: p.tangent,
                slice_residual: p.slice_residual,
                boundary_defect: p.boundary_defect,
                certificates: [minus.certificate, plus.certificate],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TangentBasis { point: m.clone(), base, reps, projector })
}

/// Gram matrix, Kähler forms and induced complex structures of a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricData {
    pub gram: DMatrix<f64>,
    /// `omega[k](i, j) = <Q_k a_i, a_j>` for `Q = I, J, K`.
    pub omega: [DMatrix<f64>; 3],
    /// Matrices of `Q_k` on the basis: `P(Q_k a_j) = sum_i Q[k](i, j) a_i`,
    /// with `P` the slice projection.
    pub structures: [DMatrix<f64>; 3],
}

impl MetricData {
    pub fn from_basis(spec: &GroupSpec, basis: &TangentBasis, cfg: &SolverConfig) -> Result<Self> {
        let reps: Vec<&NahmQuadruple> = basis.reps.iter().map(|r| &r.a).collect();
        let dim = reps.len();
        let inner = |a: &NahmQuadruple, b: &NahmQuadruple| l2_inner_unchecked(spec, a, b);
        let gram = DMatrix::from_fn(dim, dim, |i, j| inner(reps[i], reps[j]));
        let gram = (&gram + gram.transpose()) * 0.5;
        let eig = SymmetricEigen::new(gram.clone());
        let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        if !(lo > 1e-12 * hi) {
            return Err(Error::DegenerateBasis(if hi > 0.0 { hi / lo } else { f64::INFINITY }));
        }
        let gram_inv = eig.eigenvectors.clone()
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x))
            * eig.eigenvectors.transpose();
        let slice_cfg = SolverConfig { residual_tol: 10.0 * cfg.residual_tol, ..*cfg };
        let mut omega = Vec::with_capacity(3);
        let mut structures = Vec::with_capacity(3);
        for q in Quaternion::ALL {
            let moved: Vec<NahmQuadruple> = reps.iter().map(|a| quaternion_act(q, a)).collect();
            omega.push(DMatrix::from_fn(dim, dim, |i, j| inner(&moved[i], reps[j])));
            let projected = moved
                .par_iter()
                .map(|v| Ok(basis.projector.project(v, &slice_cfg)?.tangent))
                .collect::<Result<Vec<_>>>()?;
            let b = DMatrix::from_fn(dim, dim, |i, j| inner(reps[i], &projected[j]));
            structures.push(&gram_inv * b);
        }
        let arr = |v: Vec<DMatrix<f64>>| -> [DMatrix<f64>; 3] { [v[0].clone(), v[1].clone(), v[2].clone()] };
        Ok(Self { gram, omega: arr(omega), structures: arr(structures) })
    }

    /// Richardson combination `(4 fine - coarse) / 3` for second-order errors.
    pub fn extrapolate(coarse: &Self, fine: &Self) -> Self {
        let r = |c: &DMatrix<f64>, f: &DMatrix<f64>| (f * 4.0 - c) / 3.0;
        Self {
            gram: r(&coarse.gram, &fine.gram),
            omega: std::array::from_fn(|k| r(&coarse.omega[k], &fine.omega[k])),
            structures: std::array::from_fn(|k| r(&coarse.structures[k], &fine.structures[k])),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub grid: usize,
    /// Step of the central differences along coordinate directions.
    pub epsilon: f64,
    /// Combine `grid` and `2 grid` by Richardson extrapolation.
    pub extrapolate: bool,
    pub solver: SolverConfig,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { grid: 256, epsilon: 1e-4, extrapolate: true, solver: SolverConfig::default() }
    }
}

/// Final residuals of one solve or projection consumed by a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub label: String,
    #[serde(rename = "N")]
    pub grid: usize,
    pub real_residual: f64,
    pub complex_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slice_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_defect: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub point: ModuliPoint,
    pub grid: usize,
    pub extrapolated: bool,
    pub labels: Vec<String>,
    pub data: MetricData,
    pub residuals: Vec<ResidualRecord>,
}

impl MetricReport {
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.data.gram
    }

    pub fn omega(&self, q: Quaternion) -> &DMatrix<f64> {
        &self.data.omega[q as usize]
    }

    pub fn structure(&self, q: Quaternion) -> &DMatrix<f64> {
        &self.data.structures[q as usize]
    }

    /// `omega_2 + i omega_3`.
    pub fn omega_c(&self) -> DMatrix<C64> {
        let (w2, w3) = (&self.data.omega[1], &self.data.omega[2]);
        DMatrix::from_fn(w2.nrows(), w2.ncols(), |i, j| C64::new(w2[(i, j)], w3[(i, j)]))
    }
}

fn records(basis: &TangentBasis) -> Vec<ResidualRecord> {
    let grid = basis.grid();
    let rec = |label: String, c: &Certificate, rep: Option<&TangentRep>| ResidualRecord {
        label,
        grid,
        real_residual: c.real_residual,
        complex_residual: c.complex_residual,
        slice_residual: rep.map(|r| r.slice_residual),
        boundary_defect: rep.map(|r| r.boundary_defect),
    };
    let mut out = vec![rec("base".into(), &basis.base.certificate, None)];
    for r in &basis.reps {
        out.push(rec(format!("{}-", r.label), &r.certificates[0], None));
        out.push(rec(format!("{}+", r.label), &r.certificates[1], Some(r)));
    }
    out
}

/// Gram matrix and Kähler forms in the coordinate basis at `m`.
pub fn metric_report(spec: &GroupSpec, m: &ModuliPoint, cfg: &MetricConfig) -> Result<MetricReport> {
    let at = |grid: usize| -> Result<(MetricData, Vec<ResidualRecord>, Vec<String>)> {
        let basis = tangent_basis(spec, m, grid, cfg.epsilon, &cfg.solver)?;
        let data = MetricData::from_basis(spec, &basis, &cfg.solver)?;
        let labels = basis.reps.iter().map(|r| r.label.clone()).collect();
        Ok((data, records(&basis), labels))
    };
    let (coarse, mut residuals, labels) = at(cfg.grid)?;
    let data = if cfg.extrapolate {
        let (fine, more, _) = at(2 * cfg.grid)?;
        residuals.extend(more);
        MetricData::extrapolate(&coarse, &fine)
    } else {
        coarse
    };
    Ok(MetricReport { point: m.clone(), grid: cfg.grid, extrapolated: cfg.extrapolate, labels, data, residuals })
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Serialize)]
struct ReportJson<'a> {
    point: &'a ModuliPoint,
    #[serde(rename = "N")]
    grid: usize,
    extrapolated: bool,
    labels: &'a [String],
    gram: Vec<Vec<f64>>,
    omega1: Vec<Vec<f64>>,
    omega2: Vec<Vec<f64>>,
    omega3: Vec<Vec<f64>>,
    omega_c_re: Vec<Vec<f64>>,
    omega_c_im: Vec<Vec<f64>>,
    #[serde(rename = "I_hat")]
    i_hat: Vec<Vec<f64>>,
    #[serde(rename = "J_hat")]
    j_hat: Vec<Vec<f64>>,
    #[serde(rename = "K_hat")]
    k_hat: Vec<Vec<f64>>,
    residuals: &'a [ResidualRecord],
}

impl Serialize for MetricReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = &self.data;
        ReportJson {
            point: &self.point,
            grid: self.grid,
            extrapolated: self.extrapolated,
            labels: &self.labels,
            gram: rows(&d.gram),
            omega1: rows(&d.omega[0]),
            omega2: rows(&d.omega[1]),
            omega3: rows(&d.omega[2]),
            omega_c_re: rows(&d.omega[1]),
            omega_c_im: rows(&d.omega[2]),
            i_hat: rows(&d.structures[0]),
            j_hat: rows(&d.structures[1]),
            k_hat: rows(&d.structures[2]),
            residuals: &self.residuals,
        }
        .serialize(s)
    }
}

/// The holomorphic symplectic form of `T*G^c` on coordinate directions:
/// `-2 (<X_i, Z_j> - <X_j, Z_i> + <eta, [X_i, X_j]>)` with the complex
/// bilinear extension of the inner product.
pub fn canonical_omega_c(spec: &GroupSpec, m: &ModuliPoint) -> DMatrix<C64> {
    let dirs = coordinate_directions(spec);
    let ip = |x: &Matrix, y: &Matrix| spec.inner_complex_unchecked(x, y);
    let d = dirs.len();
    DMatrix::from_fn(d, d, |i, j| {
        let (a, b) = (&dirs[i], &dirs[j]);
        (ip(&a.log_u, &b.eta) - ip(&b.log_u, &a.eta) + ip(m.eta(), &(&a.log_u * &b.log_u - &b.log_u * &a.log_u)))
            * C64::new(-2.0, 0.0)
    })
}

/// Largest entrywise gap between the report's `omega_2 + i omega_3` and the
/// canonical form at the same point.
pub fn check_omega_c(spec: &GroupSpec, report: &MetricReport) -> Result<f64> {
    let canon = canonical_omega_c(spec, &report.point);
    let got = report.omega_c();
    if canon.shape() != got.shape() {
        return Err(Error::DimensionMismatch { expected: canon.nrows(), found: got.nrows() });
    }
    Ok(canon.iter().zip(got.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).norm())))
}

/// `(g_L U g_R^{-1}, g_R eta g_R^{-1})`.
pub fn act_gxg(spec: &GroupSpec, gl: &Matrix, gr: &Matrix, m: &ModuliPoint) -> Result<ModuliPoint> {
    for g in [gl, gr] {
        spec.check_role(g, Role::CompactGroup, 1e-10)?;
    }
    m.check(spec)?;
    let gr_inv = gr.adjoint();
    Ok(ModuliPoint::new_unchecked(gl * m.u() * &gr_inv, gr * m.eta() * &gr_inv))
}

pub fn check_rotation(r: &[[f64; 3]; 3]) -> Result<()> {
    let rm = nalgebra::Matrix3::from_fn(|i, j| r[i][j]);
    let defect = (rm.transpose() * rm - nalgebra::Matrix3::identity()).abs().max();
    let det = rm.determinant();
    if !(defect <= 1e-10 && (det - 1.0).abs() <= 1e-10) {
        return Err(Error::NotRotation(defect.max((det - 1.0).abs())));
    }
    Ok(())
}

/// `A_0` fixed, `(A_1, A_2, A_3) -> R (A_1, A_2, A_3)`.
pub fn act_so3(r: &[[f64; 3]; 3], a: &NahmQuadruple) -> Result<NahmQuadruple> {
    check_rotation(r)?;
    let [a0, a1, a2, a3] = a.components();
    let parts = [a1, a2, a3];
    let mix = |i: usize| -> Result<Path> {
        let mut out = parts[0].scale(C64::new(r[i][0], 0.0));
        for j in 1..3 {
            out = out.add(&parts[j].scale(C64::new(r[i][j], 0.0)))?;
        }
        Ok(out)
    };
    NahmQuadruple::new([a0.clone(), mix(0)?, mix(1)?, mix(2)?])
}

/// Jacobian of a map of `M` at `m` in the coordinate charts centred at `m`
/// and at its image, by central differences.
pub fn chart_jacobian(
    spec: &GroupSpec,
    m: &ModuliPoint,
    eps: f64,
    map: impl Fn(&ModuliPoint) -> Result<ModuliPoint> + Sync,
) -> Result<(ModuliPoint, DMatrix<f64>)> {
    let image = map(m)?;
    let dirs = coordinate_directions(spec);
    let columns = dirs
        .par_iter()
        .map(|d| {
            let plus = image.chart_coordinates(spec, &map(&m.displaced(d, eps))?)?;
            let minus = image.chart_coordinates(spec, &map(&m.displaced(d, -eps))?)?;
            Ok(plus.iter().zip(&minus).map(|(p, q)| (p - q) / (2.0 * eps)).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let dim = dirs.len();
    Ok((image, DMatrix::from_fn(dim, dim, |i, j| columns[j][i])))
}

/// Sorted eigenvalues of a symmetric matrix.
pub fn spectrum(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// How far the `eta = 0` locus is from being closed under each complex structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocusReport {
    /// Largest relative distance of `P(Q a)` from the span of the locus
    /// representatives, over the locus directions `a`, for `Q = I, J, K`.
    pub defects: [f64; 3],
    pub tolerance: f64,
    /// Whether the locus is `I`-complex within `tolerance`.
    pub complex: bool,
}

/// Tangent directions of the locus `eta = 0` are the `U` directions; check
/// whether each complex structure maps their span into itself.
pub fn check_kahler_locus(
    spec: &GroupSpec,
    m: &ModuliPoint,
    grid: usize,
    eps: f64,
    cfg: &SolverConfig,
    tolerance: f64,
) -> Result<LocusReport> {
    let off = m.eta().norm();
    if off > KERNEL_TOL {
        return Err(Error::NotOnLocus(off));
    }
    let dirs: Vec<Direction> = coordinate_directions(spec).into_iter().take(2 * spec.dim()).collect();
    let labels = dirs.iter().map(|d| d.label.clone()).collect();
    let basis = tangent_basis_along(spec, m, grid, eps, cfg, labels, |i, t| m.displaced(&dirs[i], t))?;
    let reps: Vec<&NahmQuadruple> = basis.reps.iter().map(|r| &r.a).collect();
    let inner = |a: &NahmQuadruple, b: &NahmQuadruple| l2_inner_unchecked(spec, a, b);
    let dim = reps.len();
    let gram = DMatrix::from_fn(dim, dim, |i, j| inner(reps[i], reps[j]));
    let chol = nalgebra::Cholesky::new(gram).ok_or(Error::DegenerateBasis(f64::INFINITY))?;
    let slice_cfg = SolverConfig { residual_tol: 10.0 * cfg.residual_tol, ..*cfg };
    let mut defects = [0.0; 3];
    for (k, q) in Quaternion::ALL.into_iter().enumerate() {
        for a in &reps {
            let v = basis.projector.project(&quaternion_act(q, a), &slice_cfg)?.tangent;
            let rhs = nalgebra::DVector::from_fn(dim, |i, _| inner(reps[i], &v));
            let coef = chol.solve(&rhs);
            let mut r = v.clone();
            for (i, c) in coef.iter().enumerate() {
                r = r.axpy(-c, reps[i])?;
            }
            let rel = inner(&r, &r).max(0.0).sqrt() / inner(&v, &v).sqrt();
            defects[k] = f64::max(defects[k], rel);
        }
    }
    Ok(LocusReport { defects, tolerance, complex: defects[0] <= tolerance })
}

/// Exterior derivatives of the three Kähler forms at `m`, from the forms in
/// the chart `t -> (U expm(sum t_i X_i), eta + sum t_i Z_i)` at `+-delta`
/// along each axis. Returns the largest component of each `d omega_k`.
pub fn closedness_defect(
    spec: &GroupSpec,
    m: &ModuliPoint,
    grid: usize,
    eps: f64,
    delta: f64,
    cfg: &SolverConfig,
) -> Result<[f64; 3]> {
    let dirs = coordinate_directions(spec);
    let dim = dirs.len();
    let chart = |t: &[f64]| -> ModuliPoint {
        let mut x = spec.zero();
        let mut z = spec.zero();
        for (d, ti) in dirs.iter().zip(t) {
            x += &d.log_u * C64::new(*ti, 0.0);
            z += &d.eta * C64::new(*ti, 0.0);
        }
        ModuliPoint::new_unchecked(m.u() * expm(&x), m.eta() + z)
    };
    let forms_at = |t: Vec<f64>| -> Result<[DMatrix<f64>; 3]> {
        let labels = dirs.iter().map(|d| d.label.clone()).collect();
        let basis = tangent_basis_along(spec, &chart(&t), grid, eps, cfg, labels, |i, s| {
            let mut ts = t.clone();
            ts[i] += s;
            chart(&ts)
        })?;
        let reps: Vec<&NahmQuadruple> = basis.reps.iter().map(|r| &r.a).collect();
        Ok(Quaternion::ALL.map(|q| {
            let moved: Vec<NahmQuadruple> = reps.iter().map(|a| quaternion_act(q, a)).collect();
            DMatrix::from_fn(dim, dim, |i, j| l2_inner_unchecked(spec, &moved[i], reps[j]))
        }))
    };
    let derivs = (0..dim)
        .map(|l| {
            let mut tp = vec![0.0; dim];
            let mut tm = vec![0.0; dim];
            tp[l] = delta;
            tm[l] = -delta;
            let (p, q) = (forms_at(tp)?, forms_at(tm)?);
            Ok(std::array::from_fn::<DMatrix<f64>, 3, _>(|k| (&p[k] - &q[k]) / (2.0 * delta)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = [0.0f64; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        for i in 0..dim {
            for j in (i + 1)..dim {
                for l in (j + 1)..dim {
                    let d = derivs[i][k][(j, l)] + derivs[j][k][(l, i)] + derivs[l][k][(i, j)];
                    *slot = slot.max(d.abs());
                }
            }
        }
    }
    Ok(out)
}
