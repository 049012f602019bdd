//! Nahm data on [0, 1]: quadruples `(A_0, .., A_3)` of g-valued paths, their
//! complex split `(alpha, beta)`, the residuals of the real form and of the
//! complex/real split, gauge actions and the flat quaternionic structure.
//!
//! The residual of the real form uses the cyclic convention
//!
//! ```text
//! r_i = dA_i/ds + [A_0, A_i] + [A_j, A_k],   (i, j, k) cyclic in (1, 2, 3)
//! ```
//!
//! which is the unique choice for which `dbeta/ds + 2[alpha, beta] = (r_2 + i r_3)/2`
//! and `d(alpha + alpha^*)/ds + 2([alpha, alpha^*] + [beta, beta^*]) = i r_1`.

mod curve;
mod path;

use serde::{Deserialize, Serialize};

pub use curve::GroupCurve;
pub use path::{matrix_to_pairs, pairs_to_matrix, trapezoid, Path, MIN_GRID};

use crate::error::{Error, Result};
use crate::liecore::{
    anti_hermitian_part, commutator, det, hermitian_part, inverse, logm_principal, polar_decompose, GroupSpec,
    Matrix, Role, C64, I,
};
use crate::moduli::ModuliPoint;

/// Four g-valued paths on a common grid. Also used for tangent tuples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NahmQuadruple {
    #[serde(rename = "A")]
    components: [Path; 4],
}

impl NahmQuadruple {
    pub fn new(components: [Path; 4]) -> Result<Self> {
        for p in &components[1..] {
            components[0].check_compatible(p)?;
        }
        Ok(Self { components })
    }

    pub fn zeros(grid: usize, n: usize) -> Result<Self> {
        let z = Path::zeros(grid, n, Role::CompactAlgebra)?;
        Ok(Self { components: [z.clone(), z.clone(), z.clone(), z] })
    }

    pub fn constant(grid: usize, values: [&Matrix; 4]) -> Result<Self> {
        let mk = |m: &Matrix| Path::constant(grid, Role::CompactAlgebra, m);
        Self::new([mk(values[0])?, mk(values[1])?, mk(values[2])?, mk(values[3])?])
    }

    pub fn components(&self) -> &[Path; 4] {
        &self.components
    }

    pub fn into_components(self) -> [Path; 4] {
        self.components
    }

    pub fn component(&self, i: usize) -> &Path {
        &self.components[i]
    }

    pub fn grid(&self) -> usize {
        self.components[0].grid()
    }

    pub fn n(&self) -> usize {
        self.components[0].n()
    }

    /// Largest anti-Hermitian (and trace, for SU) defect over all samples.
    pub fn role_defect(&self, spec: &GroupSpec) -> f64 {
        self.components
            .iter()
            .flat_map(|p| p.samples())
            .fold(0.0, |m, x| m.max(spec.role_defect(x, Role::CompactAlgebra)))
    }

    pub fn validate(&self, spec: &GroupSpec, tol: f64) -> Result<()> {
        if self.n() != spec.n {
            return Err(Error::DimensionMismatch { expected: spec.n, found: self.n() });
        }
        for p in &self.components {
            p.clone().with_role(Role::CompactAlgebra).check_role(spec, tol)?;
        }
        Ok(())
    }

    fn zip(&self, other: &Self, f: impl Fn(&Matrix, &Matrix) -> Matrix) -> Result<Self> {
        let c = |i: usize| self.components[i].zip_map(&other.components[i], Role::CompactAlgebra, &f);
        Ok(Self { components: [c(0)?, c(1)?, c(2)?, c(3)?] })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Self {
        let f = C64::new(factor, 0.0);
        Self { components: self.components.clone().map(|p| p.scale(f)) }
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &Self) -> Result<Self> {
        let f = C64::new(factor, 0.0);
        self.zip(other, |a, b| a + b * f)
    }

    /// Apply the same samplewise map to every component.
    pub fn map(&self, f: impl Fn(usize, &Matrix) -> Matrix) -> Self {
        Self { components: self.components.clone().map(|p| p.map_indexed(Role::CompactAlgebra, &f)) }
    }

    pub fn l2_norm(&self, spec: &GroupSpec) -> f64 {
        l2_inner_unchecked(spec, self, self).max(0.0).sqrt()
    }
}

/// `alpha = (A_0 + i A_1)/2`, `beta = (A_2 + i A_3)/2`, both g^c-valued.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexPair {
    pub alpha: Path,
    pub beta: Path,
}

impl ComplexPair {
    pub fn new(alpha: Path, beta: Path) -> Result<Self> {
        alpha.check_compatible(&beta)?;
        Ok(Self { alpha, beta })
    }

    pub fn grid(&self) -> usize {
        self.alpha.grid()
    }

    pub fn n(&self) -> usize {
        self.alpha.n()
    }
}

pub fn quadruple_to_pair(a: &NahmQuadruple) -> ComplexPair {
    let half = C64::new(0.5, 0.0);
    let [a0, a1, a2, a3] = a.components();
    let alpha = a0.zip_map(a1, Role::ComplexAlgebra, |x, y| (x + y * I) * half).expect("compatible");
    let beta = a2.zip_map(a3, Role::ComplexAlgebra, |x, y| (x + y * I) * half).expect("compatible");
    ComplexPair { alpha, beta }
}

/// Inverse of [`quadruple_to_pair`]: `A_0 = alpha - alpha^dagger`,
/// `A_1 = -i (alpha + alpha^dagger)`, and likewise for `beta`.
pub fn pair_to_quadruple(p: &ComplexPair) -> NahmQuadruple {
    let re = |x: &Matrix| x - x.adjoint();
    let im = |x: &Matrix| (x + x.adjoint()) * (-I);
    let a0 = p.alpha.map(Role::CompactAlgebra, re);
    let a1 = p.alpha.map(Role::CompactAlgebra, im);
    let a2 = p.beta.map(Role::CompactAlgebra, re);
    let a3 = p.beta.map(Role::CompactAlgebra, im);
    NahmQuadruple { components: [a0, a1, a2, a3] }
}

/// The three residuals `r_i = dA_i/ds + [A_0, A_i] + [A_j, A_k]`.
pub fn nahm_residual(a: &NahmQuadruple) -> [Path; 3] {
    let [a0, a1, a2, a3] = a.components();
    let d = [a1.derivative(), a2.derivative(), a3.derivative()];
    let comps = [a1, a2, a3];
    let mut out: Vec<Path> = Vec::with_capacity(3);
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let r = d[i].map_indexed(Role::CompactAlgebra, |m, di| {
            di + commutator(a0.at(m), comps[i].at(m)) + commutator(comps[j].at(m), comps[k].at(m))
        });
        out.push(r);
    }
    let [r1, r2, r3]: [Path; 3] = out.try_into().expect("three residuals");
    [r1, r2, r3]
}

/// `sqrt(int sum_i <r_i, r_i> ds)` with trapezoid weights.
pub fn residual_l2(spec: &GroupSpec, r: &[Path]) -> f64 {
    let grid = r[0].grid();
    trapezoid(grid, |k| r.iter().map(|p| spec.norm_sq(p.at(k))).sum()).sqrt()
}

/// `dbeta/ds + 2[alpha, beta]`.
pub fn complex_residual(p: &ComplexPair) -> Path {
    let db = p.beta.derivative();
    db.map_indexed(Role::ComplexAlgebra, |k, d| {
        d + commutator(p.alpha.at(k), p.beta.at(k)) * C64::new(2.0, 0.0)
    })
}

/// `d(alpha + alpha^*)/ds + 2([alpha, alpha^*] + [beta, beta^*])`; Hermitian samplewise.
pub fn real_residual(p: &ComplexPair) -> Path {
    let herm = p.alpha.map(Role::ComplexAlgebra, |a| a + a.adjoint());
    let d = herm.derivative();
    d.map_indexed(Role::ComplexAlgebra, |k, d| {
        let a = p.alpha.at(k);
        let b = p.beta.at(k);
        let br = commutator(a, &a.adjoint()) + commutator(b, &b.adjoint());
        d + br * C64::new(2.0, 0.0)
    })
}

/// Output of [`generate_from_moduli`]: the complex-equation solution and
/// the closed-form path `u` it was built from.
#[derive(Debug, Clone)]
pub struct Generated {
    pub pair: ComplexPair,
    pub path: GroupCurve,
}

/// The polar-interpolation path `u(s) = expm(s L) expm(s H)` with
/// `U = expm(L) expm(H)`, `L` anti-Hermitian, `H` Hermitian.
pub fn polar_path(u_end: &Matrix) -> Result<GroupCurve> {
    let polar = polar_decompose(u_end)?;
    let l = anti_hermitian_part(&logm_principal(&polar.unitary)?);
    let h = hermitian_part(&polar.log_positive());
    Ok(GroupCurve::product(vec![l, h], u_end.nrows()))
}

/// Complex-equation solution `alpha = u (du^{-1}/ds)/2`, `beta = u eta u^{-1}`
/// along the polar-interpolation path from `1` to `U`.
pub fn generate_from_moduli(m: &ModuliPoint, grid: usize) -> Result<Generated> {
    let curve = polar_path(m.u())?;
    let pair = complex_solution_along(&curve, m.eta(), grid)?;
    Ok(Generated { pair, path: curve })
}

/// `(alpha, beta)` for an arbitrary closed-form path `u` with `u(0) = 1`.
pub fn complex_solution_along(curve: &GroupCurve, eta: &Matrix, grid: usize) -> Result<ComplexPair> {
    let half = C64::new(-0.5, 0.0);
    let alpha = Path::from_fn(grid, Role::ComplexAlgebra, |s| curve.right_log_derivative(s) * half)?;
    let vals = (0..=grid)
        .map(|k| {
            let u = curve.value(k as f64 / grid as f64);
            Ok(&u * eta * inverse(&u)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let beta = Path::new(vals, Role::ComplexAlgebra)?;
    ComplexPair::new(alpha, beta)
}

/// A gauge transformation `g: [0, 1] -> G` or `G^c` together with the
/// samples of `g^{-1}` and `d(g^{-1})/ds`.
#[derive(Debug, Clone)]
pub struct GaugeTransform {
    g: Path,
    g_inv: Path,
    d_g_inv: Path,
}

impl GaugeTransform {
    /// Derivative of the inverse by [`Path::derivative`].
    pub fn from_samples(g: Path) -> Result<Self> {
        if !g.role().is_group() {
            return Err(Error::Invalid(format!("gauge transform needs a group role, got {}", g.role().name())));
        }
        let inv = g.samples().iter().map(inverse).collect::<Result<Vec<_>>>()?;
        let g_inv = Path::new(inv, g.role())?;
        Ok(Self::from_parts(g, g_inv))
    }

    /// Pair of mutually inverse sample paths; the inverse is differentiated by the stencils.
    pub(crate) fn from_parts(g: Path, g_inv: Path) -> Self {
        let d_g_inv = trace_consistent_derivative(&g, &g_inv);
        Self { g, g_inv, d_g_inv }
    }

    /// Exact derivative from the closed form.
    pub fn from_curve(curve: &GroupCurve, grid: usize, role: Role) -> Result<Self> {
        Ok(Self {
            g: curve.sample(grid, role)?,
            g_inv: curve.sample_inverse(grid, role)?,
            d_g_inv: curve.sample_inverse_derivative(grid, role)?,
        })
    }

    pub fn identity(grid: usize, n: usize, role: Role) -> Result<Self> {
        let id = Path::constant(grid, role, &Matrix::identity(n, n))?;
        let zero = Path::zeros(grid, n, role)?;
        Ok(Self { g: id.clone(), g_inv: id, d_g_inv: zero })
    }

    pub fn path(&self) -> &Path {
        &self.g
    }

    pub fn inverse_path(&self) -> &Path {
        &self.g_inv
    }

    pub fn grid(&self) -> usize {
        self.g.grid()
    }

    /// Distance of the endpoint values from the identity.
    pub fn endpoint_defect(&self) -> f64 {
        let id = Matrix::identity(self.g.n(), self.g.n());
        (self.g.first() - &id).norm().max((self.g.last() - &id).norm())
    }

    /// Membership in the based group (`g(0) = g(1) = 1`).
    pub fn is_based(&self, tol: f64) -> bool {
        self.endpoint_defect() <= tol
    }

    /// `g(s) d(g^{-1})/ds` at node k.
    pub fn g_dginv(&self, k: usize) -> Matrix {
        self.g.at(k) * self.d_g_inv.at(k)
    }

    /// Pointwise product `self * other` with the product rule for the inverse derivative.
    pub fn compose(&self, other: &GaugeTransform) -> Result<GaugeTransform> {
        self.g.check_compatible(&other.g)?;
        let role = if self.g.role() == Role::CompactGroup && other.g.role() == Role::CompactGroup {
            Role::CompactGroup
        } else {
            Role::ComplexGroup
        };
        let g = self.g.zip_map(&other.g, role, |a, b| a * b)?;
        let g_inv = other.g_inv.zip_map(&self.g_inv, role, |a, b| a * b)?;
        let d_g_inv = Path::new(
            (0..=self.grid())
                .map(|k| other.d_g_inv.at(k) * self.g_inv.at(k) + other.g_inv.at(k) * self.d_g_inv.at(k))
                .collect(),
            role,
        )?;
        Ok(GaugeTransform { g, g_inv, d_g_inv })
    }
}

/// Stencil derivative of `g^{-1}`, shifted along `g^{-1}` so that
/// `tr(g d(g^{-1}))` equals the derivative of `log det g^{-1}` (zero when
/// `det g` is constant, as for SU(n)-valued paths).
fn trace_consistent_derivative(g: &Path, g_inv: &Path) -> Path {
    let n = g.n();
    let mut prev: Option<C64> = None;
    let logdet: Vec<Matrix> = g_inv
        .samples()
        .iter()
        .map(|x| {
            let mut l = det(x).ln();
            if let Some(p) = prev {
                let turns = ((p.im - l.im) / std::f64::consts::TAU).round();
                l.im += turns * std::f64::consts::TAU;
            }
            prev = Some(l);
            Matrix::from_element(1, 1, l)
        })
        .collect();
    let rate = Path::new(logdet, Role::ComplexAlgebra).map(|p| p.derivative());
    let raw = g_inv.derivative();
    let Ok(rate) = rate else { return raw };
    raw.map_indexed(raw.role(), |k, d| {
        let shift = (rate.at(k)[(0, 0)] - (g.at(k) * d).trace()) / C64::new(n as f64, 0.0);
        d + g_inv.at(k) * shift
    })
}

/// `A_0 -> g A_0 g^{-1} + g dg^{-1}/ds`, `A_i -> g A_i g^{-1}` for unitary `g`.
pub fn gauge_act_real(spec: &GroupSpec, g: &GaugeTransform, a: &NahmQuadruple) -> Result<NahmQuadruple> {
    if g.grid() != a.grid() {
        return Err(Error::DimensionMismatch { expected: a.grid(), found: g.grid() });
    }
    if g.g.n() != a.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), found: g.g.n() });
    }
    let defect = g.g.samples().iter().fold(0.0f64, |m, x| m.max(spec.role_defect(x, Role::CompactGroup)));
    if defect > 1e-8 {
        return Err(Error::RoleViolation { role: Role::CompactGroup.name(), defect });
    }
    let conj = |i: usize| {
        a.component(i).map_indexed(Role::CompactAlgebra, |k, x| g.g.at(k) * x * g.g_inv.at(k))
    };
    let a0 = a
        .component(0)
        .map_indexed(Role::CompactAlgebra, |k, x| g.g.at(k) * x * g.g_inv.at(k) + g.g_dginv(k));
    NahmQuadruple::new([a0, conj(1), conj(2), conj(3)])
}

/// `alpha -> g alpha g^{-1} + g (dg^{-1}/ds)/2`, `beta -> g beta g^{-1}`.
pub fn gauge_act_complex(g: &GaugeTransform, p: &ComplexPair) -> Result<ComplexPair> {
    if g.grid() != p.grid() {
        return Err(Error::DimensionMismatch { expected: p.grid(), found: g.grid() });
    }
    if g.g.n() != p.n() {
        return Err(Error::DimensionMismatch { expected: p.n(), found: g.g.n() });
    }
    let half = C64::new(0.5, 0.0);
    let alpha = p
        .alpha
        .map_indexed(Role::ComplexAlgebra, |k, x| g.g.at(k) * x * g.g_inv.at(k) + g.g_dginv(k) * half);
    let beta = p.beta.map_indexed(Role::ComplexAlgebra, |k, x| g.g.at(k) * x * g.g_inv.at(k));
    ComplexPair::new(alpha, beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quaternion {
    I,
    J,
    K,
}

impl Quaternion {
    pub const ALL: [Quaternion; 3] = [Quaternion::I, Quaternion::J, Quaternion::K];
}

/// The flat complex structures on path quadruples:
///
/// ```text
/// I(a0, a1, a2, a3) = (-a1,  a0, -a3,  a2)
/// J(a0, a1, a2, a3) = (-a2,  a3,  a0, -a1)
/// K(a0, a1, a2, a3) = (-a3, -a2,  a1,  a0)
/// ```
pub fn quaternion_act(which: Quaternion, a: &NahmQuadruple) -> NahmQuadruple {
    let [a0, a1, a2, a3] = a.components().clone();
    let neg = |p: Path| p.scale(C64::new(-1.0, 0.0));
    let components = match which {
        Quaternion::I => [neg(a1), a0, neg(a3), a2],
        Quaternion::J => [neg(a2), a3, a0, neg(a1)],
        Quaternion::K => [neg(a3), neg(a2), a1, a0],
    };
    NahmQuadruple { components }
}

/// `int_0^1 sum_i <a_i(s), b_i(s)> ds` with trapezoid weights.
pub fn l2_inner(spec: &GroupSpec, a: &NahmQuadruple, b: &NahmQuadruple) -> Result<f64> {
    a.component(0).check_compatible(b.component(0))?;
    if a.n() != spec.n {
        return Err(Error::DimensionMismatch { expected: spec.n, found: a.n() });
    }
    Ok(l2_inner_unchecked(spec, a, b))
}

pub(crate) fn l2_inner_unchecked(spec: &GroupSpec, a: &NahmQuadruple, b: &NahmQuadruple) -> f64 {
    trapezoid(a.grid(), |k| {
        (0..4).map(|i| spec.inner_real_unchecked(a.component(i).at(k), b.component(i).at(k))).sum()
    })
}
