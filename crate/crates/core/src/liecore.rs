//! Matrix Lie group kernel for U(n)/SU(n), their complexifications
//! GL(n,C)/SL(n,C) and the corresponding Lie algebras.
//!
//! Elements of every role share one representation, an `n x n` complex
//! matrix. The role only decides which invariant a value is expected to
//! satisfy:
//!
//! | role              | set     | invariant                 |
//! |-------------------|---------|---------------------------|
//! | compact algebra   | g       | X + X^dagger = 0          |
//! | complex algebra   | g^c     | none (trace 0 for SU)     |
//! | compact group     | G       | u u^dagger = 1            |
//! | complex group     | G^c     | invertible (det 1 for SU) |
//!
//! The invariant inner product on g is `<X, Y> = -c tr(XY)`; its complex
//! bilinear extension to g^c is the same formula without taking a real part.

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type Matrix = DMatrix<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Kernel-level tolerance used when checking role invariants.
pub const KERNEL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    U,
    SU,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    CompactAlgebra,
    ComplexAlgebra,
    CompactGroup,
    ComplexGroup,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::CompactAlgebra => "compact-algebra",
            Role::ComplexAlgebra => "complex-algebra",
            Role::CompactGroup => "compact-group",
            Role::ComplexGroup => "complex-group",
        }
    }

    pub fn is_group(self) -> bool {
        matches!(self, Role::CompactGroup | Role::ComplexGroup)
    }
}

/// The compact group together with the normalization of its inner product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub family: Family,
    pub n: usize,
    /// Normalization constant `c` in `<X, Y> = -c tr(XY)`.
    pub c: f64,
}

impl GroupSpec {
    pub fn new(family: Family, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("group dimension must be positive".into()));
        }
        if family == Family::SU && n < 2 {
            return Err(Error::Invalid("SU(n) requires n >= 2".into()));
        }
        Ok(Self { family, n, c: 1.0 })
    }

    pub fn u1() -> Self {
        Self { family: Family::U, n: 1, c: 1.0 }
    }

    pub fn su2() -> Self {
        Self { family: Family::SU, n: 2, c: 1.0 }
    }

    pub fn with_normalization(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Invalid(format!("normalization must be positive, got {c}")));
        }
        self.c = c;
        Ok(self)
    }

    /// Real dimension of g.
    pub fn dim(&self) -> usize {
        match self.family {
            Family::U => self.n * self.n,
            Family::SU => self.n * self.n - 1,
        }
    }

    pub fn label(&self) -> String {
        match (self.family, self.n) {
            (Family::U, 1) => "u1".into(),
            (Family::SU, 2) => "su2".into(),
            (Family::U, n) => format!("un:{n}"),
            (Family::SU, n) => format!("sun:{n}"),
        }
    }

    pub fn zero(&self) -> Matrix {
        Matrix::zeros(self.n, self.n)
    }

    pub fn identity(&self) -> Matrix {
        Matrix::identity(self.n, self.n)
    }

    /// Basis of g, orthonormal for `inner_real`.
    ///
    /// Built from generalized Gell-Mann matrices multiplied by `i`:
    /// off-diagonal symmetric and antisymmetric pairs first, then the
    /// traceless diagonal ones, then (for U(n)) the central element.
    pub fn algebra_basis(&self) -> Vec<Matrix> {
        let n = self.n;
        let mut herm = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in (j + 1)..n {
                let mut s = Matrix::zeros(n, n);
                s[(j, k)] = C64::new(1.0, 0.0);
                s[(k, j)] = C64::new(1.0, 0.0);
                herm.push(s);
                let mut a = Matrix::zeros(n, n);
                a[(j, k)] = C64::new(0.0, -1.0);
                a[(k, j)] = C64::new(0.0, 1.0);
                herm.push(a);
            }
        }
        for l in 1..n {
            let mut d = Matrix::zeros(n, n);
            for j in 0..l {
                d[(j, j)] = C64::new(1.0, 0.0);
            }
            d[(l, l)] = C64::new(-(l as f64), 0.0);
            herm.push(d);
        }
        if self.family == Family::U {
            herm.push(Matrix::identity(n, n));
        }
        herm.into_iter()
            .map(|h| {
                let x = h.map(|z| z * I);
                let norm = self.inner_real_unchecked(&x, &x).sqrt();
                x / C64::new(norm, 0.0)
            })
            .collect()
    }

    /// Real basis of g^c: the g basis followed by `i` times the g basis.
    pub fn complex_algebra_real_basis(&self) -> Vec<Matrix> {
        let basis = self.algebra_basis();
        let mut out = basis.clone();
        out.extend(basis.iter().map(|x| x * I));
        out
    }

    /// Coordinates of `x` in the real basis of g (x assumed anti-Hermitian).
    pub fn algebra_coords(&self, x: &Matrix) -> Vec<f64> {
        self.algebra_basis()
            .iter()
            .map(|e| self.inner_real_unchecked(e, x))
            .collect()
    }

    /// `-c tr(XY)` restricted to the real part. Dimensions are not checked.
    pub fn inner_real_unchecked(&self, x: &Matrix, y: &Matrix) -> f64 {
        -self.c * trace_product(x, y).re
    }

    pub fn inner_real(&self, x: &Matrix, y: &Matrix) -> Result<f64> {
        check_square_pair(x, y)?;
        Ok(self.inner_real_unchecked(x, y))
    }

    pub fn inner_complex(&self, x: &Matrix, y: &Matrix) -> Result<C64> {
        check_square_pair(x, y)?;
        Ok(self.inner_complex_unchecked(x, y))
    }

    pub fn inner_complex_unchecked(&self, x: &Matrix, y: &Matrix) -> C64 {
        -trace_product(x, y) * self.c
    }

    /// Squared pointwise norm `c |X|_F^2`; agrees with `inner_real(X, X)` on g.
    pub fn norm_sq(&self, x: &Matrix) -> f64 {
        self.c * x.norm_squared()
    }

    /// Size of the violation of the invariant attached to `role`.
    pub fn role_defect(&self, x: &Matrix, role: Role) -> f64 {
        if x.nrows() != self.n || x.ncols() != self.n {
            return f64::INFINITY;
        }
        let trace_part = |x: &Matrix| -> f64 {
            if self.family == Family::SU {
                x.trace().norm()
            } else {
                0.0
            }
        };
        match role {
            Role::CompactAlgebra => (x + x.adjoint()).norm().max(trace_part(x)),
            Role::ComplexAlgebra => trace_part(x),
            Role::CompactGroup => {
                let d = (x * x.adjoint() - self.identity()).norm();
                if self.family == Family::SU {
                    d.max((det(x) - C64::new(1.0, 0.0)).norm())
                } else {
                    d
                }
            }
            Role::ComplexGroup => {
                let dt = det(x);
                if self.family == Family::SU {
                    (dt - C64::new(1.0, 0.0)).norm()
                } else if dt.norm() == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
        }
    }

    pub fn check_role(&self, x: &Matrix, role: Role, tol: f64) -> Result<()> {
        if x.nrows() != x.ncols() {
            return Err(Error::Invalid(format!(
                "{} element must be square, got {}x{}",
                role.name(),
                x.nrows(),
                x.ncols()
            )));
        }
        if x.nrows() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.nrows() });
        }
        let defect = self.role_defect(x, role);
        if defect > tol * (1.0 + x.norm()) {
            return Err(Error::RoleViolation { role: role.name(), defect });
        }
        Ok(())
    }
}

fn check_square_pair(x: &Matrix, y: &Matrix) -> Result<()> {
    if x.nrows() != x.ncols() {
        return Err(Error::Invalid("matrix must be square".into()));
    }
    if y.shape() != x.shape() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), found: y.nrows() });
    }
    Ok(())
}

fn trace_product(x: &Matrix, y: &Matrix) -> C64 {
    // tr(XY) = sum_ij X_ij Y_ji
    let n = x.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += x[(i, j)] * y[(j, i)];
        }
    }
    acc
}

/// Parses the labels produced by [`GroupSpec::label`]: `u1`, `su2`,
/// `un:<n>` and `sun:<n>`.
impl FromStr for GroupSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("unknown group '{s}' (expected u1, su2, un:<n> or sun:<n>)"));
        match s.trim().to_ascii_lowercase().as_str() {
            "u1" => Ok(Self::u1()),
            "su2" => Ok(Self::su2()),
            t => {
                let (family, n) = t.split_once(':').ok_or_else(bad)?;
                let n: usize = n.parse().map_err(|_| bad())?;
                match family {
                    "un" => Self::new(Family::U, n),
                    "sun" => Self::new(Family::SU, n),
                    _ => Err(bad()),
                }
            }
        }
    }
}


pub fn det(x: &Matrix) -> C64 {
    x.clone().lu().determinant()
}

/// `XY - YX`.
pub fn bracket(x: &Matrix, y: &Matrix) -> Result<Matrix> {
    check_square_pair(x, y)?;
    Ok(commutator(x, y))
}

pub(crate) fn commutator(x: &Matrix, y: &Matrix) -> Matrix {
    x * y - y * x
}

/// Conjugate transpose; the `*` of the compact real form.
pub fn adjoint_star(x: &Matrix) -> Matrix {
    x.adjoint()
}

pub fn inverse(x: &Matrix) -> Result<Matrix> {
    x.clone().try_inverse().ok_or(Error::Singular)
}

/// `g X g^{-1}`.
pub fn conjugate(g: &Matrix, x: &Matrix) -> Result<Matrix> {
    Ok(g * x * inverse(g)?)
}

/// Matrix exponential by scaling and squaring with a degree-13 Pade kernel.
pub fn expm(x: &Matrix) -> Matrix {
    x.clone().exp()
}

/// Principal matrix logarithm.
///
/// The matrix is reduced to complex Schur form `Q T Q^dagger`; the
/// triangular factor is brought close to the identity by repeated principal
/// square roots, after which `log(I + X)` is summed from the series
/// `2 atanh(X (2I + X)^{-1})`.
pub fn logm_principal(u: &Matrix) -> Result<Matrix> {
    if u.nrows() != u.ncols() {
        return Err(Error::Invalid("logarithm of a non-square matrix".into()));
    }
    let n = u.nrows();
    let schur = Schur::try_new(u.clone(), f64::EPSILON, 0).ok_or(Error::Singular)?;
    let (q, mut t) = schur.unpack();
    // Schur leaves rounding-level entries below the diagonal.
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    let scale = t.diagonal().iter().fold(0.0f64, |m, z| m.max(z.norm()));
    for k in 0..n {
        let lam = t[(k, k)];
        if lam.norm() <= f64::EPSILON * scale.max(f64::MIN_POSITIVE) || lam.norm() == 0.0 {
            return Err(Error::Singular);
        }
        if lam.re < 0.0 && lam.im.abs() <= 1e-12 * lam.norm() {
            return Err(Error::BranchCut { re: lam.re, im: lam.im });
        }
    }

    let ident = Matrix::identity(n, n);
    let mut squarings = 0u32;
    while (&t - &ident).lp_norm(1) > 0.25 {
        t = sqrtm_upper(&t);
        squarings += 1;
        if squarings > 64 {
            return Err(Error::Invalid("logarithm scaling did not converge".into()));
        }
    }
    let x = &t - &ident;
    let denom = (&ident * C64::new(2.0, 0.0) + &x)
        .try_inverse()
        .ok_or(Error::Singular)?;
    let z = &x * denom;
    let z2 = &z * &z;
    let mut term = z.clone();
    let mut sum = z.clone();
    for k in 1..200 {
        term = &term * &z2;
        let contrib = &term / C64::new((2 * k + 1) as f64, 0.0);
        sum += &contrib;
        if contrib.norm() <= 1e-18 * sum.norm().max(1e-300) {
            break;
        }
    }
    let log_t = sum * C64::new(2.0 * 2f64.powi(squarings as i32), 0.0);
    Ok(&q * log_t * q.adjoint())
}

/// Principal square root of an upper-triangular matrix.
fn sqrtm_upper(t: &Matrix) -> Matrix {
    let n = t.nrows();
    let mut r = Matrix::zeros(n, n);
    for j in 0..n {
        r[(j, j)] = t[(j, j)].sqrt();
        for i in (0..j).rev() {
            let mut s = t[(i, j)];
            for k in (i + 1)..j {
                s -= r[(i, k)] * r[(k, j)];
            }
            r[(i, j)] = s / (r[(i, i)] + r[(j, j)]);
        }
    }
    r
}

/// Apply a real function to a Hermitian matrix through its eigendecomposition.
pub fn hermitian_fn(h: &Matrix, f: impl Fn(f64) -> f64) -> Matrix {
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let v = &eig.eigenvectors;
    let d = Matrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(f(l), 0.0)));
    v * d * v.adjoint()
}

pub fn hermitian_part(x: &Matrix) -> Matrix {
    (x + x.adjoint()) * C64::new(0.5, 0.0)
}

pub fn anti_hermitian_part(x: &Matrix) -> Matrix {
    (x - x.adjoint()) * C64::new(0.5, 0.0)
}

/// Polar factors of a complex group element: `U = unitary * expm(i xi)`.
#[derive(Debug, Clone)]
pub struct Polar {
    pub unitary: Matrix,
    /// The positive factor `P = (U^dagger U)^{1/2}`.
    pub positive: Matrix,
    /// Anti-Hermitian `xi` with `P = expm(i xi)`.
    pub xi: Matrix,
}

impl Polar {
    /// Hermitian logarithm of the positive factor, `i xi`.
    pub fn log_positive(&self) -> Matrix {
        &self.xi * I
    }
}

/// Polar decomposition by the scaled Newton iteration `X <- (gX + (gX)^{-dagger}) / 2`.
pub fn polar_decompose(u: &Matrix) -> Result<Polar> {
    if u.nrows() != u.ncols() {
        return Err(Error::Invalid("polar decomposition of a non-square matrix".into()));
    }
    let mut x = u.clone();
    for _ in 0..100 {
        let xinv = inverse(&x)?;
        let gamma = (xinv.norm() / x.norm()).sqrt();
        let next = (&x * C64::new(gamma, 0.0) + xinv.adjoint() * C64::new(1.0 / gamma, 0.0))
            * C64::new(0.5, 0.0);
        let change = (&next - &x).norm();
        x = next;
        if change <= 1e-15 * x.norm() {
            break;
        }
    }
    // One unscaled step polishes the last digits.
    let x = (&x + inverse(&x)?.adjoint()) * C64::new(0.5, 0.0);
    let positive = hermitian_part(&(x.adjoint() * u));
    let log_p = hermitian_fn(&positive, f64::ln);
    let xi = log_p * (-I);
    Ok(Polar { unitary: x, positive, xi })
}

/// Matrix of `X -> [B, X]` acting on column-major vectorizations.
pub(crate) fn ad_matrix(b: &Matrix) -> Matrix {
    let n = b.nrows();
    let id = Matrix::identity(n, n);
    id.kronecker(b) - b.transpose().kronecker(&id)
}

pub(crate) fn vec_of(x: &Matrix) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_column_slice(x.as_slice())
}

pub(crate) fn mat_of(v: &nalgebra::DVector<C64>, n: usize) -> Matrix {
    Matrix::from_column_slice(n, n, v.as_slice())
}

/// Max-entry distance, handy for tolerance checks.
pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}
