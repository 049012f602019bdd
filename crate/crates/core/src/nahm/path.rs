//! Uniformly sampled matrix-valued paths on [0, 1].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liecore::{GroupSpec, Matrix, Role, C64};

/// Smallest grid on which the derivative stencils are defined.
pub const MIN_GRID: usize = 8;

/// Samples `f(s_k)` at the nodes `s_k = k / N`, `k = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    samples: Vec<Matrix>,
    role: Role,
}

impl Path {
    pub fn new(samples: Vec<Matrix>, role: Role) -> Result<Self> {
        if samples.len() < MIN_GRID + 1 {
            return Err(Error::GridTooSmall(samples.len().saturating_sub(1)));
        }
        let (r, c) = samples[0].shape();
        if r != c {
            return Err(Error::Invalid(format!("path samples must be square, got {r}x{c}")));
        }
        if let Some(bad) = samples.iter().find(|m| m.shape() != (r, c)) {
            return Err(Error::DimensionMismatch { expected: r, found: bad.nrows() });
        }
        Ok(Self { samples, role })
    }

    /// Sample `f` at every node.
    pub fn from_fn(grid: usize, role: Role, f: impl Fn(f64) -> Matrix) -> Result<Self> {
        if grid < MIN_GRID {
            return Err(Error::GridTooSmall(grid));
        }
        let h = 1.0 / grid as f64;
        Self::new((0..=grid).map(|k| f(k as f64 * h)).collect(), role)
    }

    pub fn constant(grid: usize, role: Role, value: &Matrix) -> Result<Self> {
        Self::from_fn(grid, role, |_| value.clone())
    }

    pub fn zeros(grid: usize, n: usize, role: Role) -> Result<Self> {
        Self::constant(grid, role, &Matrix::zeros(n, n))
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    /// Matrix dimension n.
    pub fn n(&self) -> usize {
        self.samples[0].nrows()
    }

    /// Grid resolution N (number of intervals).
    pub fn grid(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn step(&self) -> f64 {
        1.0 / self.grid() as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 / self.grid() as f64
    }

    pub fn samples(&self) -> &[Matrix] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Matrix> {
        self.samples
    }

    pub fn at(&self, k: usize) -> &Matrix {
        &self.samples[k]
    }

    pub fn first(&self) -> &Matrix {
        &self.samples[0]
    }

    pub fn last(&self) -> &Matrix {
        &self.samples[self.grid()]
    }

    pub fn map(&self, role: Role, f: impl Fn(&Matrix) -> Matrix) -> Path {
        Path { samples: self.samples.iter().map(f).collect(), role }
    }

    pub fn map_indexed(&self, role: Role, f: impl Fn(usize, &Matrix) -> Matrix) -> Path {
        Path { samples: self.samples.iter().enumerate().map(|(k, m)| f(k, m)).collect(), role }
    }

    pub fn zip_map(&self, other: &Path, role: Role, f: impl Fn(&Matrix, &Matrix) -> Matrix) -> Result<Path> {
        self.check_compatible(other)?;
        Ok(Path {
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| f(a, b)).collect(),
            role,
        })
    }

    pub fn check_compatible(&self, other: &Path) -> Result<()> {
        if self.grid() != other.grid() {
            return Err(Error::DimensionMismatch { expected: self.grid(), found: other.grid() });
        }
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: other.n() });
        }
        Ok(())
    }

    pub fn scale(&self, factor: C64) -> Path {
        self.map(self.role, |m| m * factor)
    }

    pub fn add(&self, other: &Path) -> Result<Path> {
        self.zip_map(other, self.role, |a, b| a + b)
    }

    pub fn sub(&self, other: &Path) -> Result<Path> {
        self.zip_map(other, self.role, |a, b| a - b)
    }

    /// Fourth-order finite-difference derivative. Central five-point stencils
    /// in the interior; at the two nodes nearest each end, one-sided six-point
    /// stencils whose leading error term equals the central one
    /// (`-h^4 f^(5) / 30`), so derivatives of derivatives stay fourth order
    /// up to the boundary.
    pub fn derivative(&self) -> Path {
        let f = &self.samples;
        let n = self.grid();
        let inv = C64::new(1.0 / self.step(), 0.0);
        // Weights act on differences from the first node, so constants map to exactly zero.
        let comb = |w: &[f64], idx: &[usize]| -> Matrix {
            let mut acc = Matrix::zeros(self.n(), self.n());
            for j in 1..w.len() {
                acc += (&f[idx[j]] - &f[idx[0]]) * C64::new(w[j], 0.0);
            }
            acc * inv
        };
        const END0: [f64; 6] = [-9.0 / 4.0, 29.0 / 6.0, -14.0 / 3.0, 3.0, -13.0 / 12.0, 1.0 / 6.0];
        const END1: [f64; 6] = [-1.0 / 6.0, -5.0 / 4.0, 7.0 / 3.0, -4.0 / 3.0, 0.5, -1.0 / 12.0];
        let neg = |w: [f64; 6]| w.map(|x| -x);
        let mut out = Vec::with_capacity(n + 1);
        out.push(comb(&END0, &[0, 1, 2, 3, 4, 5]));
        out.push(comb(&END1, &[0, 1, 2, 3, 4, 5]));
        for k in 2..=(n - 2) {
            out.push(comb(&[0.0, 2.0 / 3.0, -1.0 / 12.0, 1.0 / 12.0, -2.0 / 3.0], &[k, k + 1, k + 2, k - 2, k - 1]));
        }
        out.push(comb(&neg(END1), &[n, n - 1, n - 2, n - 3, n - 4, n - 5]));
        out.push(comb(&neg(END0), &[n, n - 1, n - 2, n - 3, n - 4, n - 5]));
        Path { samples: out, role: self.role }
    }

    /// Trapezoidal rule applied to a scalar function of the samples.
    pub fn trapezoid(&self, f: impl Fn(&Matrix) -> f64) -> f64 {
        trapezoid(self.grid(), |k| f(&self.samples[k]))
    }

    /// L^2 norm `sqrt(int c |X(s)|_F^2 ds)`; on anti-Hermitian paths this is
    /// the norm induced by the invariant inner product.
    pub fn l2_norm(&self, spec: &GroupSpec) -> f64 {
        self.trapezoid(|m| spec.norm_sq(m)).sqrt()
    }

    pub fn max_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.norm()))
    }

    /// Largest role defect over all samples.
    pub fn role_defect(&self, spec: &GroupSpec) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(spec.role_defect(x, self.role)))
    }

    pub fn check_role(&self, spec: &GroupSpec, tol: f64) -> Result<()> {
        for x in &self.samples {
            spec.check_role(x, self.role, tol)?;
        }
        Ok(())
    }
}

/// `sum_k w_k f(k)` with trapezoid weights on `N + 1` nodes of [0, 1].
pub fn trapezoid(grid: usize, f: impl Fn(usize) -> f64) -> f64 {
    let h = 1.0 / grid as f64;
    let mut acc = 0.5 * (f(0) + f(grid));
    for k in 1..grid {
        acc += f(k);
    }
    acc * h
}

#[derive(Serialize, Deserialize)]
struct PathJson {
    n: usize,
    #[serde(rename = "N")]
    grid: usize,
    role: Role,
    /// One entry per node; each is the row-major list of `[re, im]` pairs.
    samples: Vec<Vec<[f64; 2]>>,
}

impl Serialize for Path {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.n();
        PathJson {
            n,
            grid: self.grid(),
            role: self.role,
            samples: self.samples.iter().map(matrix_to_pairs).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Path {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = PathJson::deserialize(deserializer)?;
        if raw.samples.len() != raw.grid + 1 {
            return Err(D::Error::custom(format!(
                "expected {} samples for N = {}, found {}",
                raw.grid + 1,
                raw.grid,
                raw.samples.len()
            )));
        }
        let samples = raw
            .samples
            .iter()
            .map(|s| pairs_to_matrix(raw.n, s))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        Path::new(samples, raw.role).map_err(D::Error::custom)
    }
}

pub fn matrix_to_pairs(m: &Matrix) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            out.push([z.re, z.im]);
        }
    }
    out
}

pub fn pairs_to_matrix(n: usize, pairs: &[[f64; 2]]) -> Result<Matrix> {
    if pairs.len() != n * n {
        return Err(Error::Invalid(format!("expected {} entries for a {n}x{n} matrix, found {}", n * n, pairs.len())));
    }
    Ok(Matrix::from_fn(n, n, |i, j| {
        let [re, im] = pairs[i * n + j];
        C64::new(re, im)
    }))
}
