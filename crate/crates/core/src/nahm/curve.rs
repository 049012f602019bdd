//! Group-valued paths in closed form, `g(s) = expm(s X_1) expm(s X_2) ... expm(s X_m)`.
//!
//! These carry exact derivatives, which the generators of complex-equation
//! solutions and of twistor fibers use instead of finite differences.

use crate::error::Result;
use crate::liecore::{expm, inverse, Matrix, Role, C64};

use super::path::Path;

#[derive(Debug, Clone)]
pub struct GroupCurve {
    generators: Vec<Matrix>,
    n: usize,
}

impl GroupCurve {
    pub fn constant_identity(n: usize) -> Self {
        Self { generators: Vec::new(), n }
    }

    pub fn one_parameter(generator: Matrix) -> Self {
        let n = generator.nrows();
        Self { generators: vec![generator], n }
    }

    pub fn product(generators: Vec<Matrix>, n: usize) -> Self {
        Self { generators, n }
    }

    pub fn generators(&self) -> &[Matrix] {
        &self.generators
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, s: f64) -> Matrix {
        let mut g = Matrix::identity(self.n, self.n);
        for x in &self.generators {
            g *= expm(&(x * C64::new(s, 0.0)));
        }
        g
    }

    /// Right logarithmic derivative `g'(s) g(s)^{-1}`.
    pub fn right_log_derivative(&self, s: f64) -> Matrix {
        // d/ds prod_j e^{s X_j} g^{-1} = sum_j Ad_{e^{sX_1}...e^{sX_{j-1}}} X_j
        let mut prefix = Matrix::identity(self.n, self.n);
        let mut prefix_inv = Matrix::identity(self.n, self.n);
        let mut acc = Matrix::zeros(self.n, self.n);
        for x in &self.generators {
            acc += &prefix * x * &prefix_inv;
            prefix = &prefix * expm(&(x * C64::new(s, 0.0)));
            prefix_inv = expm(&(x * C64::new(-s, 0.0))) * &prefix_inv;
        }
        acc
    }

    /// `g(s) d(g^{-1})/ds = -g' g^{-1}`.
    pub fn g_dginv(&self, s: f64) -> Matrix {
        -self.right_log_derivative(s)
    }

    pub fn sample(&self, grid: usize, role: Role) -> Result<Path> {
        Path::from_fn(grid, role, |s| self.value(s))
    }

    pub fn sample_inverse(&self, grid: usize, role: Role) -> Result<Path> {
        let p = self.sample(grid, role)?;
        let inv = p.samples().iter().map(inverse).collect::<Result<Vec<_>>>()?;
        Path::new(inv, role)
    }

    /// Samples of `d(g^{-1})/ds = -g^{-1} g' g^{-1}`.
    pub fn sample_inverse_derivative(&self, grid: usize, role: Role) -> Result<Path> {
        let vals = (0..=grid)
            .map(|k| {
                let s = k as f64 / grid as f64;
                let ginv = inverse(&self.value(s))?;
                Ok(-(&ginv * self.right_log_derivative(s)))
            })
            .collect::<Result<Vec<_>>>()?;
        Path::new(vals, role)
    }
}
