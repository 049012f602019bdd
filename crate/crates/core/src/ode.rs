//! Classical RK4 for linear matrix ODEs whose coefficient is only known at
//! grid nodes. Midpoint values come from cubic Lagrange interpolation, which
//! keeps the scheme fourth order.

use crate::error::{Error, Result};
use crate::liecore::{Matrix, C64};
use crate::nahm::Path;

/// Value of the path at `s_k + h/2`, interpolated from four nearby nodes.
pub fn midpoint(path: &Path, k: usize) -> Matrix {
    let n = path.grid();
    let w = |ws: [f64; 4], idx: [usize; 4]| {
        let mut acc = path.at(idx[0]) * C64::new(ws[0], 0.0);
        for j in 1..4 {
            acc += path.at(idx[j]) * C64::new(ws[j], 0.0);
        }
        acc
    };
    if k == 0 {
        w([5.0 / 16.0, 15.0 / 16.0, -5.0 / 16.0, 1.0 / 16.0], [0, 1, 2, 3])
    } else if k + 2 > n {
        w([5.0 / 16.0, 15.0 / 16.0, -5.0 / 16.0, 1.0 / 16.0], [n, n - 1, n - 2, n - 3])
    } else {
        w([-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0], [k - 1, k, k + 1, k + 2])
    }
}

/// Solve `y' = scale * F(s) y` on [0, 1] with `y(0) = y0`, returning `y` at every node.
pub fn integrate_left(coeff: &Path, scale: C64, y0: &Matrix) -> Result<Vec<Matrix>> {
    let n = coeff.grid();
    let h = C64::new(coeff.step(), 0.0);
    let half = h * 0.5;
    let mut out = Vec::with_capacity(n + 1);
    let mut y = y0.clone();
    out.push(y.clone());
    for k in 0..n {
        let f0 = coeff.at(k) * scale;
        let fm = midpoint(coeff, k) * scale;
        let f1 = coeff.at(k + 1) * scale;
        let k1 = &f0 * &y;
        let k2 = &fm * (&y + &k1 * half);
        let k3 = &fm * (&y + &k2 * half);
        let k4 = &f1 * (&y + &k3 * h);
        y += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * (h / 6.0);
        if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::IntegrationFailure(k + 1));
        }
        out.push(y.clone());
    }
    Ok(out)
}
