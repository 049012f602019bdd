//! Twistor space of `T*G^c`: trivializations over the patches `U` (`zeta`
//! finite) and `V` (`zeta' = 1/zeta` finite), the transition cocycle, the
//! fiberwise moment maps and their closed-form solutions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liecore::{expm, inverse, max_abs_diff, GroupSpec, Matrix, Role, C64, KERNEL_TOL};
use crate::nahm::{residual_l2, GaugeTransform, GroupCurve, Path};
use crate::ode::integrate_left;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Patch {
    U,
    V,
}

/// A point `(g, eta)` of the fiber `G^c x g^c` over `zeta` in one patch.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistorCoord {
    pub patch: Patch,
    pub g: Matrix,
    pub eta: Matrix,
    /// `zeta` on `U`, `zeta'` on `V`.
    pub zeta: C64,
}

fn wrong_patch(want: Patch) -> Error {
    Error::Invalid(format!("coordinate must lie on patch {want:?}"))
}

/// `(g, eta, zeta) -> (g expm(2 eta / zeta), eta / zeta^2, 1 / zeta)`.
pub fn transition(c: &TwistorCoord) -> Result<TwistorCoord> {
    if c.patch != Patch::U {
        return Err(wrong_patch(Patch::U));
    }
    if c.zeta.norm() == 0.0 {
        return Err(Error::ZetaZero);
    }
    let inv = c.zeta.inv();
    Ok(TwistorCoord {
        patch: Patch::V,
        g: &c.g * expm(&(&c.eta * (inv * 2.0))),
        eta: &c.eta * (inv * inv),
        zeta: inv,
    })
}

/// Inverse of [`transition`]: `zeta = 1/zeta'`, `eta = eta' zeta'^{-2}`,
/// `g = g' expm(-2 eta / zeta)`.
pub fn transition_inverse(c: &TwistorCoord) -> Result<TwistorCoord> {
    if c.patch != Patch::V {
        return Err(wrong_patch(Patch::V));
    }
    if c.zeta.norm() == 0.0 {
        return Err(Error::ZetaPrimeZero);
    }
    let zeta = c.zeta.inv();
    let eta = &c.eta * (zeta * zeta);
    let g = &c.g * expm(&(&eta * (-2.0 / zeta)));
    Ok(TwistorCoord { patch: Patch::U, g, eta, zeta })
}

/// Complex data `(alpha, beta)` on the fiber over `zeta`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberPair {
    pub alpha: Path,
    pub beta: Path,
    pub zeta: C64,
    pub patch: Patch,
}

impl FiberPair {
    pub fn new(alpha: Path, beta: Path, zeta: C64, patch: Patch) -> Result<Self> {
        alpha.check_compatible(&beta)?;
        Ok(Self { alpha, beta, zeta, patch })
    }

    pub fn grid(&self) -> usize {
        self.alpha.grid()
    }

    /// The same point of twistor space seen from the other patch:
    /// `(alpha, beta) / zeta` over `1 / zeta`, and back.
    pub fn other_patch(&self) -> Result<FiberPair> {
        if self.zeta.norm() == 0.0 {
            return Err(match self.patch {
                Patch::U => Error::ZetaZero,
                Patch::V => Error::ZetaPrimeZero,
            });
        }
        let inv = self.zeta.inv();
        let (alpha, beta) = (self.alpha.scale(inv), self.beta.scale(inv));
        let patch = match self.patch {
            Patch::U => Patch::V,
            Patch::V => Patch::U,
        };
        FiberPair::new(alpha, beta, inv, patch)
    }
}

/// `d beta + zeta d alpha + 2 [alpha, beta]` on `U`, and
/// `d alpha' + zeta' d beta' + 2 [alpha', beta']` on `V`.
pub fn fiber_moment_residual(f: &FiberPair) -> Path {
    let (first, second) = match f.patch {
        Patch::U => (&f.beta, &f.alpha),
        Patch::V => (&f.alpha, &f.beta),
    };
    let d1 = first.derivative();
    let d2 = second.derivative();
    let two = C64::new(2.0, 0.0);
    d1.map_indexed(Role::ComplexAlgebra, |k, x| {
        let (a, b) = (f.alpha.at(k), f.beta.at(k));
        x + d2.at(k) * f.zeta + (a * b - b * a) * two
    })
}

/// Closed-form solutions of the fiber equation from a path `g` with `g(0) = 1`:
/// on `U`, `alpha = g dg^{-1}/2`, `beta = g eta g^{-1} - zeta g dg^{-1}/2`;
/// on `V`, `alpha' = g eta g^{-1} + zeta' g dg^{-1}/2`, `beta' = -g dg^{-1}/2`.
pub fn generate_fiber(curve: &GroupCurve, eta: &Matrix, zeta: C64, patch: Patch, grid: usize) -> Result<FiberPair> {
    if eta.shape() != (curve.n(), curve.n()) {
        return Err(Error::DimensionMismatch { expected: curve.n(), found: eta.nrows() });
    }
    let half = C64::new(0.5, 0.0);
    let (gd, conj): (Vec<Matrix>, Vec<Matrix>) = (0..=grid)
        .map(|k| {
            let s = k as f64 / grid as f64;
            let g = curve.value(s);
            Ok((curve.g_dginv(s) * half, &g * eta * inverse(&g)?))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let twisted: Vec<Matrix> = conj.iter().zip(&gd).map(|(c, d)| c + d * (-zeta)).collect();
    let (alpha, beta) = match patch {
        Patch::U => (gd, twisted),
        Patch::V => {
            let alpha = conj.iter().zip(&gd).map(|(c, d)| c + d * zeta).collect();
            (alpha, gd.iter().map(|d| -d).collect())
        }
    };
    FiberPair::new(Path::new(alpha, Role::ComplexAlgebra)?, Path::new(beta, Role::ComplexAlgebra)?, zeta, patch)
}

/// Read `(g(1), eta)` back off a fiber solution by RK4. On `U`,
/// `g' = -2 alpha g` and `eta = beta(0) + zeta alpha(0)`; on `V`,
/// `g' = 2 beta' g` and `eta' = alpha'(0) + zeta' beta'(0)`.
pub fn extract(f: &FiberPair) -> Result<TwistorCoord> {
    let n = f.alpha.n();
    let one = Matrix::identity(n, n);
    let (drive, scale, at0, other0) = match f.patch {
        Patch::U => (&f.alpha, -2.0, f.beta.first(), f.alpha.first()),
        Patch::V => (&f.beta, 2.0, f.alpha.first(), f.beta.first()),
    };
    let g = integrate_left(drive, C64::new(scale, 0.0), &one)?;
    let g_end = g.last().cloned().unwrap_or(one);
    Ok(TwistorCoord { patch: f.patch, g: g_end, eta: at0 + other0 * f.zeta, zeta: f.zeta })
}

/// Complex gauge action on a patch-`U` fiber:
/// `alpha -> k alpha k^{-1} + k dk^{-1}/2`, `beta -> k beta k^{-1} - zeta k dk^{-1}/2`.
pub fn gauge_act_fiber(k: &GaugeTransform, f: &FiberPair) -> Result<FiberPair> {
    if f.patch != Patch::U {
        return Err(wrong_patch(Patch::U));
    }
    if k.grid() != f.grid() {
        return Err(Error::DimensionMismatch { expected: f.grid(), found: k.grid() });
    }
    let half = C64::new(0.5, 0.0);
    let conj = |p: &Path, shift: C64| {
        p.map_indexed(Role::ComplexAlgebra, |i, x| {
            k.path().at(i) * x * k.inverse_path().at(i) + k.g_dginv(i) * shift
        })
    };
    FiberPair::new(conj(&f.alpha, half), conj(&f.beta, -half * f.zeta), f.zeta, Patch::U)
}

/// Fiber-equation residuals of the data consumed by one check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberResiduals {
    pub patch_u: f64,
    pub patch_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistorReport {
    /// `[re, im]`.
    pub zeta: [f64; 2],
    pub deviation_group: f64,
    pub deviation_eta: f64,
    pub residuals: FiberResiduals,
}

impl TwistorReport {
    pub fn deviation(&self) -> f64 {
        self.deviation_group.max(self.deviation_eta)
    }
}

/// Build the patch-`U` fiber from `(g, eta, zeta)`, view it from `V`,
/// re-extract `(g'(1), eta')` there and compare with [`transition`] of
/// `(g(1), eta, zeta)`.
pub fn verify_transition_against_reextraction(
    spec: &GroupSpec,
    curve: &GroupCurve,
    eta: &Matrix,
    zeta: C64,
    grid: usize,
) -> Result<TwistorReport> {
    if zeta.norm() == 0.0 {
        return Err(Error::ZetaZero);
    }
    spec.check_role(eta, Role::ComplexAlgebra, KERNEL_TOL)?;
    let on_u = generate_fiber(curve, eta, zeta, Patch::U, grid)?;
    let on_v = on_u.other_patch()?;
    let got = extract(&on_v)?;
    let want = transition(&TwistorCoord { patch: Patch::U, g: curve.value(1.0), eta: eta.clone(), zeta })?;
    let res = |f: &FiberPair| residual_l2(spec, &[fiber_moment_residual(f)]);
    Ok(TwistorReport {
        zeta: [zeta.re, zeta.im],
        deviation_group: max_abs_diff(&got.g, &want.g),
        deviation_eta: max_abs_diff(&got.eta, &want.eta),
        residuals: FiberResiduals { patch_u: res(&on_u), patch_v: res(&on_v) },
    })
}

/// `count` points on a ring in the overlap, with `|zeta|` spread
/// geometrically over `[r_min, r_max]` and arguments evenly spaced.
pub fn zeta_ring(count: usize, r_min: f64, r_max: f64) -> Vec<C64> {
    let span = (count.max(2) - 1) as f64;
    (0..count)
        .map(|k| {
            let r = r_min * (r_max / r_min).powf(k as f64 / span);
            C64::from_polar(r, std::f64::consts::TAU * (k as f64 + 0.5) / count as f64)
        })
        .collect()
}

/// `(count, r_min, r_max)` of the overlap ring used by the checks.
pub const OVERLAP_RING: (usize, f64, f64) = (12, 0.5, 2.0);

#[cfg(test)]
mod tests;
