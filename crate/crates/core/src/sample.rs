//! Seeded random sampling of algebra elements, group elements and moduli points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::liecore::{expm, GroupSpec, Matrix, Role, C64, I};
use crate::moduli::ModuliPoint;
use crate::nahm::{NahmQuadruple, Path};

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Element of g with norm exactly `radius`, uniformly random direction
/// in coefficient space.
pub fn algebra_on_sphere(rng: &mut SampleRng, spec: &GroupSpec, radius: f64) -> Matrix {
    let basis = spec.algebra_basis();
    loop {
        let coeffs: Vec<f64> = basis.iter().map(|_| gaussian(rng)).collect();
        let norm = coeffs.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        let mut x = spec.zero();
        for (e, a) in basis.iter().zip(&coeffs) {
            x += e * C64::new(radius * a / norm, 0.0);
        }
        return x;
    }
}

/// Element of g with norm at most `radius`.
pub fn algebra_in_ball(rng: &mut SampleRng, spec: &GroupSpec, radius: f64) -> Matrix {
    let r = radius * rng.random_range(0.0..1.0f64);
    algebra_on_sphere(rng, spec, r)
}

/// Element `X + iY` of g^c with norm at most `radius`.
pub fn complex_algebra_in_ball(rng: &mut SampleRng, spec: &GroupSpec, radius: f64) -> Matrix {
    let basis = spec.complex_algebra_real_basis();
    let coeffs: Vec<f64> = basis.iter().map(|_| gaussian(rng)).collect();
    let norm = coeffs.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    let r = radius * rng.random_range(0.0..1.0f64);
    let mut x = spec.zero();
    for (e, a) in basis.iter().zip(&coeffs) {
        x += e * C64::new(r * a / norm, 0.0);
    }
    x
}

pub fn unitary(rng: &mut SampleRng, spec: &GroupSpec, radius: f64) -> Matrix {
    expm(&algebra_in_ball(rng, spec, radius))
}

/// Moduli point `(expm(Z), eta)` with `|Z|, |eta| <= radius`.
pub fn moduli_point(rng: &mut SampleRng, spec: &GroupSpec, radius: f64) -> ModuliPoint {
    let z = complex_algebra_in_ball(rng, spec, radius);
    let eta = complex_algebra_in_ball(rng, spec, radius);
    ModuliPoint::new_unchecked(expm(&z), eta)
}

/// Moduli point `(expm(Z), eta)` with `|Z| = |eta| = radius`.
pub fn moduli_point_on_sphere(rng: &mut SampleRng, spec: &GroupSpec, radius: f64) -> ModuliPoint {
    let mut unit = || loop {
        let x = complex_algebra_in_ball(rng, spec, 1.0);
        let n = spec.norm_sq(&x).sqrt();
        if n > 1e-3 {
            return x * C64::new(radius / n, 0.0);
        }
    };
    let z = unit();
    let eta = unit();
    ModuliPoint::new_unchecked(expm(&z), eta)
}

/// Moduli point on the locus `eta = 0`.
pub fn locus_point(rng: &mut SampleRng, spec: &GroupSpec, radius: f64) -> ModuliPoint {
    let z = complex_algebra_in_ball(rng, spec, radius);
    ModuliPoint::new_unchecked(expm(&z), spec.zero())
}

/// A uniformly random rotation in SO(3) (unit quaternion method).
pub fn rotation(rng: &mut SampleRng) -> [[f64; 3]; 3] {
    let mut q = [0.0; 4];
    loop {
        for x in q.iter_mut() {
            *x = gaussian(rng);
        }
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            q.iter_mut().for_each(|x| *x /= n);
            break;
        }
    }
    let [w, x, y, z] = q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

pub fn gaussian(rng: &mut SampleRng) -> f64 {
    rng.sample(StandardNormal)
}

/// `i` times an element of g, i.e. a Hermitian matrix of the same size.
pub fn hermitian_in_ball(rng: &mut SampleRng, spec: &GroupSpec, radius: f64) -> Matrix {
    algebra_in_ball(rng, spec, radius) * I
}

/// Smooth Nahm data: each component a random combination of six
/// trigonometric modes with coefficients in the unit ball of g.
pub fn smooth_quadruple(rng: &mut SampleRng, spec: &GroupSpec, grid: usize) -> crate::error::Result<NahmQuadruple> {
    let mut comps = Vec::with_capacity(4);
    for _ in 0..4 {
        let coeffs: Vec<Matrix> = (0..6).map(|_| algebra_in_ball(rng, spec, 1.0)).collect();
        comps.push(Path::from_fn(grid, Role::CompactAlgebra, |s| {
            let mut acc = spec.zero();
            for (m, x) in coeffs.iter().enumerate() {
                let w = if m % 2 == 0 { (m as f64 * s * 1.7).cos() } else { (m as f64 * s * 1.3).sin() };
                acc += x * C64::new(w, 0.0);
            }
            acc
        })?);
    }
    let [a0, a1, a2, a3]: [Path; 4] = comps.try_into().expect("four components");
    NahmQuadruple::new([a0, a1, a2, a3])
}
