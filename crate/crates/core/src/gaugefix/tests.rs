use super::*;
use crate::liecore::{expm, max_abs_diff, GroupSpec, I};
use crate::moduli::ModuliPoint;
use crate::nahm::{generate_from_moduli, l2_inner, nahm_residual, quadruple_to_pair, residual_l2, trapezoid};
use crate::sample;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Tolerance above the stencil floor of the real residual on `grid`.
fn loose(grid: usize) -> SolverConfig {
    SolverConfig { residual_tol: 1e-2 * (16.0 / grid as f64).powi(4), ..SolverConfig::default() }.polished()
}

fn fixed(seed: u64, grid: usize) -> (GroupSpec, GaugeFixed) {
    let spec = GroupSpec::su2();
    let mut rng = sample::rng(seed);
    let m = sample::moduli_point(&mut rng, &spec, 0.5);
    let p = generate_from_moduli(&m, grid).unwrap().pair;
    let out = gauge_fix(&spec, &p, &loose(grid)).unwrap();
    (spec, out)
}

/// Random anti-Hermitian path vanishing at both ends.
fn bump(seed: u64, grid: usize, power: i32) -> Path {
    let spec = GroupSpec::su2();
    let mut rng = sample::rng(seed);
    let x = sample::algebra_in_ball(&mut rng, &spec, 1.0);
    let y = sample::algebra_in_ball(&mut rng, &spec, 1.0);
    Path::from_fn(grid, Role::CompactAlgebra, |s| {
        let w = (s * (1.0 - s)).powi(power) * 4f64.powi(power);
        (&x * c((3.0 * s).cos()) + &y * c((5.0 * s).sin())) * c(w)
    })
    .unwrap()
}

fn path_inner(spec: &GroupSpec, a: &Path, b: &Path) -> f64 {
    trapezoid(a.grid(), |k| spec.inner_real_unchecked(a.at(k), b.at(k)))
}

#[test]
fn zero_rhs_gives_zero() {
    let (_, f) = fixed(1, 32);
    let op = DStarDOperator::new(&f.quadruple()).unwrap();
    let u = solve_dstar_d(&op, &Path::zeros(32, 2, Role::CompactAlgebra).unwrap()).unwrap();
    assert_eq!(u.max_norm(), 0.0);
}

#[test]
fn poisson_oracle_at_flat_data() {
    let grid = 40;
    let a = NahmQuadruple::zeros(grid, 1).unwrap();
    let op = DStarDOperator::new(&a).unwrap();
    let r = C64::new(0.0, 1.7);
    let rhs = Path::constant(grid, Role::CompactAlgebra, &Matrix::from_element(1, 1, r)).unwrap();
    let u = op.solve(&rhs).unwrap();
    for k in 0..=grid {
        let s = u.node(k);
        assert!((u.at(k)[(0, 0)] - r * (s * (1.0 - s) / 2.0)).norm() < 1e-12);
    }
}

#[test]
fn operator_is_self_adjoint_and_positive() {
    let (spec, f) = fixed(2, 64);
    let op = DStarDOperator::new(&f.quadruple()).unwrap();
    let u = bump(3, 64, 1);
    let v = bump(4, 64, 1);
    let ku = op.apply(&u).unwrap();
    let kv = op.apply(&v).unwrap();
    let lhs = path_inner(&spec, &ku, &v);
    let rhs = path_inner(&spec, &u, &kv);
    assert!((lhs - rhs).abs() < 1e-8 * lhs.abs().max(1.0));
    assert!(path_inner(&spec, &ku, &u) > 0.0);
    // apply and solve are inverse to each other.
    let back = op.solve(&ku).unwrap();
    assert!(back.sub(&u).unwrap().max_norm() < 1e-10);
}

#[test]
fn operator_matches_continuum_d_star_d() {
    // D*D u = -(slice residual of D u) up to discretization error.
    let (_, f) = fixed(5, 128);
    let a = f.quadruple();
    let op = DStarDOperator::new(&a).unwrap();
    let u = bump(6, 128, 2);
    let ku = op.apply(&u).unwrap();
    let cont = slice_residual(&a, &d_op(&a, &u).unwrap()).unwrap();
    let diff = (2..127).fold(0.0f64, |m, k| m.max(max_abs_diff(ku.at(k), &(-cont.at(k)))));
    assert!(diff < 1e-2, "{diff}");
}

#[test]
fn flat_u1_needs_no_fixing() {
    let spec = GroupSpec::u1();
    let mut rng = sample::rng(7);
    for _ in 0..3 {
        let m = sample::moduli_point(&mut rng, &spec, 1.0);
        let p = generate_from_moduli(&m, 64).unwrap().pair;
        let out = gauge_fix(&spec, &p, &SolverConfig::default()).unwrap();
        assert_eq!(out.certificate.flow_steps + out.certificate.newton_iters, 0);
        assert!(out.g.endpoint_defect() == 0.0);
        assert!(out.log_g.max_norm() == 0.0);
    }
}

#[test]
fn unitary_endpoint_short_circuits() {
    let spec = GroupSpec::su2();
    let mut rng = sample::rng(8);
    let l = sample::algebra_in_ball(&mut rng, &spec, 1.0);
    let m = ModuliPoint::new(&spec, expm(&l), spec.zero()).unwrap();
    let p = generate_from_moduli(&m, 64).unwrap().pair;
    let out = gauge_fix(&spec, &p, &SolverConfig::default()).unwrap();
    assert!(out.log_g.max_norm() == 0.0);
    assert_eq!(out.pair, p);

    let h = Matrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
    let m = ModuliPoint::new(&spec, expm(&h), spec.zero()).unwrap();
    let p = generate_from_moduli(&m, 64).unwrap().pair;
    let out = gauge_fix(&spec, &p, &loose(64)).unwrap();
    let q = pair_to_quadruple(&out.pair);
    assert!(residual_l2(&spec, &nahm_residual(&q)[..1]) <= 2.0 * out.certificate.real_residual);
}

#[test]
fn random_points_converge() {
    let spec = GroupSpec::su2();
    let mut rng = sample::rng(9);
    for _ in 0..4 {
        let m = sample::moduli_point(&mut rng, &spec, 1.0);
        let gen = generate_from_moduli(&m, 256).unwrap();
        let out = gauge_fix(&spec, &gen.pair, &SolverConfig::default()).unwrap();
        let cert = out.certificate;
        assert!(cert.real_residual <= 1e-8);
        assert!(cert.complex_residual <= 1e-6);
        assert_eq!(out.g.endpoint_defect(), 0.0);
        // Independent re-evaluation through the real form.
        let q = pair_to_quadruple(&out.pair);
        let r = nahm_residual(&q);
        assert!(residual_l2(&spec, &r[..1]) <= 1.01e-8);
        assert!(q.role_defect(&spec) < 1e-10, "{}", q.role_defect(&spec));
    }
}

#[test]
fn polishing_goes_below_tolerance() {
    let spec = GroupSpec::su2();
    let mut rng = sample::rng(10);
    let m = sample::moduli_point(&mut rng, &spec, 0.5);
    let p = generate_from_moduli(&m, 256).unwrap().pair;
    let plain = gauge_fix(&spec, &p, &SolverConfig::default()).unwrap();
    let pol = gauge_fix(&spec, &p, &SolverConfig::default().polished()).unwrap();
    assert!(pol.certificate.real_residual <= plain.certificate.real_residual);
    assert!(pol.certificate.newton_iters > plain.certificate.newton_iters);
}

#[test]
fn fixed_point_is_independent_of_start() {
    let spec = GroupSpec::su2();
    let mut rng = sample::rng(11);
    let m = sample::moduli_point(&mut rng, &spec, 0.5);
    let p = generate_from_moduli(&m, 64).unwrap().pair;
    let cfg = loose(64);
    let a = gauge_fix(&spec, &p, &cfg).unwrap();
    let h0 = bump(12, 64, 1).map(Role::ComplexAlgebra, |x| x * I);
    let b = gauge_fix_from(&spec, &p, &h0, &cfg).unwrap();
    let d = a.pair.alpha.sub(&b.pair.alpha).unwrap().max_norm() + a.pair.beta.sub(&b.pair.beta).unwrap().max_norm();
    assert!(d < 1e-8, "{d}");
}

#[test]
fn exhausted_budget_reports_non_convergence() {
    let spec = GroupSpec::su2();
    let mut rng = sample::rng(13);
    let m = sample::moduli_point(&mut rng, &spec, 1.0);
    let p = generate_from_moduli(&m, 64).unwrap().pair;
    let cfg = SolverConfig { max_flow_steps: 1, max_newton_iters: 1, ..SolverConfig::default() };
    assert!(matches!(gauge_fix(&spec, &p, &cfg), Err(Error::NonConvergence { .. })));
    let bad = SolverConfig { shrink: 1.5, ..SolverConfig::default() };
    assert!(matches!(gauge_fix(&spec, &p, &bad), Err(Error::Invalid(_))));
}

#[test]
fn projection_fixes_horizontal_and_kills_gauge_directions() {
    let (spec, f) = fixed(14, 128);
    let a = f.quadruple();
    let cfg = SolverConfig::default();
    let u = bump(15, 128, 3);
    let pure = gauge_motion(&a, &u).unwrap();
    let out = horizontal_project(&spec, &a, &pure, &cfg).unwrap();
    eprintln!("pure gauge: {} iters, norm {}", out.iterations, out.tangent.l2_norm(&spec));
    assert!(out.tangent.l2_norm(&spec) < 1e-6 * pure.l2_norm(&spec));

    let v = NahmQuadruple::new([bump(16, 128, 1), bump(17, 128, 1), bump(18, 128, 1), bump(19, 128, 1)]).unwrap();
    let once = horizontal_project(&spec, &a, &v, &cfg).unwrap();
    eprintln!("generic: {} iters, slice {}", once.iterations, once.slice_residual);
    let twice = horizontal_project(&spec, &a, &once.tangent, &cfg).unwrap();
    let diff = twice.tangent.sub(&once.tangent).unwrap().l2_norm(&spec);
    assert!(diff <= 2e-8, "{diff}");
}

#[test]
fn projection_is_orthogonal_to_gauge_orbit() {
    let (spec, f) = fixed(20, 128);
    let a = f.quadruple();
    let v = NahmQuadruple::new([bump(21, 128, 1), bump(22, 128, 1), bump(23, 128, 1), bump(24, 128, 1)]).unwrap();
    let t = horizontal_project(&spec, &a, &v, &SolverConfig::default()).unwrap().tangent;
    for seed in 25..30 {
        let g = gauge_motion(&a, &bump(seed, 128, 4)).unwrap();
        let ip = l2_inner(&spec, &t, &g).unwrap();
        let scale = t.l2_norm(&spec) * g.l2_norm(&spec);
        eprintln!("orth {}", ip.abs() / scale);
        assert!(ip.abs() <= 1e-6 * scale);
    }
}

#[test]
fn projection_at_flat_data_leaves_mean() {
    let spec = GroupSpec::su2();
    let grid = 128;
    let a = NahmQuadruple::zeros(grid, 2).unwrap();
    let mut rng = sample::rng(31);
    let x = sample::algebra_in_ball(&mut rng, &spec, 1.0);
    let v0 = Path::from_fn(grid, Role::CompactAlgebra, |s| &x * c((std::f64::consts::PI * s).sin())).unwrap();
    let z = Path::zeros(grid, 2, Role::CompactAlgebra).unwrap();
    let v = NahmQuadruple::new([v0, z.clone(), z.clone(), z]).unwrap();
    let t = horizontal_project(&spec, &a, &v, &SolverConfig::default()).unwrap().tangent;
    let want = &x * c(2.0 / std::f64::consts::PI);
    let err = t.component(0).samples().iter().fold(0.0f64, |m, y| m.max(max_abs_diff(y, &want)));
    assert!(err < 1e-6, "{err}");
}

#[test]
fn complex_pair_of_fixed_solution_roundtrips() {
    let (_, f) = fixed(32, 64);
    let q = f.quadruple();
    let back = quadruple_to_pair(&q);
    assert!(back.alpha.sub(&f.pair.alpha).unwrap().max_norm() < 1e-14);
}

