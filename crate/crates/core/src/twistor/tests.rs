use super::*;
use crate::nahm::{complex_residual, ComplexPair};
use crate::sample;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn diag(a: C64, b: C64) -> Matrix {
    Matrix::from_row_slice(2, 2, &[a, c(0.0, 0.0), c(0.0, 0.0), b])
}

fn close(a: &Matrix, b: &Matrix, tol: f64) -> bool {
    max_abs_diff(a, b) <= tol
}

fn random_curve(rng: &mut sample::SampleRng, spec: &GroupSpec) -> GroupCurve {
    let x = sample::complex_algebra_in_ball(rng, spec, 1.0);
    let y = sample::complex_algebra_in_ball(rng, spec, 1.0);
    GroupCurve::product(vec![x, y], spec.n)
}

fn on_u(g: Matrix, eta: Matrix, zeta: C64) -> TwistorCoord {
    TwistorCoord { patch: Patch::U, g, eta, zeta }
}

#[test]
fn transition_examples() {
    let spec = GroupSpec::su2();
    let mut rng = sample::rng(1);
    let g = sample::moduli_point(&mut rng, &spec, 1.0).u().clone();
    let zeta = c(0.3, -1.1);
    let t = transition(&on_u(g.clone(), spec.zero(), zeta)).unwrap();
    assert_eq!(t.patch, Patch::V);
    assert!(close(&t.g, &g, 0.0) && t.eta.norm() == 0.0 && (t.zeta - zeta.inv()).norm() < 1e-15);

    let eta = sample::complex_algebra_in_ball(&mut rng, &spec, 1.0);
    let t = transition(&on_u(spec.identity(), eta.clone(), c(1.0, 0.0))).unwrap();
    assert!(close(&t.g, &expm(&(&eta * c(2.0, 0.0))), 1e-14) && close(&t.eta, &eta, 0.0));
    let back = transition_inverse(&t).unwrap();
    assert!(close(&back.g, &spec.identity(), 1e-13) && close(&back.eta, &eta, 1e-15));
    assert_eq!(back.zeta, c(1.0, 0.0));

    let h = diag(c(1.0, 0.0), c(-1.0, 0.0));
    let t = transition(&on_u(g.clone(), h.clone(), c(2.0, 0.0))).unwrap();
    assert!(close(&t.g, &(&g * expm(&h)), 1e-14));
    assert!(close(&t.eta, &diag(c(0.25, 0.0), c(-0.25, 0.0)), 1e-15));
    assert_eq!(t.zeta, c(0.5, 0.0));
}

#[test]
fn transition_rejects_the_poles_and_wrong_patches() {
    let spec = GroupSpec::su2();
    let zero = c(0.0, 0.0);
    assert!(matches!(transition(&on_u(spec.identity(), spec.zero(), zero)), Err(Error::ZetaZero)));
    let v = TwistorCoord { patch: Patch::V, g: spec.identity(), eta: spec.zero(), zeta: zero };
    assert!(matches!(transition_inverse(&v), Err(Error::ZetaPrimeZero)));
    assert!(matches!(transition(&v), Err(Error::Invalid(_))));
    let g = spec.identity();
    assert_eq!(transition_inverse(&TwistorCoord { zeta: c(2.0, 0.0), ..v }).unwrap().zeta, c(0.5, 0.0));
    assert!(matches!(transition_inverse(&on_u(g, spec.zero(), c(1.0, 0.0))), Err(Error::Invalid(_))));
}

#[test]
fn cocycle_round_trip_on_the_ring() {
    let spec = GroupSpec::su2();
    let mut rng = sample::rng(2);
    let (count, lo, hi) = OVERLAP_RING;
    for zeta in zeta_ring(count, lo, hi) {
        let m = sample::moduli_point(&mut rng, &spec, 1.0);
        let p = on_u(m.u().clone(), m.eta().clone(), zeta);
        let back = transition_inverse(&transition(&p).unwrap()).unwrap();
        assert!(close(&back.g, &p.g, 1e-10) && close(&back.eta, &p.eta, 1e-12));
        assert!((back.zeta - zeta).norm() < 1e-15);
        let v = transition(&transition_inverse(&transition(&p).unwrap()).unwrap()).unwrap();
        assert!(close(&v.g, &transition(&p).unwrap().g, 1e-10));
    }
}

#[test]
fn eta_part_is_homogeneous_of_degree_one() {
    let spec = GroupSpec::su2();
    let mut rng = sample::rng(3);
    let m = sample::moduli_point(&mut rng, &spec, 1.0);
    let zeta = c(0.7, 0.9);
    let lambda = 1.7;
    let base = transition(&on_u(m.u().clone(), m.eta().clone(), zeta)).unwrap();
    let scaled = transition(&on_u(m.u().clone(), m.eta() * c(lambda, 0.0), zeta)).unwrap();
    assert!(close(&scaled.eta, &(&base.eta * c(lambda, 0.0)), 1e-14));
    let twist = expm(&(m.eta() * (c(2.0 * (lambda - 1.0), 0.0) / zeta)));
    assert!(close(&scaled.g, &(&base.g * twist), 1e-12));
}

#[test]
fn ring_stays_in_the_overlap() {
    let ring = zeta_ring(12, 0.5, 2.0);
    assert_eq!(ring.len(), 12);
    assert!(ring.iter().all(|z| z.norm() >= 0.5 - 1e-15 && z.norm() <= 2.0 + 1e-15));
    assert!((ring[0].norm() - 0.5).abs() < 1e-15 && (ring[11].norm() - 2.0).abs() < 1e-14);
}

#[test]
fn fiber_generator_oracles() {
    let spec = GroupSpec::su2();
    let mut rng = sample::rng(4);
    let eta = sample::complex_algebra_in_ball(&mut rng, &spec, 1.0);
    let zeta = c(0.4, 0.8);
    let f = generate_fiber(&GroupCurve::constant_identity(2), &eta, zeta, Patch::U, 16).unwrap();
    assert!(f.alpha.max_norm() == 0.0 && f.beta.samples().iter().all(|b| close(b, &eta, 0.0)));

    let l = sample::complex_algebra_in_ball(&mut rng, &spec, 1.0);
    let f = generate_fiber(&GroupCurve::one_parameter(l.clone()), &eta, zeta, Patch::U, 16).unwrap();
    let minus_half_l = &l * c(-0.5, 0.0);
    for k in 0..=16 {
        let s = k as f64 / 16.0;
        let want = expm(&(&l * c(s, 0.0))) * &eta * expm(&(&l * c(-s, 0.0))) + &l * (zeta * 0.5);
        assert!(close(f.alpha.at(k), &minus_half_l, 1e-14));
        assert!(close(f.beta.at(k), &want, 1e-12));
    }
}

#[test]
fn zeta_zero_reduces_to_the_complex_equation() {
    let spec = GroupSpec::su2();
    let mut rng = sample::rng(5);
    let curve = random_curve(&mut rng, &spec);
    let eta = sample::complex_algebra_in_ball(&mut rng, &spec, 1.0);
    let f = generate_fiber(&curve, &eta, c(0.0, 0.0), Patch::U, 64).unwrap();
    let pair = crate::nahm::complex_solution_along(&curve, &eta, 64).unwrap();
    assert!(f.alpha.sub(&pair.alpha).unwrap().max_norm() < 1e-14);
    assert!(f.beta.sub(&pair.beta).unwrap().max_norm() < 1e-13);
    let mu = fiber_moment_residual(&f);
    let cr = complex_residual(&ComplexPair::new(f.alpha.clone(), f.beta.clone()).unwrap());
    assert!(mu.sub(&cr).unwrap().max_norm() < 1e-12);
    let back = extract(&f).unwrap();
    assert!(close(&back.g, &curve.value(1.0), 1e-7) && close(&back.eta, &eta, 1e-14));
}

#[test]
fn generated_fibers_solve_their_equation_to_fourth_order() {
    let spec = GroupSpec::su2();
    let mut rng = sample::rng(6);
    let curve = random_curve(&mut rng, &spec);
    let eta = sample::complex_algebra_in_ball(&mut rng, &spec, 1.0);
    for patch in [Patch::U, Patch::V] {
        let res = |grid| residual_l2(&spec, &[fiber_moment_residual(&generate_fiber(&curve, &eta, c(0.6, -0.5), patch, grid).unwrap())]);
        let (coarse, fine) = (res(32), res(64));
        assert!(coarse / fine > 12.0, "{patch:?} {coarse} {fine}");
        assert!(fine < 1e-5);
    }
    let constant = generate_fiber(&GroupCurve::constant_identity(2), &diag(c(1.0, 0.0), c(-1.0, 0.0)), c(1.3, 0.0), Patch::V, 16);
    assert_eq!(fiber_moment_residual(&constant.unwrap()).max_norm(), 0.0);
}

#[test]
fn patch_v_residual_is_patch_u_residual_over_zeta_squared() {
    let spec = GroupSpec::su2();
    let mut rng = sample::rng(7);
    let curve = random_curve(&mut rng, &spec);
    let eta = sample::complex_algebra_in_ball(&mut rng, &spec, 1.0);
    let zeta = c(-0.8, 1.2);
    // Perturbed data, so both residuals are far from zero.
    let mut f = generate_fiber(&curve, &eta, zeta, Patch::U, 32).unwrap();
    f.alpha = f.alpha.map_indexed(Role::ComplexAlgebra, |k, x| x + &eta * c(k as f64 / 32.0, 0.0));
    let mu = fiber_moment_residual(&f);
    let mu_v = fiber_moment_residual(&f.other_patch().unwrap());
    let want = mu.scale((zeta * zeta).inv());
    assert!(mu.max_norm() > 0.1);
    assert!(mu_v.sub(&want).unwrap().max_norm() < 1e-12 * mu.max_norm());
    let back = f.other_patch().unwrap().other_patch().unwrap();
    assert!(back.alpha.sub(&f.alpha).unwrap().max_norm() < 1e-14);
}

#[test]
fn reextraction_matches_the_transition() {
    let spec = GroupSpec::su2();
    let eta = diag(c(1.0, 0.0), c(-1.0, 0.0));
    let r = verify_transition_against_reextraction(&spec, &GroupCurve::constant_identity(2), &eta, c(1.0, 0.0), 512);
    assert!(r.unwrap().deviation() < 1e-9);

    let mut rng = sample::rng(8);
    let curve = random_curve(&mut rng, &spec);
    let r = verify_transition_against_reextraction(&spec, &curve, &spec.zero(), c(0.5, 1.0), 256).unwrap();
    assert!(r.deviation() < 1e-10, "{r:?}");

    let eta = sample::complex_algebra_in_ball(&mut rng, &spec, 1.0);
    for zeta in zeta_ring(4, 0.5, 2.0) {
        let r = verify_transition_against_reextraction(&spec, &curve, &eta, zeta, 512).unwrap();
        assert!(r.deviation() <= 1e-7, "{r:?}");
        assert!(r.residuals.patch_u < 1e-6 && r.residuals.patch_v < 1e-6);
    }
    let json = serde_json::to_value(
        verify_transition_against_reextraction(&spec, &curve, &eta, c(1.0, 1.0), 64).unwrap(),
    )
    .unwrap();
    for key in ["zeta", "deviation_group", "deviation_eta", "residuals"] {
        assert!(json.get(key).is_some());
    }
    assert!(matches!(
        verify_transition_against_reextraction(&spec, &curve, &eta, c(0.0, 0.0), 64),
        Err(Error::ZetaZero)
    ));
}

#[test]
fn gauge_action_leaves_the_endpoint_data_alone() {
    let spec = GroupSpec::su2();
    let mut rng = sample::rng(9);
    let curve = random_curve(&mut rng, &spec);
    let eta = sample::complex_algebra_in_ball(&mut rng, &spec, 1.0);
    let zeta = c(0.9, 0.4);
    let grid = 256;
    let f = generate_fiber(&curve, &eta, zeta, Patch::U, grid).unwrap();
    let x = sample::complex_algebra_in_ball(&mut rng, &spec, 1.0);
    let k = Path::from_fn(grid, Role::ComplexGroup, |s| expm(&(&x * c((std::f64::consts::PI * s).sin(), 0.0)))).unwrap();
    let k = GaugeTransform::from_samples(k).unwrap();
    let moved = gauge_act_fiber(&k, &f).unwrap();
    assert!(moved.alpha.sub(&f.alpha).unwrap().max_norm() > 0.1);
    let (a, b) = (extract(&f).unwrap(), extract(&moved).unwrap());
    assert!(close(&a.g, &b.g, 1e-7) && close(&a.eta, &b.eta, 1e-7), "{} {}", max_abs_diff(&a.g, &b.g), max_abs_diff(&a.eta, &b.eta));
    let res = residual_l2(&spec, &[fiber_moment_residual(&moved)]);
    assert!(res < 1e-6, "{res}");
}
