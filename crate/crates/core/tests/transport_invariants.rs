mod common;

use std::f64::consts::{PI, TAU};

use common::{c, ccw, cw, dist, i_hol, id, to_m2, transport_loop, u_from_lambda};
use ep_holonomy::error::Error;
use ep_holonomy::matrix::{frobenius_distance, ComplexMat};
use ep_holonomy::model::{lambda_ref_minus, lambda_ref_origin, lambda_ref_plus, BasePoint, EpModel};
use ep_holonomy::path::{LoopSpec, Path};
use ep_holonomy::transport::{
    classify_holonomy, compose, compose_all, integrate_transport, HolonomyLabel, TransportResult,
};
use proptest::prelude::*;

fn run(path: &Path, steps: usize) -> TransportResult {
    integrate_transport(path, &EpModel, steps).unwrap()
}

#[test]
fn agrees_with_independent_integrator() {
    // same scheme, same step count: the two should agree to round-off
    let n = 4000;
    for t in [0.0, 0.5] {
        let cases: Vec<(Path, common::M2)> = vec![
            (
                LoopSpec::circle_origin(0.5).at_time(t).to_path().unwrap(),
                transport_loop(ccw(0.0, 0.5), n, t),
            ),
            (
                LoopSpec::circle_ep_minus(1.0).at_time(t).to_path().unwrap(),
                transport_loop(ccw(-1.0, 1.0), n, t),
            ),
            (
                LoopSpec::circle_ep_plus(0.7).at_time(t).to_path().unwrap(),
                transport_loop(cw(1.0, 0.7), n, t),
            ),
            (
                Path::circle(t, [0.0, 0.0], 3.0, 0.0, 1.0).unwrap(),
                transport_loop(ccw(0.0, 3.0), n, t),
            ),
        ];
        for (path, oracle) in cases {
            let u = to_m2(&run(&path, n).holonomy);
            assert!(dist(&u, &oracle) < 1e-10, "t = {t}: {}", dist(&u, &oracle));
        }
    }
}

#[test]
fn evolution_matches_closed_form_along_ep_loop() {
    let rho = 1.3;
    let res = run(&LoopSpec::circle_ep_minus(rho).to_path().unwrap(), 20_000);
    for smp in res.samples.iter().step_by(97) {
        let expected = u_from_lambda(lambda_ref_minus(rho, smp.s).unwrap());
        assert!(dist(&to_m2(&smp.u), &expected) < 1e-9, "θ = {}", smp.s);
    }
}

#[test]
fn holonomy_does_not_depend_on_radius() {
    let hs: Vec<ComplexMat> = [0.2, 0.5, 1.0, 1.5, 1.9]
        .iter()
        .map(|&rho| run(&LoopSpec::circle_ep_minus(rho).to_path().unwrap(), 20_000).holonomy)
        .collect();
    for h in &hs {
        assert!(dist(&to_m2(h), &i_hol()) < 1e-6);
        for g in &hs {
            assert!(frobenius_distance(h, g).unwrap() < 1e-6);
        }
    }
}

#[test]
fn square_around_ep_gives_same_class_as_circle() {
    let sq = Path::square(0.0, [-1.0, 0.0], 1.0).unwrap();
    let class = classify_holonomy(&run(&sq, 5000).holonomy);
    assert_eq!(class.label, HolonomyLabel::I);
}

#[test]
fn circle_around_both_eps_gives_minus_identity() {
    // one counter-clockwise turn around each EP: ℐ · ℐ = ℐ²
    for r in [1.5, 3.0] {
        let h = run(&Path::circle(0.0, [0.0, 0.0], r, 0.0, 1.0).unwrap(), 20_000).holonomy;
        let minus_id = [[c(-1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]];
        assert!(dist(&to_m2(&h), &minus_id) < 1e-6);
        assert_eq!(classify_holonomy(&h).label, HolonomyLabel::I2);
    }
}

#[test]
fn figure_eight_with_opposite_senses_is_trivial() {
    let left = Path::circle(0.0, [-1.0, 0.0], 1.0, 0.0, 1.0).unwrap();
    let right = LoopSpec::circle_ep_plus(1.0).to_path().unwrap();
    let eight = left.concat(&right).unwrap();
    let h = run(&eight, 20_000).holonomy;
    assert!(dist(&to_m2(&h), &id()) < 1e-6);
}

#[test]
fn reversed_loop_inverts_holonomy() {
    let p = LoopSpec::circle_ep_minus(0.8).to_path().unwrap();
    let fwd = run(&p, 10_000);
    let back = run(&p.reversed(), 10_000);
    let prod = compose(&fwd, &back).unwrap();
    assert!(dist(&to_m2(&prod), &id()) < 1e-8);
    assert_eq!(classify_holonomy(&back.holonomy).label, HolonomyLabel::I3);
}

#[test]
fn composition_matches_double_winding() {
    let once = run(&LoopSpec::circle_ep_minus(1.0).to_path().unwrap(), 10_000);
    let twice = run(&LoopSpec::circle_ep_minus(1.0).with_winding(2).to_path().unwrap(), 10_000);
    let composed = compose_all(&[once.clone(), once]).unwrap();
    assert!(frobenius_distance(&composed, &twice.holonomy).unwrap() < 1e-10);
}

#[test]
fn moving_the_base_point_conjugates_the_holonomy() {
    // a loop starting at θ = π/2 has a holonomy conjugate to ℐ: traceless with square −𝟙
    let p = Path::circle(0.0, [-1.0, 0.0], 1.0, PI / 2.0, 1.0).unwrap();
    let h = run(&p, 20_000).holonomy;
    assert!(h.trace().norm() < 1e-9);
    let sq = &h * &h;
    assert!(frobenius_distance(&sq, &ComplexMat::identity(2).scale_re(-1.0)).unwrap() < 1e-9);
}

#[test]
fn evolution_operator_has_unit_determinant() {
    for p in [
        LoopSpec::circle_origin(0.9).to_path().unwrap(),
        LoopSpec::circle_ep_minus(1.9).to_path().unwrap(),
        LoopSpec::circle_ep_plus(0.3).at_time(1.0).to_path().unwrap(),
    ] {
        assert!(run(&p, 20_000).max_det_deviation < 1e-10);
    }
}

#[test]
fn lambda_follows_closed_forms_on_fine_grid() {
    type Reference = Box<dyn Fn(f64) -> num_complex::Complex64>;
    let cases: [(LoopSpec, Reference); 3] = [
        (LoopSpec::circle_origin(0.7), Box::new(|th| lambda_ref_origin(0.7, th).unwrap())),
        (LoopSpec::circle_ep_minus(1.2), Box::new(|th| lambda_ref_minus(1.2, th).unwrap())),
        (LoopSpec::circle_ep_plus(1.2), Box::new(|th| lambda_ref_plus(1.2, th).unwrap())),
    ];
    for (spec, reference) in cases {
        let res = run(&spec.to_path().unwrap(), 20_000);
        let trace = res.lambda_trace.as_ref().expect("S diagonalizes U along standard loops");
        let grid: Vec<_> = trace.iter().step_by(20).collect();
        assert_eq!(grid.len(), 1001);
        let worst = grid.iter().map(|p| (p.lambda - reference(p.s)).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-7, "{worst}");
        assert_eq!(grid.last().unwrap().s, TAU);
    }
}

#[test]
fn nonzero_time_slice_is_recorded_not_classified() {
    // the class away from t = 0 is an open question; only structure is checked here
    let res = run(&LoopSpec::circle_ep_minus(1.0).at_time(0.5).to_path().unwrap(), 10_000);
    assert!(res.max_det_deviation < 1e-10);
    assert!(res.est_error < 1e-9);
    let class = classify_holonomy(&res.holonomy);
    assert!(class.distance.is_finite());
}

#[test]
fn paths_through_eps_are_refused() {
    let through = Path::line(BasePoint::txy(0.0, 0.5, 0.0), BasePoint::txy(0.0, 1.5, 0.0)).unwrap();
    assert!(matches!(integrate_transport(&through, &EpModel, 1000), Err(Error::PathThroughEp { .. })));
    let touching = Path::circle(0.0, [0.0, 0.0], 1.0, 0.0, 1.0).unwrap();
    assert!(matches!(integrate_transport(&touching, &EpModel, 1000), Err(Error::PathThroughEp { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn winding_number_sets_the_class(rho in 0.1f64..1.8, w in -3i32..=5) {
        let res = run(&LoopSpec::circle_ep_minus(rho).with_winding(w).to_path().unwrap(), 4000);
        let class = classify_holonomy(&res.holonomy);
        prop_assert_eq!(class.label, HolonomyLabel::from_power(w as i64));
        prop_assert!(class.distance < 1e-6);
    }

    #[test]
    fn origin_loops_are_trivial(r in 0.05f64..0.95, phase in 0.0f64..TAU) {
        let p = Path::circle(0.0, [0.0, 0.0], r, phase, 1.0).unwrap();
        let res = run(&p, 4000);
        prop_assert!(dist(&to_m2(&res.holonomy), &id()) < 1e-6);
    }
}
