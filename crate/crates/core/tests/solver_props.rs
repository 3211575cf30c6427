use std::f64::consts::PI;

use cns_observer::analysis::{estimate_decay, FitWindow};
use cns_observer::observer::{perturbed_state, run_pair, ObserverConfig, RunOptions};
use cns_observer::solver::*;
use cns_observer::spectral::*;
use proptest::prelude::*;

fn solver(n: usize, model: Model) -> Solver {
    Solver::new(
        GridSpec::new(n).unwrap(),
        FluidParams::reference(),
        Scheme {
            model,
            ..Scheme::default()
        },
    )
    .unwrap()
}

/// Smooth periodic field from a few random Fourier modes.
fn smooth(n: usize, coeffs: &[(f64, f64)], base: f64) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let x = (j as f64 + 0.5) / n as f64;
            base + coeffs
                .iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    let arg = 2.0 * PI * (i + 1) as f64 * x;
                    a * arg.cos() + b * arg.sin()
                })
                .sum::<f64>()
        })
        .collect()
}

fn modes() -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-0.05f64..0.05, -0.05f64..0.05), 1..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn nonlinear_mass_is_conserved(r in modes(), u in modes()) {
        let s = solver(64, Model::Nonlinear);
        let rho = smooth(64, &r, 1.0);
        let vel = smooth(64, &u, 0.0);
        let mut state = FieldState::from_primitive(rho, &vel);
        let m0 = state.mass(&s.grid);
        let stepper = TimeStepper::fixed(1e-3);
        for _ in 0..5000 {
            state = s.step(&state, &stepper).unwrap();
        }
        prop_assert!((state.mass(&s.grid) - m0).abs() < 1e-12, "drift {}", state.mass(&s.grid) - m0);
    }

    #[test]
    fn linear_solver_commutes_with_shifts(r in modes(), u in modes(), shift in 1usize..63) {
        let s = solver(64, Model::Linear);
        let state = FieldState::from_primitive(smooth(64, &r, 1.0), &smooth(64, &u, 0.0));
        let stepper = TimeStepper::fixed(1e-3);
        let mut a = state.clone();
        let mut b = state.shifted(shift);
        for _ in 0..200 {
            a = s.step(&a, &stepper).unwrap();
            b = s.step(&b, &stepper).unwrap();
        }
        prop_assert_eq!(a.shifted(shift), b);
    }
}

#[test]
fn equilibrium_is_a_fixed_point() {
    for model in [Model::Linear, Model::Nonlinear] {
        let s = solver(50, model);
        let eq = FieldState::uniform(&s.grid, 1.0, 0.0);
        let d = s.rhs(&eq).unwrap();
        assert!(d.rho.iter().chain(&d.mom).all(|v| *v == 0.0), "{model:?}");
        let after = s.advance(&eq, 0.5, &TimeStepper::fixed(1e-3)).unwrap();
        assert_eq!(after.rho, eq.rho);
        assert_eq!(after.mom, eq.mom);
    }
}

#[test]
fn uniform_flow_is_steady_in_nonlinear_model() {
    let s = solver(40, Model::Nonlinear);
    let st = FieldState::uniform(&s.grid, 1.3, 0.4);
    let d = s.rhs(&st).unwrap();
    assert!(d.rho.iter().chain(&d.mom).all(|v| v.abs() < 1e-12));
}

#[test]
fn linear_single_modes_follow_the_dispersion_relation() {
    let params = FluidParams::reference();
    let s = solver(100, Model::Linear);
    let truth = FieldState::uniform(&s.grid, 1.0, 0.0);
    let zero = KernelCoeffs::zero(Observation::Velocity);
    for k in 1..=3 {
        let obs = perturbed_state(&truth, Model::Linear, &params, k, 0.05);
        let run = run_pair(
            &s,
            &truth,
            &obs,
            &ObserverConfig::new(zero.clone()),
            5.0,
            &TimeStepper::fixed(1e-3),
            &RunOptions::default(),
        )
        .unwrap();
        let fit = estimate_decay(&run.series.t, &run.series.err_u, FitWindow::default()).unwrap();
        let th = eigenvalues_closed_form(&params, &zero, &WaveNumber::scalar(k).unwrap()).unwrap();
        let rel = (fit.rate - th.decay_rate).abs() / th.decay_rate;
        assert!(rel < 0.02, "k={k}: rate {} vs {}", fit.rate, th.decay_rate);
        let (p, q) = (fit.period.unwrap(), th.period.unwrap());
        assert!((p - q).abs() / q < 0.03, "k={k}: period {p} vs {q}");
    }
}

#[test]
fn step_reports_cfl_violation() {
    let s = solver(100, Model::Nonlinear);
    let st = FieldState::uniform(&s.grid, 1.0, 0.0);
    let err = s.step(&st, &TimeStepper::fixed(0.05)).unwrap_err();
    assert_eq!(err.kind(), "cfl-violation");
}
