use cns_observer::analysis::steady_amplitude;
use cns_observer::observer::*;
use cns_observer::solver::*;
use cns_observer::spectral::*;
use proptest::prelude::*;

const N: usize = 64;

fn field() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, N)
}

fn config() -> impl Strategy<Value = ObserverConfig> {
    (
        prop_oneof![Just(Observation::Velocity), Just(Observation::Density)],
        0.0f64..20.0,
        0.0f64..20.0,
        0.05f64..=1.0,
        any::<bool>(),
    )
        .prop_map(|(obs, a, b, l, fix)| {
            let mut c = ObserverConfig::new(KernelCoeffs::uniform(obs, a, b));
            c.obs_length = l;
            if obs == Observation::Velocity && fix {
                c.mean_correction = Some(1.0);
            }
            c
        })
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn shift(x: &[f64], s: usize) -> Vec<f64> {
    let n = x.len();
    (0..n).map(|j| x[(j + n - s) % n]).collect()
}

proptest! {
    #[test]
    fn feedback_is_linear(cfg in config(), w1 in field(), w2 in field(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let p = FluidParams::reference();
        let combo: Vec<f64> = w1.iter().zip(&w2).map(|(x, y)| a * x + b * y).collect();
        let (r1, u1) = apply_feedback(&w1, &cfg, &p).unwrap();
        let (r2, u2) = apply_feedback(&w2, &cfg, &p).unwrap();
        let (r, u) = apply_feedback(&combo, &cfg, &p).unwrap();
        let scale = 1.0 + max_abs(&r1).max(max_abs(&r2)).max(max_abs(&u1)).max(max_abs(&u2)) * 6.0;
        for j in 0..N {
            prop_assert!((r[j] - a * r1[j] - b * r2[j]).abs() < 1e-13 * scale);
            prop_assert!((u[j] - a * u1[j] - b * u2[j]).abs() < 1e-13 * scale);
        }
    }

    #[test]
    fn full_domain_feedback_commutes_with_shifts(mut cfg in config(), w in field(), s in 1usize..N) {
        cfg.obs_length = 1.0;
        let p = FluidParams::reference();
        let (r, u) = apply_feedback(&w, &cfg, &p).unwrap();
        let (rs, us) = apply_feedback(&shift(&w, s), &cfg, &p).unwrap();
        let scale = 1.0 + max_abs(&r).max(max_abs(&u));
        let (r, u) = (shift(&r, s), shift(&u, s));
        for j in 0..N {
            prop_assert!((rs[j] - r[j]).abs() < 1e-12 * scale);
            prop_assert!((us[j] - u[j]).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn mean_corrected_density_feedback_has_zero_integral(a in 0.0f64..20.0, l in 0.05f64..=1.0, w in field()) {
        let mut cfg = ObserverConfig::new(KernelCoeffs::uniform(Observation::Velocity, a, 5.0));
        cfg.obs_length = l;
        cfg.mean_correction = Some(1.0);
        let (r, _) = apply_feedback(&w, &cfg, &FluidParams::reference()).unwrap();
        let total: f64 = r.iter().sum::<f64>() / N as f64;
        prop_assert!(total.abs() < 1e-12 * (1.0 + max_abs(&r)));
    }
}

#[test]
fn full_observation_density_feedback_has_zero_integral() {
    let cfg = ObserverConfig::new(KernelCoeffs::uniform(Observation::Velocity, 3.0, 5.0));
    let w: Vec<f64> = (0..N).map(|j| ((j * 37) % 11) as f64 - 4.0).collect();
    let (r, _) = apply_feedback(&w, &cfg, &FluidParams::reference()).unwrap();
    assert!(r.iter().sum::<f64>().abs() < 1e-11);
}

fn partial_run(mean_fix: bool) -> PairedRun {
    let params = FluidParams::reference();
    let s = Solver::new(
        GridSpec::new(100).unwrap(),
        params,
        Scheme {
            model: Model::Linear,
            ..Scheme::default()
        },
    )
    .unwrap();
    let truth = FieldState::uniform(&s.grid, 1.0, 0.0);
    let obs = perturbed_state(&truth, Model::Linear, &params, 1, 0.05);
    let mut cfg = ObserverConfig::new(KernelCoeffs::uniform(Observation::Velocity, 0.5, 10.0));
    cfg.obs_length = 0.3;
    cfg.mean_correction = mean_fix.then_some(1.0);
    run_pair(&s, &truth, &obs, &cfg, 1.0, &TimeStepper::fixed(1e-3), &RunOptions::default()).unwrap()
}

#[test]
fn mean_correction_keeps_linear_mass_fixed() {
    let run = partial_run(true);
    let mass: f64 = run.observer.rho.iter().sum::<f64>() / 100.0;
    assert!((mass - 1.0).abs() < 1e-12, "{mass}");
}

#[test]
fn uncorrected_partial_feedback_shifts_mass() {
    let run = partial_run(false);
    let mass: f64 = run.observer.rho.iter().sum::<f64>() / 100.0;
    assert!((mass - 1.0).abs() > 1e-4, "{mass}");
}

#[test]
fn unknown_forcing_saturates_at_predicted_amplitude() {
    let params = FluidParams::reference();
    let s = Solver::new(
        GridSpec::new(100).unwrap(),
        params,
        Scheme {
            model: Model::Linear,
            ..Scheme::default()
        },
    )
    .unwrap();
    let truth = FieldState::uniform(&s.grid, 1.0, 0.0);
    for phi_u in [0.0, 4.0] {
        let kern = KernelCoeffs::uniform(Observation::Velocity, 0.0, phi_u);
        let mut cfg = ObserverConfig::new(kern.clone());
        cfg.forcing = ForcingSpec::single(1, 1.0, 1.0).unwrap();
        let opts = RunOptions {
            probe_mode: Some(1),
            ..RunOptions::default()
        };
        let run = run_pair(&s, &truth, &truth, &cfg, 15.0, &TimeStepper::fixed(1e-3), &opts).unwrap();
        let sin = run.series.probe_sin().unwrap();
        let measured = steady_amplitude(&run.series.t, &sin, 8.0, 0.05).unwrap();
        let entry = ForcingEntry { k: 1, amplitude: 1.0, frequency: 1.0 };
        let theory = forced_amplitude(&params, &kern, &entry).unwrap().velocity_amplitude;
        assert!((measured - theory).abs() / theory < 0.02, "phi_u={phi_u}: {measured} vs {theory}");
    }
}

#[test]
fn known_forcing_is_tracked() {
    let params = FluidParams::reference();
    let s = Solver::new(GridSpec::new(64).unwrap(), params, Scheme::default()).unwrap();
    let truth = FieldState::uniform(&s.grid, 1.0, 0.0);
    let obs = perturbed_state(&truth, Model::Nonlinear, &params, 1, 0.05);
    let mut cfg = ObserverConfig::new(KernelCoeffs::uniform(Observation::Velocity, 0.0, 10.0));
    cfg.forcing = ForcingSpec::single(1, 1.0, 1.0).unwrap();
    cfg.forcing_known = true;
    let run = run_pair(&s, &truth, &obs, &cfg, 4.0, &TimeStepper::fixed(1e-3), &RunOptions::default()).unwrap();
    let last = *run.series.err_u.last().unwrap();
    assert!(last < 1e-6 * run.series.err_u[0], "{last}");
}

#[test]
fn adaptive_steps_stay_stable_at_fine_resolution() {
    // large perturbation on 200 cells: the viscous step cap binds, and a
    // cap too close to the RK3 bound leaves a stationary odd-even mode
    let params = FluidParams::reference();
    let s = Solver::new(GridSpec::new(200).unwrap(), params, Scheme::default()).unwrap();
    let truth = FieldState::uniform(&s.grid, 1.0, 0.0);
    let obs = perturbed_state(&truth, Model::Nonlinear, &params, 3, 0.5);
    let cfg = ObserverConfig::new(KernelCoeffs::uniform(Observation::Velocity, 0.2, 10.0));
    let stepper = TimeStepper::adaptive(0.5, 1e-3);
    let run = run_pair(&s, &truth, &obs, &cfg, 2.0, &stepper, &RunOptions::default()).unwrap();
    let last = *run.series.err_u.last().unwrap();
    assert!(last < 1e-6 * run.series.err_u[0], "{last}");
}
