//! Built-in self checks: cross-validation of the closed-form propagator
//! against a dense matrix exponential, simulation against closed forms,
//! and frozen golden values for the headline numbers.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::analysis::{
    mismatch_fidelity, mismatch_success_probability, sweep, timing_budget, GridRange,
    SweepConfig, DEFAULT_BUDGET_FACTOR, DEFAULT_CAVITY_LIFETIME, DEFAULT_COUPLING,
    DEFAULT_RADIATIVE_LIFETIME,
};
use crate::dynamics::{jc_propagate, jc_propagate_dense, JcInteraction};
use crate::error::Result;
use crate::protocol::{
    run_swap, Encoding, ProtocolParams, Variant, DEFAULT_PULSE_AREA,
};
use crate::qstate::{StateVector, SubsystemSpec, SystemLayout};

/// One named self check: a measured deviation against its tolerance.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Check {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, deviation: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            deviation,
            tolerance,
            pass: deviation.is_finite() && deviation <= tolerance,
        }
    }
}

/// True when every check passed.
pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

fn random_no_leak_state(
    layout: &SystemLayout,
    atom: &str,
    cavity: &str,
    rng: &mut ChaCha8Rng,
) -> Result<StateVector> {
    let atom_pos = layout.position(atom)?;
    let cavity_pos = layout.position(cavity)?;
    let top = layout.subsystems()[cavity_pos].dim() - 1;
    let amps: Vec<Complex64> = (0..layout.total_dim())
        .map(|joint| {
            if layout.local_index(joint, atom_pos) == 1
                && layout.local_index(joint, cavity_pos) == top
            {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            }
        })
        .collect();
    StateVector::from_amplitudes(layout.clone(), amps)
}

fn max_amp_diff(x: &StateVector, y: &StateVector) -> f64 {
    x.amplitudes()
        .iter()
        .zip(y.amplitudes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

/// Run the full self-check battery. `tolerance_override` replaces every
/// default tolerance when given.
pub fn run_checks(tolerance_override: Option<f64>) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut push = |name: &str, deviation: f64, default_tol: f64| {
        let tol = tolerance_override.unwrap_or(default_tol);
        checks.push(Check::new(name, deviation, tol));
    };

    // --- propagator cross-validation -----------------------------------
    let layout = SystemLayout::new(vec![
        SubsystemSpec::atom("2"),
        SubsystemSpec::cavity("3", 5)?,
    ])?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x00c0_ffee);
    let mut dense_dev: f64 = 0.0;
    let mut norm_dev: f64 = 0.0;
    let mut composition_dev: f64 = 0.0;
    for _ in 0..120 {
        let state = random_no_leak_state(&layout, "2", "3", &mut rng)?;
        let gt1 = rng.random_range(0.0..2.0 * PI);
        let gt2 = rng.random_range(0.0..2.0 * PI);
        let closed = jc_propagate(&state, &JcInteraction::new("2", "3", gt1))?;
        let dense = jc_propagate_dense(&state, &JcInteraction::new("2", "3", gt1))?;
        dense_dev = dense_dev.max(max_amp_diff(&closed, &dense));
        norm_dev = norm_dev.max((closed.norm() - 1.0).abs());
        let two_step = jc_propagate(&closed, &JcInteraction::new("2", "3", gt2))?;
        let one_step =
            jc_propagate(&state, &JcInteraction::new("2", "3", gt1 + gt2))?;
        composition_dev = composition_dev.max(max_amp_diff(&two_step, &one_step));
    }
    push(
        "closed-form vs dense propagator (120 random states)",
        dense_dev,
        1e-9,
    );
    push("propagator preserves the norm", norm_dev, 1e-12);
    push("pulse areas compose additively", composition_dev, 1e-12);

    // --- simulation vs closed forms -------------------------------------
    let ideal_records = sweep(&SweepConfig::default())?;
    let ideal_dev = ideal_records
        .iter()
        .map(|r| r.abs_deviation)
        .fold(0.0, f64::max);
    push(
        "matched-pair curve: simulation vs closed form (91 points)",
        ideal_dev,
        1e-9,
    );

    let mut mismatch_dev: f64 = 0.0;
    for b in [0.1, 0.3, 0.5, 0.6, 0.7, 0.9] {
        for k in [-0.2, -0.1, 0.1, 0.2] {
            let params = ProtocolParams {
                b,
                k,
                ..ProtocolParams::default()
            };
            if params.validate().is_err() {
                continue;
            }
            let result = run_swap(&params)?;
            let f = mismatch_fidelity(b, k, DEFAULT_PULSE_AREA)?;
            let p = mismatch_success_probability(b, k)?;
            mismatch_dev = mismatch_dev
                .max((result.fidelity - f).abs())
                .max((result.useful_probability - p).abs());
        }
    }
    push(
        "mismatched-pair scalars: simulation vs closed form",
        mismatch_dev,
        1e-9,
    );

    let mut encoding_dev: f64 = 0.0;
    for variant in [Variant::MeasureAtom, Variant::MeasureCavity] {
        for b in [0.15, 0.35, 0.6, 0.85] {
            for k in [-0.1, 0.0, 0.1] {
                let mut scalars = Vec::new();
                for encoding in [Encoding::SameExcitation, Encoding::SingleExcitation] {
                    let result = run_swap(&ProtocolParams {
                        b,
                        k,
                        variant,
                        encoding,
                        ..ProtocolParams::default()
                    })?;
                    scalars.push([
                        result.outcome_probability,
                        result.fidelity,
                        result.useful_probability,
                    ]);
                }
                for (x, y) in scalars[0].iter().zip(&scalars[1]) {
                    encoding_dev = encoding_dev.max((x - y).abs());
                }
            }
        }
    }
    push("the two pair encodings agree", encoding_dev, 1e-9);

    let mut vacuum_dev: f64 = 0.0;
    for b in [0.1, 0.2, 0.5, FRAC_1_SQRT_2, 0.9] {
        let result = run_swap(&ProtocolParams {
            b,
            variant: Variant::MeasureCavity,
            ..ProtocolParams::default()
        })?;
        vacuum_dev = vacuum_dev
            .max((result.fidelity - (1.0 - b * b)).abs())
            .max((result.outcome_probability - b * b).abs());
    }
    push(
        "vacuum detection: fidelity 1-b^2, outcome b^2",
        vacuum_dev,
        1e-9,
    );

    // --- golden values ---------------------------------------------------
    let c = (SQRT_2 * DEFAULT_PULSE_AREA).cos();
    push(
        "double-excitation suppression factor near 0.079",
        (c.abs() - 0.079).abs(),
        5e-4,
    );

    let baseline = run_swap(&ProtocolParams::default())?;
    push(
        "fidelity 0.9889 at b = 0.6",
        (baseline.fidelity - 0.9889).abs(),
        5e-4,
    );
    push(
        "success probability 0.2304 at b = 0.6",
        (baseline.useful_probability - 0.2304).abs(),
        1e-6,
    );

    let fine = sweep(&SweepConfig {
        b: GridRange::new(0.05, 0.95, 0.005),
        ..SweepConfig::default()
    })?;
    let best = fine
        .iter()
        .max_by(|x, y| {
            x.useful_probability
                .partial_cmp(&y.useful_probability)
                .unwrap()
        })
        .expect("non-empty sweep");
    push(
        "peak success probability 0.25",
        (best.useful_probability - 0.25).abs(),
        1e-4,
    );
    push(
        "peak sits at b = 0.7071",
        (best.b - FRAC_1_SQRT_2).abs(),
        5e-3,
    );

    let vacuum = run_swap(&ProtocolParams {
        b: 0.2,
        variant: Variant::MeasureCavity,
        ..ProtocolParams::default()
    })?;
    push(
        "vacuum detection at b = 0.2: fidelity 0.96",
        (vacuum.fidelity - 0.96).abs(),
        1e-6,
    );
    push(
        "vacuum detection at b = 0.2: outcome probability 0.04",
        (vacuum.outcome_probability - 0.04).abs(),
        1e-6,
    );
    push(
        "vacuum detection at b = 0.2: success probability 0.0384",
        (vacuum.useful_probability - 0.0384).abs(),
        1e-6,
    );

    let mismatched = run_swap(&ProtocolParams {
        b: 0.6,
        k: 0.1,
        ..ProtocolParams::default()
    })?;
    push(
        "10% mismatch at b = 0.6: success probability 0.24098",
        (mismatched.useful_probability - 0.24098).abs(),
        5e-5,
    );
    push(
        "10% mismatch at b = 0.6: fidelity 0.98463",
        (mismatched.fidelity - 0.98463).abs(),
        5e-5,
    );

    // --- timing ----------------------------------------------------------
    let timing = timing_budget(
        DEFAULT_COUPLING,
        DEFAULT_RADIATIVE_LIFETIME,
        DEFAULT_CAVITY_LIFETIME,
        DEFAULT_BUDGET_FACTOR,
    )?;
    push(
        "interaction time 35 us at g = 2 pi x 25 kHz",
        (timing.interaction_time_s - 3.5e-5).abs(),
        3.5e-7,
    );
    push(
        "total protocol time 0.35 ms",
        (timing.total_time_s - 3.5e-4).abs(),
        3.5e-6,
    );
    push(
        "budget fits inside both lifetimes",
        if timing.feasible { 0.0 } else { 1.0 },
        0.5,
    );

    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_default_check_passes() {
        let checks = run_checks(None).unwrap();
        assert!(checks.len() >= 15);
        for c in &checks {
            assert!(c.pass, "{} deviated by {} (tol {})", c.name, c.deviation, c.tolerance);
        }
        assert!(all_pass(&checks));
    }

    #[test]
    fn a_harsh_override_reports_failures_without_crashing() {
        let checks = run_checks(Some(1e-15)).unwrap();
        assert!(!all_pass(&checks));
        assert!(checks.iter().any(|c| !c.pass));
        // The battery still reports every check rather than stopping early.
        assert_eq!(checks.len(), run_checks(None).unwrap().len());
    }

    #[test]
    fn overridden_tolerance_is_reported_back() {
        let checks = run_checks(Some(0.5)).unwrap();
        for c in &checks {
            assert_eq!(c.tolerance, 0.5);
        }
    }
}
