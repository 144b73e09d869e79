//! Shared helpers for the in-crate test suites.

use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::{PI, SQRT_2};

use crate::qstate::{StateVector, SubsystemSpec, SystemLayout};

/// The four-party layout used by the swapping protocol: two atoms and two
/// cavities truncated at `dim` levels.
pub(crate) fn pair_layout(dim: usize) -> SystemLayout {
    SystemLayout::new(vec![
        SubsystemSpec::atom("1"),
        SubsystemSpec::atom("2"),
        SubsystemSpec::cavity("3", dim).unwrap(),
        SubsystemSpec::cavity("4", dim).unwrap(),
    ])
    .unwrap()
}

/// (a|ee> + b|gg>)_12 x (a'|11> + b'|00>)_34.
pub(crate) fn paired_initial(a: f64, b: f64, ap: f64, bp: f64, dim: usize) -> StateVector {
    let layout = pair_layout(dim);
    let mut amps = vec![Complex64::ZERO; layout.total_dim()];
    let mut put = |locals: &[usize], v: f64| {
        amps[layout.index_of(locals).unwrap()] = Complex64::new(v, 0.0);
    };
    put(&[1, 1, 1, 1], a * ap);
    put(&[1, 1, 0, 0], a * bp);
    put(&[0, 0, 1, 1], b * ap);
    put(&[0, 0, 0, 0], b * bp);
    StateVector::from_amplitudes(layout, amps).unwrap()
}

/// Hand-expanded result of one exchange pulse of area `gt` on (atom 2,
/// cavity 3) applied to [`paired_initial`]; the four branches are written
/// out term by term so this never calls the propagator under test.
pub(crate) fn evolved_reference(
    a: f64,
    b: f64,
    ap: f64,
    bp: f64,
    gt: f64,
    dim: usize,
) -> StateVector {
    let layout = pair_layout(dim);
    let (c1, s1) = (gt.cos(), gt.sin());
    let (c2, s2) = ((SQRT_2 * gt).cos(), (SQRT_2 * gt).sin());
    let mut amps = vec![Complex64::ZERO; layout.total_dim()];
    let mut put = |locals: &[usize], v: Complex64| {
        amps[layout.index_of(locals).unwrap()] += v;
    };
    // a a' |e,1>_23: n = 1 manifold.
    put(&[1, 1, 1, 1], Complex64::new(a * ap * c2, 0.0));
    put(&[1, 0, 2, 1], Complex64::new(0.0, -a * ap * s2));
    // a b' |e,0>_23: n = 0 manifold.
    put(&[1, 1, 0, 0], Complex64::new(a * bp * c1, 0.0));
    put(&[1, 0, 1, 0], Complex64::new(0.0, -a * bp * s1));
    // b a' |g,1>_23: n = 0 manifold, opposite member.
    put(&[0, 0, 1, 1], Complex64::new(b * ap * c1, 0.0));
    put(&[0, 1, 0, 1], Complex64::new(0.0, -b * ap * s1));
    // b b' |g,0>_23 is stationary.
    put(&[0, 0, 0, 0], Complex64::new(b * bp, 0.0));
    StateVector::from_amplitudes(layout, amps).unwrap()
}

/// Random normalized state with no weight on |e, dim-1> of the given
/// atom/cavity pair, so exchange pulses stay inside the truncation.
pub(crate) fn random_no_leak_state(
    layout: SystemLayout,
    atom: &str,
    cavity: &str,
    rng: &mut impl Rng,
) -> StateVector {
    let atom_pos = layout.position(atom).unwrap();
    let cavity_pos = layout.position(cavity).unwrap();
    let top = layout.subsystems()[cavity_pos].dim() - 1;
    loop {
        let amps: Vec<Complex64> = (0..layout.total_dim())
            .map(|joint| {
                if layout.local_index(joint, atom_pos) == 1
                    && layout.local_index(joint, cavity_pos) == top
                {
                    Complex64::ZERO
                } else {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                }
            })
            .collect();
        if amps.iter().map(|x| x.norm_sqr()).sum::<f64>() > 1e-3 {
            return StateVector::from_amplitudes(layout, amps).unwrap();
        }
    }
}

/// Uniform pulse area over a few Rabi periods.
pub(crate) fn random_phase(rng: &mut impl Rng) -> f64 {
    rng.random_range(0.0..4.0 * PI)
}

/// Largest per-amplitude deviation between two states on one layout.
pub(crate) fn max_amp_diff(x: &StateVector, y: &StateVector) -> f64 {
    assert_eq!(x.layout(), y.layout());
    x.amplitudes()
        .iter()
        .zip(y.amplitudes())
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max)
}

/// Probability of each total excitation number of one atom/cavity pair
/// (atom excitation plus photon number), marginalized over spectators.
pub(crate) fn excitation_distribution(
    state: &StateVector,
    atom: &str,
    cavity: &str,
) -> Vec<f64> {
    let layout = state.layout();
    let atom_pos = layout.position(atom).unwrap();
    let cavity_pos = layout.position(cavity).unwrap();
    let max_exc = 1 + layout.subsystems()[cavity_pos].dim();
    let mut dist = vec![0.0; max_exc];
    for (joint, amp) in state.amplitudes().iter().enumerate() {
        let exc =
            layout.local_index(joint, atom_pos) + layout.local_index(joint, cavity_pos);
        dist[exc] += amp.norm_sqr();
    }
    dist
}

/// Marginal probability of each local basis state of one subsystem.
pub(crate) fn local_distribution(state: &StateVector, label: &str) -> Vec<f64> {
    let layout = state.layout();
    let pos = layout.position(label).unwrap();
    let mut dist = vec![0.0; layout.subsystems()[pos].dim()];
    for (joint, amp) in state.amplitudes().iter().enumerate() {
        dist[layout.local_index(joint, pos)] += amp.norm_sqr();
    }
    dist
}
