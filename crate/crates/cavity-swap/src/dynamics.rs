//! Resonant atom-cavity exchange dynamics.
//!
//! The interaction is the excitation-swapping coupling
//! `H = g (a S+ + a' S-)` between one two-level atom and one cavity mode
//! (`a` annihilates a photon, `S+` raises the atom, `a'` and `S-` are the
//! adjoints). On resonance each manifold {|e,n>, |g,n+1>} simply rotates:
//!
//! ```text
//! |e,n>   ->  cos(sqrt(n+1) gt) |e,n>   - i sin(sqrt(n+1) gt) |g,n+1>
//! |g,n+1> ->  cos(sqrt(n+1) gt) |g,n+1> - i sin(sqrt(n+1) gt) |e,n>
//! |g,0>   ->  |g,0>
//! ```
//!
//! with the dimensionless pulse area `gt`. [`jc_propagate`] applies these
//! rotations directly; [`jc_propagate_dense`] exponentiates the dense
//! Hamiltonian matrix through a Hermitian eigendecomposition instead and
//! exists purely as an independent cross-check of the closed form. The two
//! routes share no trigonometry and must agree to near machine precision.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qstate::{StateVector, SubsystemKind, SystemLayout};

/// Population above this on the top excited-manifold level |e, dim-1>
/// makes the truncated rotation unsound, so propagation refuses to run.
pub const LEAK_TOL: f64 = 1e-24;

/// One resonant exchange pulse: which atom, which cavity, and the
/// dimensionless pulse area `gt` (coupling times duration).
#[derive(Debug, Clone, PartialEq)]
pub struct JcInteraction {
    atom: String,
    cavity: String,
    phase: f64,
}

impl JcInteraction {
    pub fn new(atom: impl Into<String>, cavity: impl Into<String>, phase: f64) -> Self {
        Self {
            atom: atom.into(),
            cavity: cavity.into(),
            phase,
        }
    }

    pub fn atom(&self) -> &str {
        &self.atom
    }

    pub fn cavity(&self) -> &str {
        &self.cavity
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// Resolve and kind-check the two labels against a layout.
    fn resolve(&self, layout: &SystemLayout) -> Result<(usize, usize)> {
        if !self.phase.is_finite() {
            return Err(Error::InvalidParams(format!(
                "pulse area must be finite, got {}",
                self.phase
            )));
        }
        let atom_pos = layout.position(&self.atom)?;
        if layout.subsystems()[atom_pos].kind() != SubsystemKind::Atom {
            return Err(Error::WrongSubsystemKind {
                label: self.atom.clone(),
                expected: "an atom",
            });
        }
        let cavity_pos = layout.position(&self.cavity)?;
        if layout.subsystems()[cavity_pos].kind() != SubsystemKind::Cavity {
            return Err(Error::WrongSubsystemKind {
                label: self.cavity.clone(),
                expected: "a cavity",
            });
        }
        Ok((atom_pos, cavity_pos))
    }
}

/// Refuse to propagate if |e, dim-1> carries weight: that component would
/// rotate into the dropped level |g, dim>.
fn check_leak(
    state: &StateVector,
    atom_pos: usize,
    cavity_pos: usize,
) -> Result<()> {
    let layout = state.layout();
    let top = layout.subsystems()[cavity_pos].dim() - 1;
    let population: f64 = state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(joint, _)| {
            layout.local_index(*joint, atom_pos) == 1
                && layout.local_index(*joint, cavity_pos) == top
        })
        .map(|(_, a)| a.norm_sqr())
        .sum();
    if population > LEAK_TOL {
        return Err(Error::TruncationLeak {
            level: top,
            population,
        });
    }
    Ok(())
}

/// Apply one exchange pulse using the closed-form manifold rotations.
///
/// Every other subsystem is a spectator: the rotation acts identically on
/// each spectator configuration. Unitary, so the output stays normalized.
pub fn jc_propagate(state: &StateVector, pulse: &JcInteraction) -> Result<StateVector> {
    let (atom_pos, cavity_pos) = pulse.resolve(state.layout())?;
    check_leak(state, atom_pos, cavity_pos)?;
    let layout = state.layout();
    let dim = layout.subsystems()[cavity_pos].dim();
    let atom_stride = layout.stride(atom_pos);
    let cavity_stride = layout.stride(cavity_pos);

    // Rotation coefficients per photon number n occupied alongside |e>.
    let rotations: Vec<(f64, f64)> = (0..dim - 1)
        .map(|n| {
            let angle = ((n + 1) as f64).sqrt() * pulse.phase();
            (angle.cos(), angle.sin())
        })
        .collect();

    let old = state.amplitudes();
    let mut new = old.to_vec();
    for joint in 0..layout.total_dim() {
        if layout.local_index(joint, atom_pos) != 1 {
            continue;
        }
        let n = layout.local_index(joint, cavity_pos);
        if n + 1 >= dim {
            continue; // weight here is zero by the leak check
        }
        let partner = joint - atom_stride + cavity_stride;
        let (cos, sin) = rotations[n];
        let i_sin = Complex64::new(0.0, sin);
        new[joint] = cos * old[joint] - i_sin * old[partner];
        new[partner] = cos * old[partner] - i_sin * old[joint];
    }
    StateVector::from_amplitudes(layout.clone(), new)
}

/// Dense Hermitian matrix of the exchange coupling on the full joint
/// space, in units of the coupling strength g: matrix elements
/// sqrt(n+1) between |e,n> and |g,n+1> for every spectator configuration.
pub fn jc_hamiltonian_matrix(
    layout: &SystemLayout,
    pulse: &JcInteraction,
) -> Result<DMatrix<Complex64>> {
    let (atom_pos, cavity_pos) = pulse.resolve(layout)?;
    let dim = layout.subsystems()[cavity_pos].dim();
    let atom_stride = layout.stride(atom_pos);
    let cavity_stride = layout.stride(cavity_pos);
    let n_total = layout.total_dim();
    let mut h = DMatrix::<Complex64>::zeros(n_total, n_total);
    for joint in 0..n_total {
        if layout.local_index(joint, atom_pos) != 1 {
            continue;
        }
        let n = layout.local_index(joint, cavity_pos);
        if n + 1 >= dim {
            continue;
        }
        let partner = joint - atom_stride + cavity_stride;
        let element = Complex64::new(((n + 1) as f64).sqrt(), 0.0);
        h[(partner, joint)] += element;
        h[(joint, partner)] += element;
    }
    Ok(h)
}

/// Apply one exchange pulse by exponentiating the dense Hamiltonian:
/// diagonalize the Hermitian matrix and apply `exp(-i gt H)` in its
/// eigenbasis. Independent cross-check for [`jc_propagate`]; it never
/// reuses the manifold rotation formulas.
pub fn jc_propagate_dense(state: &StateVector, pulse: &JcInteraction) -> Result<StateVector> {
    let (atom_pos, cavity_pos) = pulse.resolve(state.layout())?;
    check_leak(state, atom_pos, cavity_pos)?;
    let h = jc_hamiltonian_matrix(state.layout(), pulse)?;
    let eig = h.symmetric_eigen();
    let input = DVector::from_column_slice(state.amplitudes());
    // exp(-i gt H) v = V diag(exp(-i gt lambda)) V^H v
    let in_eigenbasis = eig.eigenvectors.adjoint() * input;
    let phased = DVector::from_iterator(
        in_eigenbasis.len(),
        in_eigenbasis
            .iter()
            .zip(eig.eigenvalues.iter())
            .map(|(c, &lambda)| c * Complex64::new(0.0, -pulse.phase() * lambda).exp()),
    );
    let output = eig.eigenvectors * phased;
    StateVector::from_amplitudes(state.layout().clone(), output.iter().copied().collect())
}
