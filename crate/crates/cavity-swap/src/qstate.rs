//! Labeled tensor-product state vectors for small atom/cavity registers.
//!
//! A [`SystemLayout`] fixes an ordered list of subsystems: two-level atoms
//! (|g> = 0, |e> = 1) and Fock-truncated cavity modes (|0>, |1>, ..., |d-1>).
//! Joint basis indices are row-major in that order, so the last subsystem
//! varies fastest. [`StateVector`] holds one normalized complex amplitude
//! per joint basis state and supports the operations the swapping protocol
//! needs: tensor composition, coarse-grained projective measurement,
//! local phase rotations and reduced fidelity against a pure target.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance for "this state must arrive normalized" checks.
pub const NORM_TOL: f64 = 1e-9;

/// Probabilities below this are reported as exactly unreachable outcomes:
/// the outcome is kept in the measurement record but carries no post-state.
pub const ZERO_PROB: f64 = 1e-15;

/// What a subsystem is, which fixes how its basis states are named.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SubsystemKind {
    /// Two-level atom, basis {|g>, |e>}.
    Atom,
    /// Cavity mode truncated to Fock states |0> .. |dim-1>.
    Cavity,
}

/// One labeled subsystem: kind plus local dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsystemSpec {
    label: String,
    kind: SubsystemKind,
    dim: usize,
}

impl SubsystemSpec {
    /// A two-level atom.
    pub fn atom(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            kind: SubsystemKind::Atom,
            dim: 2,
        }
    }

    /// A cavity mode keeping Fock states |0> .. |dim-1>. Needs `dim >= 2`
    /// so it can hold at least one photon.
    pub fn cavity(label: impl Into<String>, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParams(format!(
                "cavity truncation must keep at least 2 levels, got {dim}"
            )));
        }
        Ok(Self {
            label: label.into(),
            kind: SubsystemKind::Cavity,
            dim,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> SubsystemKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Human-readable name of one local basis state (`g`/`e` for atoms,
    /// the photon number for cavities).
    pub fn state_name(&self, local: usize) -> String {
        match self.kind {
            SubsystemKind::Atom => match local {
                0 => "g".into(),
                _ => "e".into(),
            },
            SubsystemKind::Cavity => local.to_string(),
        }
    }
}

/// Ordered, uniquely labeled subsystems with row-major joint indexing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemLayout {
    subsystems: Vec<SubsystemSpec>,
    strides: Vec<usize>,
    total_dim: usize,
}

impl SystemLayout {
    pub fn new(subsystems: Vec<SubsystemSpec>) -> Result<Self> {
        if subsystems.is_empty() {
            return Err(Error::InvalidParams("layout needs at least one subsystem".into()));
        }
        for (i, s) in subsystems.iter().enumerate() {
            if subsystems[..i].iter().any(|t| t.label == s.label) {
                return Err(Error::LabelCollision(s.label.clone()));
            }
        }
        let mut strides = vec![1usize; subsystems.len()];
        for i in (0..subsystems.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * subsystems[i + 1].dim;
        }
        let total_dim = strides[0] * subsystems[0].dim;
        Ok(Self {
            subsystems,
            strides,
            total_dim,
        })
    }

    pub fn subsystems(&self) -> &[SubsystemSpec] {
        &self.subsystems
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Position of a label in the subsystem order.
    pub fn position(&self, label: &str) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|s| s.label() == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn spec(&self, label: &str) -> Result<&SubsystemSpec> {
        Ok(&self.subsystems[self.position(label)?])
    }

    pub fn stride(&self, position: usize) -> usize {
        self.strides[position]
    }

    /// Joint index of a full multi-index (one local index per subsystem).
    pub fn index_of(&self, locals: &[usize]) -> Result<usize> {
        if locals.len() != self.subsystems.len() {
            return Err(Error::DimensionMismatch {
                expected: self.subsystems.len(),
                got: locals.len(),
            });
        }
        let mut idx = 0;
        for (pos, (&l, s)) in locals.iter().zip(&self.subsystems).enumerate() {
            if l >= s.dim {
                return Err(Error::DimensionMismatch {
                    expected: s.dim,
                    got: l,
                });
            }
            idx += l * self.strides[pos];
        }
        Ok(idx)
    }

    /// Local index of the subsystem at `position` inside a joint index.
    pub fn local_index(&self, joint: usize, position: usize) -> usize {
        (joint / self.strides[position]) % self.subsystems[position].dim
    }

    /// Full multi-index for a joint index.
    pub fn multi_index(&self, joint: usize) -> Vec<usize> {
        (0..self.subsystems.len())
            .map(|p| self.local_index(joint, p))
            .collect()
    }

    /// Ket label such as `|e g 1 0>` for a joint basis index.
    pub fn ket_name(&self, joint: usize) -> String {
        let parts: Vec<String> = self
            .subsystems
            .iter()
            .enumerate()
            .map(|(p, s)| s.state_name(self.local_index(joint, p)))
            .collect();
        format!("|{}>", parts.join(" "))
    }
}

/// A normalized pure state over one [`SystemLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: SystemLayout,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The joint basis state with the given local index per subsystem.
    pub fn basis_state(layout: SystemLayout, locals: &[usize]) -> Result<Self> {
        let idx = layout.index_of(locals)?;
        let mut amps = vec![Complex64::ZERO; layout.total_dim()];
        amps[idx] = Complex64::ONE;
        Ok(Self { layout, amps })
    }

    /// Build from an explicit joint amplitude vector; the result is
    /// normalized, so callers may pass unnormalized coefficient patterns.
    pub fn from_amplitudes(layout: SystemLayout, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.total_dim(),
                got: amps.len(),
            });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidParams(
                "amplitudes must be finite".into(),
            ));
        }
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm_sq <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        let scale = norm_sq.sqrt().recip();
        let amps = amps.into_iter().map(|a| a * scale).collect();
        Ok(Self { layout, amps })
    }

    /// Product state from one local pure state per subsystem, in layout
    /// order. Each local vector is normalized independently.
    pub fn from_local_states(layout: SystemLayout, locals: &[Vec<Complex64>]) -> Result<Self> {
        if locals.len() != layout.subsystems().len() {
            return Err(Error::DimensionMismatch {
                expected: layout.subsystems().len(),
                got: locals.len(),
            });
        }
        for (s, v) in layout.subsystems().iter().zip(locals) {
            if v.len() != s.dim() {
                return Err(Error::DimensionMismatch {
                    expected: s.dim(),
                    got: v.len(),
                });
            }
        }
        let mut amps = vec![Complex64::ONE; layout.total_dim()];
        for (joint, amp) in amps.iter_mut().enumerate() {
            for (pos, v) in locals.iter().enumerate() {
                *amp *= v[layout.local_index(joint, pos)];
            }
        }
        Self::from_amplitudes(layout, amps)
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Amplitude on one joint basis state given as a full multi-index.
    pub fn amplitude(&self, locals: &[usize]) -> Result<Complex64> {
        Ok(self.amps[self.layout.index_of(locals)?])
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn ensure_normalized(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::UnnormalizedInput { norm, tol: NORM_TOL });
        }
        Ok(())
    }

    /// Inner product `<self|other>`; layouts must be identical.
    pub fn overlap(&self, other: &Self) -> Result<Complex64> {
        if self.layout != other.layout {
            return Err(Error::LabelMismatch("layouts differ".into()));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Tensor product, keeping `self`'s subsystems before `other`'s.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut subsystems = self.layout.subsystems().to_vec();
        subsystems.extend(other.layout.subsystems().iter().cloned());
        let layout = SystemLayout::new(subsystems)?;
        let mut amps = Vec::with_capacity(layout.total_dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(Self { layout, amps })
    }

    /// Multiply each amplitude by `exp(i * phases[local])` where `local`
    /// is the labeled subsystem's index in that joint basis state.
    pub fn apply_local_phase(&self, label: &str, phases: &[f64]) -> Result<Self> {
        let pos = self.layout.position(label)?;
        let dim = self.layout.subsystems()[pos].dim();
        if phases.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: phases.len(),
            });
        }
        let factors: Vec<Complex64> = phases
            .iter()
            .map(|&p| Complex64::new(0.0, p).exp())
            .collect();
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(joint, a)| a * factors[self.layout.local_index(joint, pos)])
            .collect();
        Ok(Self {
            layout: self.layout.clone(),
            amps,
        })
    }

    /// Coarse-grained projective measurement of one subsystem.
    ///
    /// Returns every declared outcome in declaration order, each with its
    /// Born probability and, when the probability is resolvable, the
    /// collapsed and renormalized post-measurement state on the full
    /// layout. Probabilities sum to 1 for a normalized input because the
    /// cells partition the local basis.
    pub fn measure(&self, spec: &MeasurementSpec) -> Result<Vec<MeasurementOutcome>> {
        self.ensure_normalized()?;
        let pos = spec.validate(&self.layout)?;
        let mut outcomes = Vec::with_capacity(spec.cells.len());
        for (name, cell) in &spec.cells {
            let in_cell =
                |joint: usize| cell.contains(&self.layout.local_index(joint, pos));
            let probability: f64 = self
                .amps
                .iter()
                .enumerate()
                .filter(|(joint, _)| in_cell(*joint))
                .map(|(_, a)| a.norm_sqr())
                .sum();
            let post_state = if probability > ZERO_PROB {
                let scale = probability.sqrt().recip();
                let amps = self
                    .amps
                    .iter()
                    .enumerate()
                    .map(|(joint, a)| {
                        if in_cell(joint) {
                            a * scale
                        } else {
                            Complex64::ZERO
                        }
                    })
                    .collect();
                Some(Self {
                    layout: self.layout.clone(),
                    amps,
                })
            } else {
                None
            };
            outcomes.push(MeasurementOutcome {
                name: name.clone(),
                probability,
                post_state,
            });
        }
        Ok(outcomes)
    }

    /// Overlap of the reduced state on the target's subsystems with a pure
    /// target: sum over the complementary basis of |<target, comp|self>|^2.
    ///
    /// The target's subsystems must each appear in `self` with the same
    /// kind and dimension; its own subsystem order fixes how its indices
    /// map onto the state. With no complementary subsystems this is just
    /// |<target|self>|^2.
    pub fn fidelity_against_pure(&self, target: &Self) -> Result<f64> {
        self.ensure_normalized()?;
        target.ensure_normalized()?;
        let positions: Vec<usize> = target
            .layout
            .subsystems()
            .iter()
            .map(|t| {
                let pos = self
                    .layout
                    .position(t.label())
                    .map_err(|_| Error::LabelMismatch(t.label().to_string()))?;
                if self.layout.subsystems()[pos] != *t {
                    return Err(Error::LabelMismatch(t.label().to_string()));
                }
                Ok(pos)
            })
            .collect::<Result<_>>()?;

        // Offset of each target basis state inside the joint index.
        let target_offsets: Vec<usize> = (0..target.layout.total_dim())
            .map(|t_joint| {
                positions
                    .iter()
                    .enumerate()
                    .map(|(t_pos, &s_pos)| {
                        target.layout.local_index(t_joint, t_pos) * self.layout.stride(s_pos)
                    })
                    .sum()
            })
            .collect();

        let comp_positions: Vec<usize> = (0..self.layout.subsystems().len())
            .filter(|p| !positions.contains(p))
            .collect();
        let comp_dims: Vec<usize> = comp_positions
            .iter()
            .map(|&p| self.layout.subsystems()[p].dim())
            .collect();
        let comp_count: usize = comp_dims.iter().product();

        let mut fidelity = 0.0;
        let mut comp_locals = vec![0usize; comp_positions.len()];
        for _ in 0..comp_count {
            let base: usize = comp_positions
                .iter()
                .zip(&comp_locals)
                .map(|(&p, &l)| l * self.layout.stride(p))
                .sum();
            let amp: Complex64 = target
                .amps
                .iter()
                .zip(&target_offsets)
                .map(|(t, &off)| t.conj() * self.amps[base + off])
                .sum();
            fidelity += amp.norm_sqr();
            for (l, d) in comp_locals.iter_mut().zip(&comp_dims).rev() {
                *l += 1;
                if *l < *d {
                    break;
                }
                *l = 0;
            }
        }
        Ok(fidelity.min(1.0))
    }

    /// Nonzero components as `|ket> amplitude` lines, largest weight first.
    pub fn ket_table(&self, threshold: f64) -> Vec<(String, Complex64)> {
        let mut rows: Vec<(usize, Complex64)> = self
            .amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > threshold)
            .map(|(i, a)| (i, *a))
            .collect();
        rows.sort_by(|x, y| {
            y.1.norm_sqr()
                .partial_cmp(&x.1.norm_sqr())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(x.0.cmp(&y.0))
        });
        rows.into_iter()
            .map(|(i, a)| (self.layout.ket_name(i), a))
            .collect()
    }
}

/// A coarse-grained projective measurement of one labeled subsystem:
/// named cells of local indices that must partition the local basis.
#[derive(Debug, Clone)]
pub struct MeasurementSpec {
    label: String,
    cells: Vec<(String, Vec<usize>)>,
}

impl MeasurementSpec {
    pub fn new(label: impl Into<String>, cells: Vec<(String, Vec<usize>)>) -> Self {
        Self {
            label: label.into(),
            cells,
        }
    }

    /// Fine-grained atom measurement in {|g>, |e>}.
    pub fn atom_basis(label: impl Into<String>) -> Self {
        Self::new(
            label,
            vec![("g".into(), vec![0]), ("e".into(), vec![1])],
        )
    }

    /// Binary photon detection: vacuum versus any photon number > 0.
    pub fn vacuum_split(label: impl Into<String>, dim: usize) -> Self {
        Self::new(
            label,
            vec![
                ("vacuum".into(), vec![0]),
                ("nonvacuum".into(), (1..dim).collect()),
            ],
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn cells(&self) -> &[(String, Vec<usize>)] {
        &self.cells
    }

    /// Check the cells against a layout; returns the subsystem position.
    fn validate(&self, layout: &SystemLayout) -> Result<usize> {
        let pos = layout.position(&self.label)?;
        let dim = layout.subsystems()[pos].dim();
        let fail = |reason: &str| Error::InvalidPartition {
            label: self.label.clone(),
            dim,
            reason: reason.to_string(),
        };
        let mut seen = vec![false; dim];
        for (_, cell) in &self.cells {
            for &l in cell {
                if l >= dim {
                    return Err(fail(&format!("index {l} out of range")));
                }
                if seen[l] {
                    return Err(fail(&format!("index {l} appears twice")));
                }
                seen[l] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(fail(&format!("index {missing} is not covered")));
        }
        Ok(pos)
    }
}

/// One outcome of a coarse-grained measurement. `post_state` is `None`
/// when the outcome's probability is below [`ZERO_PROB`], in which case
/// there is no meaningful collapsed state to renormalize.
#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub name: String,
    pub probability: f64,
    pub post_state: Option<StateVector>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    const TOL: f64 = 1e-12;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pair_layout() -> SystemLayout {
        SystemLayout::new(vec![
            SubsystemSpec::atom("1"),
            SubsystemSpec::atom("2"),
            SubsystemSpec::cavity("3", 3).unwrap(),
            SubsystemSpec::cavity("4", 3).unwrap(),
        ])
        .unwrap()
    }

    /// (a|ee> + b|gg>) x (a|11> + b|00>) on the four-party layout.
    fn paired_initial(a: f64, b: f64) -> StateVector {
        let atoms = SystemLayout::new(vec![SubsystemSpec::atom("1"), SubsystemSpec::atom("2")])
            .unwrap();
        let mut atom_amps = vec![Complex64::ZERO; 4];
        atom_amps[3] = c(a, 0.0);
        atom_amps[0] = c(b, 0.0);
        let atom_pair = StateVector::from_amplitudes(atoms, atom_amps).unwrap();

        let cavities = SystemLayout::new(vec![
            SubsystemSpec::cavity("3", 3).unwrap(),
            SubsystemSpec::cavity("4", 3).unwrap(),
        ])
        .unwrap();
        let mut cav_amps = vec![Complex64::ZERO; 9];
        cav_amps[4] = c(a, 0.0);
        cav_amps[0] = c(b, 0.0);
        let cav_pair = StateVector::from_amplitudes(cavities, cav_amps).unwrap();

        atom_pair.tensor(&cav_pair).unwrap()
    }

    /// The post-interaction four-party state at phase `gt`, expanded by
    /// hand from the closed-form manifold rotations. Serves as an
    /// independent reference for measurement and fidelity tests.
    fn evolved_reference(a: f64, b: f64, gt: f64) -> StateVector {
        let layout = pair_layout();
        let (c1, s1) = (gt.cos(), gt.sin());
        let (c2, s2) = ((SQRT_2 * gt).cos(), (SQRT_2 * gt).sin());
        let mut amps = vec![Complex64::ZERO; layout.total_dim()];
        let mut put = |locals: &[usize], v: Complex64| {
            amps[layout.index_of(locals).unwrap()] += v;
        };
        // a^2 |e . 1>_4 branch: |e,1>_23 rotates in the n=1 manifold.
        put(&[1, 1, 1, 1], c(a * a * c2, 0.0));
        put(&[1, 0, 2, 1], c(0.0, -a * a * s2));
        // ab |e . 0>_4 branch: |e,0>_23 rotates in the n=0 manifold.
        put(&[1, 1, 0, 0], c(a * b * c1, 0.0));
        put(&[1, 0, 1, 0], c(0.0, -a * b * s1));
        // ba |g . 1>_4 branch: |g,1>_23 rotates in the n=0 manifold.
        put(&[0, 0, 1, 1], c(b * a * c1, 0.0));
        put(&[0, 1, 0, 1], c(0.0, -b * a * s1));
        // b^2 |g g 0 0> is stationary.
        put(&[0, 0, 0, 0], c(b * b, 0.0));
        StateVector::from_amplitudes(layout, amps).unwrap()
    }

    /// Balanced excitation-exchange target (|e,0> + i|g,1>)/sqrt(2) on
    /// (atom 1, cavity 4).
    fn swap_target() -> StateVector {
        let layout = SystemLayout::new(vec![
            SubsystemSpec::atom("1"),
            SubsystemSpec::cavity("4", 3).unwrap(),
        ])
        .unwrap();
        let mut amps = vec![Complex64::ZERO; 6];
        amps[3] = c(1.0, 0.0); // |e,0>
        amps[1] = c(0.0, 1.0); // i |g,1>
        StateVector::from_amplitudes(layout, amps).unwrap()
    }

    #[test]
    fn layout_indexing_is_row_major() {
        let layout = pair_layout();
        assert_eq!(layout.total_dim(), 36);
        assert_eq!(layout.stride(0), 18);
        assert_eq!(layout.stride(1), 9);
        assert_eq!(layout.stride(2), 3);
        assert_eq!(layout.stride(3), 1);
        assert_eq!(layout.index_of(&[1, 1, 1, 1]).unwrap(), 31);
        assert_eq!(layout.multi_index(31), vec![1, 1, 1, 1]);
        assert_eq!(layout.index_of(&[0, 1, 2, 0]).unwrap(), 15);
        assert_eq!(layout.ket_name(31), "|e e 1 1>");
    }

    #[test]
    fn layout_round_trips_every_index() {
        let layout = pair_layout();
        for joint in 0..layout.total_dim() {
            let multi = layout.multi_index(joint);
            assert_eq!(layout.index_of(&multi).unwrap(), joint);
        }
    }

    #[test]
    fn layout_rejects_duplicate_labels() {
        let err = SystemLayout::new(vec![SubsystemSpec::atom("1"), SubsystemSpec::atom("1")]);
        assert!(matches!(err, Err(Error::LabelCollision(l)) if l == "1"));
    }

    #[test]
    fn cavity_needs_two_levels() {
        assert!(SubsystemSpec::cavity("3", 1).is_err());
    }

    #[test]
    fn paired_initial_amplitudes() {
        let state = paired_initial(0.8, 0.6);
        assert!((state.norm() - 1.0).abs() < TOL);
        let expect = [
            (vec![1, 1, 1, 1], 0.64),
            (vec![1, 1, 0, 0], 0.48),
            (vec![0, 0, 1, 1], 0.48),
            (vec![0, 0, 0, 0], 0.36),
        ];
        for (locals, v) in expect {
            assert!((state.amplitude(&locals).unwrap() - c(v, 0.0)).norm() < TOL);
        }
        let weight: f64 = state.amplitudes().iter().map(|a| a.norm_sqr()).sum();
        assert!((weight - 1.0).abs() < TOL);
    }

    #[test]
    fn explicit_amplitudes_are_normalized() {
        let layout = SystemLayout::new(vec![SubsystemSpec::atom("1")]).unwrap();
        let state =
            StateVector::from_amplitudes(layout, vec![c(3.0, 0.0), c(0.0, 4.0)]).unwrap();
        assert!((state.norm() - 1.0).abs() < TOL);
        assert!((state.amplitudes()[0].re - 0.6).abs() < TOL);
        assert!((state.amplitudes()[1].im - 0.8).abs() < TOL);
    }

    #[test]
    fn zero_amplitudes_are_rejected() {
        let layout = SystemLayout::new(vec![SubsystemSpec::atom("1")]).unwrap();
        let err = StateVector::from_amplitudes(layout, vec![Complex64::ZERO; 2]);
        assert!(matches!(err, Err(Error::ZeroNorm)));
    }

    #[test]
    fn non_finite_amplitudes_are_rejected() {
        let layout = SystemLayout::new(vec![SubsystemSpec::atom("1")]).unwrap();
        for bad in [f64::NAN, f64::INFINITY, f64::NEG_INFINITY] {
            let err = StateVector::from_amplitudes(
                layout.clone(),
                vec![Complex64::ONE, Complex64::new(bad, 0.0)],
            );
            assert!(matches!(err, Err(Error::InvalidParams(_))), "{bad}");
            let err = StateVector::from_amplitudes(
                layout.clone(),
                vec![Complex64::ONE, Complex64::new(0.0, bad)],
            );
            assert!(matches!(err, Err(Error::InvalidParams(_))), "{bad}i");
        }
    }

    #[test]
    fn tensor_rejects_label_collision() {
        let a = StateVector::basis_state(
            SystemLayout::new(vec![SubsystemSpec::atom("1")]).unwrap(),
            &[0],
        )
        .unwrap();
        assert!(matches!(a.tensor(&a), Err(Error::LabelCollision(_))));
    }

    #[test]
    fn product_state_matches_manual_tensor() {
        let layout = SystemLayout::new(vec![
            SubsystemSpec::atom("a"),
            SubsystemSpec::cavity("c", 3).unwrap(),
        ])
        .unwrap();
        let state = StateVector::from_local_states(
            layout,
            &[
                vec![c(0.6, 0.0), c(0.8, 0.0)],
                vec![c(0.0, 1.0), Complex64::ZERO, Complex64::ZERO],
            ],
        )
        .unwrap();
        assert!((state.amplitude(&[0, 0]).unwrap() - c(0.0, 0.6)).norm() < TOL);
        assert!((state.amplitude(&[1, 0]).unwrap() - c(0.0, 0.8)).norm() < TOL);
        assert!((state.norm() - 1.0).abs() < TOL);
    }

    #[test]
    fn atom_measurement_on_evolved_state() {
        // P(e) = |ab|^2 + |a|^4 cos^2(sqrt(2) gt) at the default phase,
        // read off the surviving excited-atom branches.
        let gt = 7.0 * PI / 4.0;
        let state = evolved_reference(0.8, 0.6, gt);
        let c2 = (SQRT_2 * gt).cos();
        let expected_e = 0.2304 + 0.4096 * c2 * c2;
        let outcomes = state.measure(&MeasurementSpec::atom_basis("2")).unwrap();
        assert_eq!(outcomes.len(), 2);
        let p_g = outcomes[0].probability;
        let p_e = outcomes[1].probability;
        assert!((p_e - expected_e).abs() < TOL);
        assert!((p_e - 0.23295).abs() < 5e-5);
        assert!((p_g + p_e - 1.0).abs() < TOL);
        let post = outcomes[1].post_state.as_ref().unwrap();
        assert!((post.norm() - 1.0).abs() < TOL);
        // Collapse really removed every ground-state component.
        for (joint, amp) in post.amplitudes().iter().enumerate() {
            if post.layout().local_index(joint, 1) == 0 {
                assert!(amp.norm() < TOL);
            }
        }
    }

    #[test]
    fn vacuum_measurement_probability_is_b_squared() {
        let gt = 7.0 * PI / 4.0;
        for &b in &[0.2f64, 0.6, 0.95] {
            let a = (1.0 - b * b).sqrt();
            let state = evolved_reference(a, b, gt);
            let outcomes = state
                .measure(&MeasurementSpec::vacuum_split("3", 3))
                .unwrap();
            assert!((outcomes[0].probability - b * b).abs() < TOL);
        }
    }

    #[test]
    fn unreachable_outcome_has_no_post_state() {
        let layout = pair_layout();
        let state = StateVector::basis_state(layout, &[0, 0, 0, 0]).unwrap();
        let outcomes = state.measure(&MeasurementSpec::atom_basis("2")).unwrap();
        assert_eq!(outcomes[1].probability, 0.0);
        assert!(outcomes[1].post_state.is_none());
        assert!((outcomes[0].probability - 1.0).abs() < TOL);
    }

    #[test]
    fn measurement_rejects_bad_partition() {
        let layout = pair_layout();
        let state = StateVector::basis_state(layout, &[0, 0, 0, 0]).unwrap();
        let overlapping =
            MeasurementSpec::new("3", vec![("x".into(), vec![0, 1]), ("y".into(), vec![1, 2])]);
        assert!(matches!(
            state.measure(&overlapping),
            Err(Error::InvalidPartition { .. })
        ));
        let gappy = MeasurementSpec::new("3", vec![("x".into(), vec![0, 2])]);
        assert!(matches!(
            state.measure(&gappy),
            Err(Error::InvalidPartition { .. })
        ));
    }

    #[test]
    fn measurement_requires_normalized_state() {
        let layout = pair_layout();
        let mut state = StateVector::basis_state(layout, &[0, 0, 0, 0]).unwrap();
        state.amps[0] = c(0.5, 0.0);
        assert!(matches!(
            state.measure(&MeasurementSpec::atom_basis("2")),
            Err(Error::UnnormalizedInput { .. })
        ));
    }

    #[test]
    fn fidelity_of_post_selected_state_against_target() {
        // Post-selecting the excited atom at the default phase leaves a
        // state whose overlap with the balanced target is set by the
        // residual double-excitation branch.
        let gt = 7.0 * PI / 4.0;
        let state = evolved_reference(0.8, 0.6, gt);
        let outcomes = state.measure(&MeasurementSpec::atom_basis("2")).unwrap();
        let post = outcomes[1].post_state.as_ref().unwrap();
        let fidelity = post.fidelity_against_pure(&swap_target()).unwrap();
        let c2 = (SQRT_2 * gt).cos();
        let expected = 0.36 / (0.36 + 0.64 * c2 * c2);
        assert!((fidelity - expected).abs() < TOL);
        assert!((fidelity - 0.9889).abs() < 5e-4);
    }

    #[test]
    fn fidelity_is_one_for_exact_product_embedding() {
        let gt = 7.0 * PI / 4.0;
        let state = evolved_reference(0.8, 0.6, gt);
        // Target equal to the reduced basis projection of a basis state.
        let basis = StateVector::basis_state(pair_layout(), &[1, 0, 2, 1]).unwrap();
        let target = StateVector::basis_state(
            SystemLayout::new(vec![
                SubsystemSpec::atom("1"),
                SubsystemSpec::cavity("4", 3).unwrap(),
            ])
            .unwrap(),
            &[1, 1],
        )
        .unwrap();
        assert!((basis.fidelity_against_pure(&target).unwrap() - 1.0).abs() < TOL);
        // And the full-layout overlap reduces to |<target|state>|^2.
        let full_target = evolved_reference(0.8, 0.6, gt);
        assert!((state.fidelity_against_pure(&full_target).unwrap() - 1.0).abs() < TOL);
    }

    #[test]
    fn fidelity_vanishes_for_orthogonal_target() {
        let layout = SystemLayout::new(vec![
            SubsystemSpec::atom("1"),
            SubsystemSpec::cavity("4", 3).unwrap(),
        ])
        .unwrap();
        let state = StateVector::basis_state(layout.clone(), &[0, 0]).unwrap();
        let target = StateVector::basis_state(layout, &[1, 1]).unwrap();
        assert!(state.fidelity_against_pure(&target).unwrap() < TOL);
    }

    #[test]
    fn fidelity_checks_labels_and_dimensions() {
        let state = paired_initial(0.8, 0.6);
        let missing = StateVector::basis_state(
            SystemLayout::new(vec![SubsystemSpec::atom("9")]).unwrap(),
            &[0],
        )
        .unwrap();
        assert!(matches!(
            state.fidelity_against_pure(&missing),
            Err(Error::LabelMismatch(_))
        ));
        let wrong_dim = StateVector::basis_state(
            SystemLayout::new(vec![SubsystemSpec::cavity("4", 5).unwrap()]).unwrap(),
            &[0],
        )
        .unwrap();
        assert!(matches!(
            state.fidelity_against_pure(&wrong_dim),
            Err(Error::LabelMismatch(_))
        ));
    }

    #[test]
    fn local_phase_turns_target_into_plain_bell_form() {
        // exp(-i pi/2) on the atom's |g> component maps
        // (|e,0> + i|g,1>)/sqrt(2) to (|e,0> + |g,1>)/sqrt(2).
        let rotated = swap_target()
            .apply_local_phase("1", &[-FRAC_PI_2, 0.0])
            .unwrap();
        assert!((rotated.amplitude(&[1, 0]).unwrap() - c(1.0 / SQRT_2, 0.0)).norm() < TOL);
        assert!((rotated.amplitude(&[0, 1]).unwrap() - c(1.0 / SQRT_2, 0.0)).norm() < TOL);
    }

    #[test]
    fn local_phase_preserves_norm_and_checks_length() {
        let state = paired_initial(0.8, 0.6);
        let rotated = state.apply_local_phase("3", &[0.3, -1.2, 2.5]).unwrap();
        assert!((rotated.norm() - 1.0).abs() < TOL);
        assert!(matches!(
            state.apply_local_phase("3", &[0.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            state.apply_local_phase("7", &[0.0]),
            Err(Error::UnknownLabel(_))
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_amps(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_filter_map(
                "nonzero vector",
                |pairs| {
                    let amps: Vec<Complex64> =
                        pairs.into_iter().map(|(re, im)| c(re, im)).collect();
                    let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
                    (norm_sq > 1e-6).then_some(amps)
                },
            )
        }

        fn arb_state() -> impl Strategy<Value = StateVector> {
            arb_amps(36).prop_map(|amps| {
                StateVector::from_amplitudes(pair_layout(), amps).unwrap()
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(300))]

            #[test]
            fn construction_normalizes(state in arb_state()) {
                prop_assert!((state.norm() - 1.0).abs() < TOL);
            }

            #[test]
            fn measurement_probabilities_are_complete(
                state in arb_state(),
                which in 0usize..3,
            ) {
                let spec = match which {
                    0 => MeasurementSpec::atom_basis("2"),
                    1 => MeasurementSpec::vacuum_split("3", 3),
                    _ => MeasurementSpec::new(
                        "4",
                        vec![
                            ("0".into(), vec![0]),
                            ("1".into(), vec![1]),
                            ("2".into(), vec![2]),
                        ],
                    ),
                };
                let outcomes = state.measure(&spec).unwrap();
                let total: f64 = outcomes.iter().map(|o| o.probability).sum();
                prop_assert!((total - 1.0).abs() < TOL);
                for o in &outcomes {
                    prop_assert!(o.probability >= 0.0);
                    if let Some(post) = &o.post_state {
                        prop_assert!((post.norm() - 1.0).abs() < TOL);
                    }
                }
            }

            #[test]
            fn repeated_measurement_is_idempotent(state in arb_state()) {
                // Measuring again after a collapse reproduces the outcome
                // with certainty and leaves the state unchanged.
                let spec = MeasurementSpec::atom_basis("2");
                for o in state.measure(&spec).unwrap() {
                    let Some(post) = o.post_state else { continue };
                    let again = post.measure(&spec).unwrap();
                    let repeat = again.iter().find(|r| r.name == o.name).unwrap();
                    prop_assert!((repeat.probability - 1.0).abs() < TOL);
                    let post2 = repeat.post_state.as_ref().unwrap();
                    for (x, y) in post.amplitudes().iter().zip(post2.amplitudes()) {
                        prop_assert!((x - y).norm() < TOL);
                    }
                }
            }

            #[test]
            fn tensor_norm_is_product_of_norms(
                left in arb_amps(4),
                right in arb_amps(9),
            ) {
                let atoms = SystemLayout::new(vec![
                    SubsystemSpec::atom("1"),
                    SubsystemSpec::atom("2"),
                ]).unwrap();
                let cavities = SystemLayout::new(vec![
                    SubsystemSpec::cavity("3", 3).unwrap(),
                    SubsystemSpec::cavity("4", 3).unwrap(),
                ]).unwrap();
                let l = StateVector::from_amplitudes(atoms, left).unwrap();
                let r = StateVector::from_amplitudes(cavities, right).unwrap();
                let joint = l.tensor(&r).unwrap();
                prop_assert!((joint.norm() - 1.0).abs() < TOL);
                prop_assert_eq!(joint.layout().total_dim(), 36);
            }

            #[test]
            fn fidelity_stays_in_unit_interval(
                state in arb_state(),
                target_amps in arb_amps(6),
            ) {
                let target_layout = SystemLayout::new(vec![
                    SubsystemSpec::atom("1"),
                    SubsystemSpec::cavity("4", 3).unwrap(),
                ]).unwrap();
                let target =
                    StateVector::from_amplitudes(target_layout, target_amps).unwrap();
                let f = state.fidelity_against_pure(&target).unwrap();
                prop_assert!((0.0..=1.0).contains(&f));
            }

            #[test]
            fn local_phase_preserves_measurement_statistics(
                state in arb_state(),
                phases in proptest::collection::vec(-PI..PI, 3),
            ) {
                let rotated = state.apply_local_phase("3", &phases).unwrap();
                let spec = MeasurementSpec::vacuum_split("3", 3);
                let before = state.measure(&spec).unwrap();
                let after = rotated.measure(&spec).unwrap();
                for (x, y) in before.iter().zip(&after) {
                    prop_assert!((x.probability - y.probability).abs() < TOL);
                }
            }
        }
    }
}
