//! The entanglement-swapping protocol itself.
//!
//! Alice and Bob share two entangled pairs: an atomic pair
//! `a|ee> + b|gg>` (atoms 1 and 2) and a cavity-field pair
//! `a'|11> + b'|00>` (cavities 3 and 4). Clare sends atom 2 through
//! cavity 3 for one resonant exchange pulse of area `gt` and then
//! post-selects a local outcome:
//!
//! - [`Variant::MeasureAtom`]: detect atom 2 in |e>;
//! - [`Variant::MeasureCavity`]: detect cavity 3 empty.
//!
//! Either outcome leaves atom 1 and cavity 4 close to the maximally
//! entangled state `(|e,0> + i|g,1>)/sqrt(2)` (at the default pulse area)
//! even though the two subsystems never interacted. The deviation comes
//! from one surviving double-excitation branch whose amplitude is set by
//! `cos(sqrt(2) gt)`, which the default pulse area makes small.
//!
//! The amplitude-mismatch error model enters through `k`: the cavity pair
//! is prepared with `b' = b (1 + k)` instead of `b`, and `a', b'` follow
//! from normalization.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::dynamics::{jc_propagate, JcInteraction};
use crate::error::{Error, Result};
use crate::qstate::{
    MeasurementSpec, StateVector, SubsystemSpec, SystemLayout, ZERO_PROB,
};

/// Default exchange pulse area `gt = 7 pi / 4`, chosen because
/// `cos(sqrt(2) gt)` is then only about 0.079: the double-excitation
/// branch nearly vanishes while `cos(gt) = sin(gt)` in magnitude, which
/// balances the two heralded components.
pub const DEFAULT_PULSE_AREA: f64 = 7.0 * PI / 4.0;

/// Pulse area `gt = pi/2` of the readout interaction that moves one
/// cavity photon onto a fresh ground-state atom completely.
pub const READOUT_PULSE_AREA: f64 = FRAC_PI_2;

/// Which local post-selection Clare performs after the pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Variant {
    /// Measure atom 2 in {|g>, |e>} and keep |e>.
    #[serde(rename = "atom")]
    MeasureAtom,
    /// Measure cavity 3 photon number as vacuum/nonvacuum and keep vacuum.
    #[serde(rename = "cavity-vacuum")]
    MeasureCavity,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::MeasureAtom => "atom",
            Variant::MeasureCavity => "cavity-vacuum",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "atom" => Ok(Variant::MeasureAtom),
            "cavity-vacuum" => Ok(Variant::MeasureCavity),
            other => Err(Error::InvalidParams(format!(
                "unknown variant `{other}` (expected `atom` or `cavity-vacuum`)"
            ))),
        }
    }
}

/// How the two entangled pairs carry their amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Encoding {
    /// `(a|ee> + b|gg>) x (a'|11> + b'|00>)`.
    #[serde(rename = "same-excitation")]
    SameExcitation,
    /// `(a|ge> + b|eg>) x (a'|10> + b'|01>)`: each pair shares a single
    /// excitation.
    #[serde(rename = "single-excitation")]
    SingleExcitation,
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::SameExcitation => "same-excitation",
            Encoding::SingleExcitation => "single-excitation",
        })
    }
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "same-excitation" => Ok(Encoding::SameExcitation),
            "single-excitation" => Ok(Encoding::SingleExcitation),
            other => Err(Error::InvalidParams(format!(
                "unknown encoding `{other}` (expected `same-excitation` or `single-excitation`)"
            ))),
        }
    }
}

/// Full parameter set of one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolParams {
    /// Ground-pair amplitude b of the atomic pair; a = sqrt(1 - b^2).
    pub b: f64,
    /// Relative amplitude mismatch of the cavity pair: b' = b (1 + k).
    pub k: f64,
    /// Exchange pulse area gt of Clare's interaction.
    pub pulse_area: f64,
    pub variant: Variant,
    pub encoding: Encoding,
    /// Append a fresh atom and read cavity 4 out after post-selection.
    pub bob_readout: bool,
    /// Fock levels kept per cavity. The pulse populates two photons in
    /// cavity 3, so at least 3 levels are required.
    pub truncation: usize,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            b: 0.6,
            k: 0.0,
            pulse_area: DEFAULT_PULSE_AREA,
            variant: Variant::MeasureAtom,
            encoding: Encoding::SameExcitation,
            bob_readout: false,
            truncation: 3,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        if !self.b.is_finite() || !self.k.is_finite() || !self.pulse_area.is_finite() {
            return Err(Error::InvalidParams("b, k and gt must be finite".into()));
        }
        if !(self.b > 0.0 && self.b < 1.0) {
            return Err(Error::InvalidParams(format!(
                "b must lie strictly inside (0, 1), got {}",
                self.b
            )));
        }
        let bp = self.b * (1.0 + self.k);
        if bp.abs() >= 1.0 {
            return Err(Error::InvalidParams(format!(
                "|b (1 + k)| must stay below 1, got {}",
                bp.abs()
            )));
        }
        if self.truncation < 3 {
            return Err(Error::InvalidParams(format!(
                "cavity truncation must keep at least 3 levels, got {}",
                self.truncation
            )));
        }
        Ok(())
    }

    /// (a, b, a', b') with `a = sqrt(1-b^2)`, `b' = b(1+k)`,
    /// `a' = sqrt(1-b'^2)`.
    pub fn amplitudes(&self) -> (f64, f64, f64, f64) {
        let a = (1.0 - self.b * self.b).sqrt();
        let bp = self.b * (1.0 + self.k);
        let ap = (1.0 - bp * bp).sqrt();
        (a, self.b, ap, bp)
    }
}

/// One orthogonal branch of a post-selected state, resolved over the
/// basis of the subsystems outside the fidelity target.
#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    /// Which complementary basis state this branch sits in, e.g. `2=e 3=1`.
    pub label: String,
    /// Squared amplitude of the branch inside the unnormalized projected
    /// state; branch weights sum to the outcome probability.
    pub weight: f64,
    /// Squared overlap of the normalized branch with the target.
    pub target_overlap: f64,
}

/// Everything one protocol run produces.
#[derive(Debug, Clone)]
pub struct ProtocolResult {
    pub params: ProtocolParams,
    /// Born probability of the post-selected detector outcome.
    pub outcome_probability: f64,
    /// Overlap of the post-selected reduced state on (atom 1, cavity 4)
    /// with [`target_state`](ProtocolResult::target_state).
    pub fidelity: f64,
    /// Weight of the heralded branch: atom 2 excited with cavity 3 empty.
    /// This is the probability that the protocol delivers its target
    /// pattern, and the success probability the closed forms in
    /// [`crate::analysis`] evaluate. It coincides with
    /// `outcome_probability * fidelity` when `k = 0`; with a mismatch the
    /// product is smaller because the heralded branch itself is slightly
    /// unbalanced.
    pub useful_probability: f64,
    /// Collapsed, renormalized state after post-selection.
    pub post_state: StateVector,
    /// The pure target on (atom 1, cavity 4) the fidelity refers to.
    pub target_state: StateVector,
    /// Branches of the post-selected state over the (atom 2, cavity 3)
    /// basis, heaviest first.
    pub branches: Vec<Branch>,
    /// Post-readout state including Bob's fresh atom, when requested.
    pub bob_state: Option<StateVector>,
}

fn cavity(label: &str, dim: usize) -> Result<SubsystemSpec> {
    SubsystemSpec::cavity(label, dim)
}

/// Initial four-party product of the two entangled pairs, on the layout
/// (atom 1, atom 2, cavity 3, cavity 4).
pub fn prepare_initial(params: &ProtocolParams) -> Result<StateVector> {
    params.validate()?;
    let (a, b, ap, bp) = params.amplitudes();
    let dim = params.truncation;

    let atoms =
        SystemLayout::new(vec![SubsystemSpec::atom("1"), SubsystemSpec::atom("2")])?;
    let mut atom_amps = vec![Complex64::ZERO; atoms.total_dim()];
    match params.encoding {
        Encoding::SameExcitation => {
            atom_amps[atoms.index_of(&[1, 1])?] = Complex64::new(a, 0.0);
            atom_amps[atoms.index_of(&[0, 0])?] = Complex64::new(b, 0.0);
        }
        Encoding::SingleExcitation => {
            atom_amps[atoms.index_of(&[0, 1])?] = Complex64::new(a, 0.0);
            atom_amps[atoms.index_of(&[1, 0])?] = Complex64::new(b, 0.0);
        }
    }
    let atom_pair = StateVector::from_amplitudes(atoms, atom_amps)?;

    let cavities = SystemLayout::new(vec![cavity("3", dim)?, cavity("4", dim)?])?;
    let mut cav_amps = vec![Complex64::ZERO; cavities.total_dim()];
    match params.encoding {
        Encoding::SameExcitation => {
            cav_amps[cavities.index_of(&[1, 1])?] = Complex64::new(ap, 0.0);
            cav_amps[cavities.index_of(&[0, 0])?] = Complex64::new(bp, 0.0);
        }
        Encoding::SingleExcitation => {
            cav_amps[cavities.index_of(&[1, 0])?] = Complex64::new(ap, 0.0);
            cav_amps[cavities.index_of(&[0, 1])?] = Complex64::new(bp, 0.0);
        }
    }
    let cavity_pair = StateVector::from_amplitudes(cavities, cav_amps)?;

    atom_pair.tensor(&cavity_pair)
}

/// The pure state on (atom 1, cavity 4) the protocol aims for at pulse
/// area `gt`: the pattern of the heralded branch with its amplitudes
/// balanced. For the same-excitation encoding this is
/// `cos(gt)|e,0> - i sin(gt)|g,1>` (at the default area:
/// `(|e,0> + i|g,1>)/sqrt(2)`); the single-excitation encoding swaps the
/// roles of the two components.
pub fn target_state(params: &ProtocolParams) -> Result<StateVector> {
    params.validate()?;
    let layout = SystemLayout::new(vec![
        SubsystemSpec::atom("1"),
        cavity("4", params.truncation)?,
    ])?;
    let cos = Complex64::new(params.pulse_area.cos(), 0.0);
    let minus_i_sin = Complex64::new(0.0, -params.pulse_area.sin());
    let mut amps = vec![Complex64::ZERO; layout.total_dim()];
    let e0 = layout.index_of(&[1, 0])?;
    let g1 = layout.index_of(&[0, 1])?;
    match params.encoding {
        Encoding::SameExcitation => {
            amps[e0] = cos;
            amps[g1] = minus_i_sin;
        }
        Encoding::SingleExcitation => {
            amps[g1] = cos;
            amps[e0] = minus_i_sin;
        }
    }
    StateVector::from_amplitudes(layout, amps)
}

/// The detector of a variant and the outcome it keeps.
pub fn detector(params: &ProtocolParams) -> (MeasurementSpec, &'static str) {
    match params.variant {
        Variant::MeasureAtom => (MeasurementSpec::atom_basis("2"), "e"),
        Variant::MeasureCavity => {
            (MeasurementSpec::vacuum_split("3", params.truncation), "vacuum")
        }
    }
}

/// Run the full protocol: prepare, pulse, post-select, and analyze.
pub fn run_swap(params: &ProtocolParams) -> Result<ProtocolResult> {
    let initial = prepare_initial(params)?;
    let pulse = JcInteraction::new("2", "3", params.pulse_area);
    let evolved = jc_propagate(&initial, &pulse)?;

    // Weight of the heralded branch (atom 2 in |e>, cavity 3 empty).
    let layout = evolved.layout();
    let atom2 = layout.position("2")?;
    let cavity3 = layout.position("3")?;
    let useful_probability: f64 = evolved
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(joint, _)| {
            layout.local_index(*joint, atom2) == 1 && layout.local_index(*joint, cavity3) == 0
        })
        .map(|(_, amp)| amp.norm_sqr())
        .sum();

    let (spec, keep) = detector(params);
    let outcomes = evolved.measure(&spec)?;
    let outcome = outcomes
        .into_iter()
        .find(|o| o.name == keep)
        .expect("detector declares the kept outcome");
    let post_state = outcome.post_state.ok_or_else(|| {
        Error::InvalidParams(format!(
            "post-selected outcome `{keep}` has probability below {ZERO_PROB:e} \
             for these parameters"
        ))
    })?;

    let target = target_state(params)?;
    let fidelity = post_state.fidelity_against_pure(&target)?;
    let branches = branch_decomposition(&evolved, &spec, keep, &target)?;

    let bob_state = if params.bob_readout {
        Some(bob_readout(&post_state, READOUT_PULSE_AREA)?)
    } else {
        None
    };

    Ok(ProtocolResult {
        params: params.clone(),
        outcome_probability: outcome.probability,
        fidelity,
        useful_probability,
        post_state,
        target_state: target,
        branches,
        bob_state,
    })
}

/// Append a fresh atom in |g> (labeled `bob`) and exchange it with
/// cavity 4 for a pulse of area `gt`. At [`READOUT_PULSE_AREA`] the
/// single-photon component moves onto the atom completely, turning the
/// atom-cavity entanglement into atom-atom entanglement.
pub fn bob_readout(state: &StateVector, pulse_area: f64) -> Result<StateVector> {
    state.layout().spec("4")?;
    let bob = StateVector::basis_state(
        SystemLayout::new(vec![SubsystemSpec::atom("bob")])?,
        &[0],
    )?;
    let joint = state.tensor(&bob)?;
    jc_propagate(&joint, &JcInteraction::new("bob", "4", pulse_area))
}

/// The maximally entangled two-atom state `(|e g> + |g e>)/sqrt(2)` on
/// (atom 1, atom `bob`) that a perfect swap plus readout produces.
pub fn readout_pair_target() -> Result<StateVector> {
    let layout =
        SystemLayout::new(vec![SubsystemSpec::atom("1"), SubsystemSpec::atom("bob")])?;
    let mut amps = vec![Complex64::ZERO; layout.total_dim()];
    amps[layout.index_of(&[1, 0])?] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amps[layout.index_of(&[0, 1])?] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    StateVector::from_amplitudes(layout, amps)
}

/// Project a state onto one detector outcome without renormalizing, then
/// resolve the projection into orthogonal branches over the basis of the
/// subsystems the target does not cover.
///
/// Branch weights sum to the outcome probability, and the weighted mean
/// of `target_overlap` over the branches equals the post-selected state's
/// fidelity against the target. Branches lighter than
/// [`ZERO_PROB`](crate::qstate::ZERO_PROB) are dropped; the rest come
/// heaviest first.
pub fn branch_decomposition(
    state: &StateVector,
    detector: &MeasurementSpec,
    keep: &str,
    target: &StateVector,
) -> Result<Vec<Branch>> {
    let layout = state.layout();
    let outcomes = state.measure(detector)?;
    let outcome = outcomes
        .iter()
        .find(|o| o.name == keep)
        .ok_or_else(|| {
            Error::InvalidParams(format!("detector has no outcome named `{keep}`"))
        })?;

    // Unnormalized projection: collapsed amplitudes scaled back by the
    // square root of the outcome probability.
    let scale = outcome.probability.sqrt();
    let projected: Vec<Complex64> = match &outcome.post_state {
        Some(post) => post.amplitudes().iter().map(|a| a * scale).collect(),
        None => return Ok(Vec::new()),
    };

    let positions: Vec<usize> = target
        .layout()
        .subsystems()
        .iter()
        .map(|t| {
            let pos = layout
                .position(t.label())
                .map_err(|_| Error::LabelMismatch(t.label().to_string()))?;
            if layout.subsystems()[pos] != *t {
                return Err(Error::LabelMismatch(t.label().to_string()));
            }
            Ok(pos)
        })
        .collect::<Result<_>>()?;
    let target_offsets: Vec<usize> = (0..target.layout().total_dim())
        .map(|t_joint| {
            positions
                .iter()
                .enumerate()
                .map(|(t_pos, &s_pos)| {
                    target.layout().local_index(t_joint, t_pos) * layout.stride(s_pos)
                })
                .sum()
        })
        .collect();

    let comp_positions: Vec<usize> = (0..layout.subsystems().len())
        .filter(|p| !positions.contains(p))
        .collect();
    let comp_dims: Vec<usize> = comp_positions
        .iter()
        .map(|&p| layout.subsystems()[p].dim())
        .collect();
    let comp_count: usize = comp_dims.iter().product();

    let mut branches = Vec::new();
    let mut comp_locals = vec![0usize; comp_positions.len()];
    for _ in 0..comp_count {
        let base: usize = comp_positions
            .iter()
            .zip(&comp_locals)
            .map(|(&p, &l)| l * layout.stride(p))
            .sum();
        let weight: f64 = target_offsets
            .iter()
            .map(|&off| projected[base + off].norm_sqr())
            .sum();
        if weight > ZERO_PROB {
            let overlap_amp: Complex64 = target
                .amplitudes()
                .iter()
                .zip(&target_offsets)
                .map(|(t, &off)| t.conj() * projected[base + off])
                .sum();
            let label = comp_positions
                .iter()
                .zip(&comp_locals)
                .map(|(&p, &l)| {
                    let s = &layout.subsystems()[p];
                    format!("{}={}", s.label(), s.state_name(l))
                })
                .collect::<Vec<_>>()
                .join(" ");
            branches.push(Branch {
                label,
                weight,
                target_overlap: (overlap_amp.norm_sqr() / weight).min(1.0),
            });
        }
        for (l, d) in comp_locals.iter_mut().zip(&comp_dims).rev() {
            *l += 1;
            if *l < *d {
                break;
            }
            *l = 0;
        }
    }
    branches.sort_by(|x, y| {
        y.weight
            .partial_cmp(&x.weight)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(branches)
}
