//! Closed-form evaluators, parameter sweeps and the timing budget.
//!
//! The closed forms here are exact branch ratios of the post-selected
//! state, not approximations, so the simulation must reproduce them to
//! numerical precision; sweeps record both routes plus their deviation.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::SQRT_2;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::protocol::{run_swap, Encoding, ProtocolParams, Variant, DEFAULT_PULSE_AREA};

/// Environment variable capping how many worker threads a sweep uses.
/// Unset, empty or unparseable values fall back to the global default.
pub const THREADS_ENV: &str = "CAVITY_SWAP_THREADS";

/// Default coupling strength g = 2 pi x 25 kHz, in rad/s.
pub const DEFAULT_COUPLING: f64 = 2.0 * std::f64::consts::PI * 25e3;

/// Default atomic radiative lifetime, seconds.
pub const DEFAULT_RADIATIVE_LIFETIME: f64 = 3e-2;

/// Default cavity field lifetime, seconds.
pub const DEFAULT_CAVITY_LIFETIME: f64 = 1e-3;

/// Default ratio of total protocol time to one interaction time.
pub const DEFAULT_BUDGET_FACTOR: f64 = 10.0;

fn amplitudes(b: f64, k: f64) -> Result<(f64, f64, f64, f64)> {
    let params = ProtocolParams {
        b,
        k,
        ..ProtocolParams::default()
    };
    params.validate()?;
    Ok(params.amplitudes())
}

/// Post-selected fidelity for matched pairs (k = 0):
/// `b^2 / (b^2 + (1 - b^2) cos^2(sqrt(2) gt))`.
///
/// Exact for both detection variants and any pulse area; the only
/// infidelity is the surviving double-excitation branch.
pub fn ideal_fidelity(b: f64, pulse_area: f64) -> Result<f64> {
    amplitudes(b, 0.0)?;
    let b2 = b * b;
    let c = (SQRT_2 * pulse_area).cos();
    Ok(b2 / (b2 + (1.0 - b2) * c * c))
}

/// Atom-variant fidelity with an amplitude mismatch, at a balanced pulse
/// (`cos^2 gt = 1/2`, as at the default area):
///
/// `(a b' + b a')^2 / 2 / (a^2 b'^2 + b^2 a'^2 + 2 a^2 a'^2 cos^2(sqrt(2) gt))`.
pub fn mismatch_fidelity(b: f64, k: f64, pulse_area: f64) -> Result<f64> {
    let (a, b, ap, bp) = amplitudes(b, k)?;
    let c = (SQRT_2 * pulse_area).cos();
    let numerator = 0.5 * (a * bp + b * ap).powi(2);
    let denominator =
        a * a * bp * bp + b * b * ap * ap + 2.0 * a * a * ap * ap * c * c;
    Ok(numerator / denominator)
}

/// Success probability with an amplitude mismatch, at a balanced pulse:
/// the heralded-branch weight
/// `((1-b^2) b^2 (1+k)^2 + b^2 (1 - b^2 (1+k)^2)) / 2`. Reduces to
/// `b^2 (1 - b^2)` at k = 0.
pub fn mismatch_success_probability(b: f64, k: f64) -> Result<f64> {
    let (a, b, ap, bp) = amplitudes(b, k)?;
    Ok(0.5 * (a * a * bp * bp + b * b * ap * ap))
}

/// Heralded-branch weight at any pulse area:
/// `a^2 b'^2 cos^2(gt) + b^2 a'^2 sin^2(gt)`, the same for both variants
/// and encodings. At a balanced pulse this is
/// [`mismatch_success_probability`].
pub fn exact_success_probability(b: f64, k: f64, pulse_area: f64) -> Result<f64> {
    let (a, b, ap, bp) = amplitudes(b, k)?;
    let (c, s) = (pulse_area.cos(), pulse_area.sin());
    Ok(a * a * bp * bp * c * c + b * b * ap * ap * s * s)
}

/// Post-selected fidelity at any pulse area, as an exact branch ratio.
///
/// The target component weighs `(a b' cos^2 gt + b a' sin^2 gt)^2`; the
/// denominator adds the orthogonal branch the variant's detector lets
/// through (the double-excitation branch for the atom detector, the
/// all-ground branch for the vacuum detector). Reduces to
/// [`ideal_fidelity`] at k = 0 and to [`mismatch_fidelity`] at a
/// balanced pulse.
pub fn exact_fidelity(variant: Variant, b: f64, k: f64, pulse_area: f64) -> Result<f64> {
    let (a, b, ap, bp) = amplitudes(b, k)?;
    let (c2, s2) = {
        let (c, s) = (pulse_area.cos(), pulse_area.sin());
        (c * c, s * s)
    };
    let numerator = (a * bp * c2 + b * ap * s2).powi(2);
    let heralded = a * a * bp * bp * c2 + b * b * ap * ap * s2;
    let leaked = match variant {
        Variant::MeasureAtom => {
            let cc = (SQRT_2 * pulse_area).cos();
            a * a * ap * ap * cc * cc
        }
        Variant::MeasureCavity => b * b * bp * bp,
    };
    Ok(numerator / (heralded + leaked))
}

/// An inclusive numeric grid `start, start + step, ..` up to `stop`.
///
/// `stop < start` is the empty grid. A zero step is only meaningful for
/// the single-point grid `start == stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridRange {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    /// The single-point grid {value}.
    pub fn fixed(value: f64) -> Self {
        Self {
            start: value,
            stop: value,
            step: 0.0,
        }
    }

    /// Materialize the grid points.
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(Error::InvalidParams("grid bounds must be finite".into()));
        }
        if self.step < 0.0 {
            return Err(Error::InvalidParams(format!(
                "grid step must not be negative, got {}",
                self.step
            )));
        }
        if self.stop < self.start {
            return Ok(Vec::new());
        }
        if self.step == 0.0 {
            if self.start == self.stop {
                return Ok(vec![self.start]);
            }
            return Err(Error::InvalidParams(
                "a zero grid step needs start == stop".into(),
            ));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| self.start + i as f64 * self.step).collect())
    }
}

/// A full sweep specification. The default is the fidelity curve preset:
/// the atom variant over b in [0.05, 0.95] step 0.01 at the default pulse
/// area with matched amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub variant: Variant,
    pub encoding: Encoding,
    pub b: GridRange,
    pub k: GridRange,
    pub gt: GridRange,
    pub truncation: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            variant: Variant::MeasureAtom,
            encoding: Encoding::SameExcitation,
            b: GridRange::new(0.05, 0.95, 0.01),
            k: GridRange::fixed(0.0),
            gt: GridRange::fixed(DEFAULT_PULSE_AREA),
            truncation: 3,
        }
    }
}

/// One sweep grid point: the three simulated scalars, the two closed
/// forms, and the worst absolute deviation between the routes.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub b: f64,
    pub k: f64,
    pub gt: f64,
    pub variant: Variant,
    pub outcome_probability: f64,
    pub fidelity: f64,
    pub useful_probability: f64,
    pub fidelity_formula: f64,
    pub probability_formula: f64,
    pub abs_deviation: f64,
}

fn sweep_point(cfg: &SweepConfig, b: f64, k: f64, gt: f64) -> Result<SweepRecord> {
    let params = ProtocolParams {
        b,
        k,
        pulse_area: gt,
        variant: cfg.variant,
        encoding: cfg.encoding,
        bob_readout: false,
        truncation: cfg.truncation,
    };
    let result = run_swap(&params)?;
    let fidelity_formula = exact_fidelity(cfg.variant, b, k, gt)?;
    let probability_formula = exact_success_probability(b, k, gt)?;
    let abs_deviation = (result.fidelity - fidelity_formula)
        .abs()
        .max((result.useful_probability - probability_formula).abs());
    Ok(SweepRecord {
        b,
        k,
        gt,
        variant: cfg.variant,
        outcome_probability: result.outcome_probability,
        fidelity: result.fidelity,
        useful_probability: result.useful_probability,
        fidelity_formula,
        probability_formula,
        abs_deviation,
    })
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()?
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|&n| n >= 1)
}

/// Evaluate every grid point of a sweep, in row-major (b, k, gt) order.
///
/// Points are independent and evaluated in parallel; the record order and
/// content are deterministic regardless of thread count, and
/// [`THREADS_ENV`] caps the worker threads. Every grid point is validated
/// before any work starts, so an invalid corner fails the whole sweep.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    let bs = cfg.b.points()?;
    let ks = cfg.k.points()?;
    let gts = cfg.gt.points()?;
    let mut grid = Vec::with_capacity(bs.len() * ks.len() * gts.len());
    for &b in &bs {
        for &k in &ks {
            for &gt in &gts {
                ProtocolParams {
                    b,
                    k,
                    pulse_area: gt,
                    truncation: cfg.truncation,
                    ..ProtocolParams::default()
                }
                .validate()
                .map_err(|e| {
                    Error::InvalidParams(format!("grid point b={b} k={k} gt={gt}: {e}"))
                })?;
                grid.push((b, k, gt));
            }
        }
    }
    let eval = || -> Result<Vec<SweepRecord>> {
        grid.par_iter()
            .map(|&(b, k, gt)| sweep_point(cfg, b, k, gt))
            .collect()
    };
    match thread_cap() {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidParams(format!("cannot build thread pool: {e}")))?
            .install(eval),
        None => eval(),
    }
}

/// Header of the CSV emitted by [`write_csv`].
pub const CSV_HEADER: &str = "b,k,gt,variant,outcome_probability,fidelity,\
useful_probability,fidelity_formula,probability_formula,abs_deviation";

/// Write sweep records as CSV with full float precision. Identical
/// records always produce identical bytes.
pub fn write_csv<W: Write>(mut out: W, records: &[SweepRecord]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.b,
            r.k,
            r.gt,
            r.variant,
            r.outcome_probability,
            r.fidelity,
            r.useful_probability,
            r.fidelity_formula,
            r.probability_formula,
            r.abs_deviation
        )?;
    }
    Ok(())
}

/// Write sweep records as a pretty-printed JSON array (full precision,
/// deterministic bytes).
pub fn write_json<W: Write>(mut out: W, records: &[SweepRecord]) -> io::Result<()> {
    let text = serde_json::to_string_pretty(records).map_err(io::Error::other)?;
    writeln!(out, "{text}")
}

/// Minimal static SVG line plot of fidelity (simulated) against b.
pub fn fidelity_plot_svg(records: &[SweepRecord]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    if records.is_empty() {
        svg.push_str(
            "<text x=\"320\" y=\"200\" text-anchor=\"middle\" \
             font-family=\"sans-serif\">no records</text>\n</svg>\n",
        );
        return svg;
    }
    let bmin = records.iter().map(|r| r.b).fold(f64::INFINITY, f64::min);
    let bmax = records.iter().map(|r| r.b).fold(f64::NEG_INFINITY, f64::max);
    let span = if bmax > bmin { bmax - bmin } else { 1.0 };
    let x = |b: f64| M + (b - bmin) / span * (W - 2.0 * M);
    let y = |f: f64| M + (1.0 - f) * (H - 2.0 * M);
    // Horizontal guides every 0.25 of fidelity.
    for i in 0..=4 {
        let fy = y(i as f64 * 0.25);
        svg.push_str(&format!(
            "<line x1=\"{M}\" y1=\"{fy:.2}\" x2=\"{:.2}\" y2=\"{fy:.2}\" \
             stroke=\"#ddd\"/>\n",
            W - M
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"12\" \
             font-family=\"sans-serif\">{:.2}</text>\n",
            M - 6.0,
            fy + 4.0,
            i as f64 * 0.25
        ));
    }
    let points: Vec<String> = records
        .iter()
        .map(|r| format!("{:.2},{:.2}", x(r.b), y(r.fidelity)))
        .collect();
    svg.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#1f6fb4\" stroke-width=\"2\" points=\"{}\"/>\n",
        points.join(" ")
    ));
    svg.push_str(&format!(
        "<line x1=\"{M}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#333\"/>\n",
        H - M,
        W - M,
        H - M
    ));
    svg.push_str(&format!(
        "<line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{:.2}\" stroke=\"#333\"/>\n",
        H - M
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"12\" \
         font-family=\"sans-serif\">b = {bmin}</text>\n",
        M,
        H - M + 20.0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"12\" \
         font-family=\"sans-serif\">b = {bmax}</text>\n",
        W - M,
        H - M + 20.0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"14\" \
         font-family=\"sans-serif\">post-selected fidelity vs b</text>\n",
        W / 2.0,
        M - 20.0
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Wall-clock feasibility of the protocol against coherence lifetimes.
#[derive(Debug, Clone, Serialize)]
pub struct TimingBudget {
    /// Coupling strength g in rad/s.
    pub coupling_rad_per_s: f64,
    pub radiative_lifetime_s: f64,
    pub cavity_lifetime_s: f64,
    /// Total time as a multiple of one interaction time.
    pub budget_factor: f64,
    /// Duration of one exchange pulse at the default area: (7 pi/4) / g.
    pub interaction_time_s: f64,
    /// `budget_factor` x interaction time: preparation, transits and
    /// detection included as a rule-of-thumb multiple.
    pub total_time_s: f64,
    /// Whether the total stays below both lifetimes.
    pub feasible: bool,
}

/// Compute the timing budget for the default pulse area.
pub fn timing_budget(
    coupling_rad_per_s: f64,
    radiative_lifetime_s: f64,
    cavity_lifetime_s: f64,
    budget_factor: f64,
) -> Result<TimingBudget> {
    for (name, v) in [
        ("coupling", coupling_rad_per_s),
        ("radiative lifetime", radiative_lifetime_s),
        ("cavity lifetime", cavity_lifetime_s),
        ("budget factor", budget_factor),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParams(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    let interaction_time_s = DEFAULT_PULSE_AREA / coupling_rad_per_s;
    let total_time_s = budget_factor * interaction_time_s;
    Ok(TimingBudget {
        coupling_rad_per_s,
        radiative_lifetime_s,
        cavity_lifetime_s,
        budget_factor,
        interaction_time_s,
        total_time_s,
        feasible: total_time_s < radiative_lifetime_s && total_time_s < cavity_lifetime_s,
    })
}
