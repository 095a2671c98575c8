//! Clock-diagram rendering of qutrit register states.
//!
//! The clock is a circle split into three sectors, one per two-level
//! subspace, each divided into eight slots for the subspace's basis strings.
//! Every occupied basis state gets an arrow whose length is the modulus of
//! its amplitude. (The narrative prose sometimes quotes squared moduli;
//! the renderer follows the amplitude definition.) States with a basis
//! string mixing all three levels are not representable.

use alloc::string::String;
use alloc::vec::Vec;

use core::f64::consts::PI;

use crate::circuit::{apply_circuit, ghz_circuit_with, ghz_free_theta, GHZ_STAGE_ENDS};
use crate::gates::{CnotModelParams, Subspace};
use crate::state::{digits_of, PureState};
use crate::{Error, Result};

/// Amplitudes below this modulus are treated as unoccupied.
pub const ARROW_TOL: f64 = 1e-9;

/// Sector ordering of the clock face, clockwise from 12 o'clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClockLayout {
    pub sectors: [Subspace; 3],
}

impl Default for ClockLayout {
    fn default() -> Self {
        ClockLayout { sectors: [Subspace::S01, Subspace::S12, Subspace::S02] }
    }
}

impl ClockLayout {
    /// Sector for a basis string: the first sector whose level pair covers
    /// every distinct level of the string. Single-level strings match two
    /// sectors; taking the first in layout order reproduces the narrative
    /// placement (`|000>` at 12 o'clock, `|111>` late in the (01) sector,
    /// `|222>` late in the (12) sector).
    fn sector_of(&self, digits: &[u8]) -> Option<(usize, Subspace)> {
        let mut used = [false; 3];
        for &d in digits {
            used[d as usize] = true;
        }
        if used.iter().filter(|u| **u).count() > 2 {
            return None;
        }
        for (k, s) in self.sectors.iter().enumerate() {
            let (a, b) = s.levels();
            let covered = used
                .iter()
                .enumerate()
                .all(|(level, in_use)| !in_use || level == a || level == b);
            if covered {
                return Some((k, *s));
            }
        }
        None
    }
}

/// One arrow of a clock frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockArrow {
    pub subspace: Subspace,
    /// Slot within the sector (0..8): binary reading of the string with the
    /// sector's lower level as 0, leftmost qutrit most significant.
    pub slot: usize,
    pub basis_index: usize,
    pub label: String,
    /// Radians clockwise from 12 o'clock.
    pub angle: f64,
    /// Amplitude modulus.
    pub length: f64,
}

/// Arrows of one state, with a stage label for narrative sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockFrame {
    pub stage: String,
    pub arrows: Vec<ClockArrow>,
}

impl ClockFrame {
    /// Arrow count (occupied basis states).
    pub fn len(&self) -> usize {
        self.arrows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrows.is_empty()
    }
}

/// Renders a state as a clock frame under the given sector layout.
pub fn render_clock(state: &PureState, layout: &ClockLayout) -> Result<ClockFrame> {
    let n = state.n_qutrits();
    let sector_span = 2.0 * PI / 3.0;
    let slot_span = sector_span / 8.0;
    let mut arrows = Vec::new();
    for (i, amp) in state.amplitudes().iter().enumerate() {
        let length = amp.norm();
        if length <= ARROW_TOL {
            continue;
        }
        let digits = digits_of(i, n);
        let (sector_idx, subspace) = layout
            .sector_of(&digits)
            .ok_or(Error::NotClockRepresentable { basis_index: i })?;
        let (lo, _) = subspace.levels();
        let slot = digits
            .iter()
            .fold(0usize, |acc, &d| (acc << 1) | usize::from(d != lo as u8));
        let mut label = String::new();
        for d in &digits {
            label.push(char::from(b'0' + d));
        }
        arrows.push(ClockArrow {
            subspace,
            slot,
            basis_index: i,
            label,
            angle: sector_idx as f64 * sector_span + slot as f64 * slot_span,
            length,
        });
    }
    Ok(ClockFrame { stage: String::new(), arrows })
}

/// Clock frames of the GHZ circuit narrative: the initial state and the
/// state after each of the four stages.
pub fn ghz_stage_frames(cnot: CnotModelParams, free_theta: f64) -> Result<Vec<ClockFrame>> {
    let layout = ClockLayout::default();
    let circuit = ghz_circuit_with(free_theta, cnot);
    let mut frames = Vec::with_capacity(5);
    let mut frame = render_clock(&PureState::zero(3), &layout)?;
    frame.stage = String::from("initial");
    frames.push(frame);
    for (k, end) in GHZ_STAGE_ENDS.iter().enumerate() {
        let st = apply_circuit(&circuit.prefix(*end), &PureState::zero(3))?;
        let mut frame = render_clock(&st, &layout)?;
        frame.stage = String::from(match k {
            0 => "stage a",
            1 => "stage b",
            2 => "stage c",
            _ => "stage d",
        });
        frames.push(frame);
    }
    Ok(frames)
}

/// Convenience: the five narrative frames with the default free angle.
pub fn ghz_narrative_frames(cnot: CnotModelParams) -> Result<Vec<ClockFrame>> {
    ghz_stage_frames(cnot, ghz_free_theta())
}
