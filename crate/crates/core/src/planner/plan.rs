use serde::{Deserialize, Serialize};

use crate::channel::Position2D;
use crate::rates::SlotState;

/// All decision variables of a mission, one entry per time slot.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Plan {
    pub p_s: Vec<f64>,
    pub p_j: Vec<f64>,
    pub zeta: Vec<f64>,
    pub q_s: Vec<Position2D>,
    pub q_j: Vec<Position2D>,
}

impl Plan {
    pub fn constant(n: usize, slot: SlotState) -> Self {
        Self {
            p_s: vec![slot.p_s; n],
            p_j: vec![slot.p_j; n],
            zeta: vec![slot.zeta; n],
            q_s: vec![slot.q_s; n],
            q_j: vec![slot.q_j; n],
        }
    }

    pub fn from_slots(slots: &[SlotState]) -> Self {
        Self {
            p_s: slots.iter().map(|s| s.p_s).collect(),
            p_j: slots.iter().map(|s| s.p_j).collect(),
            zeta: slots.iter().map(|s| s.zeta).collect(),
            q_s: slots.iter().map(|s| s.q_s).collect(),
            q_j: slots.iter().map(|s| s.q_j).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.p_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_s.is_empty()
    }

    pub fn slot(&self, n: usize) -> SlotState {
        SlotState {
            p_s: self.p_s[n],
            p_j: self.p_j[n],
            zeta: self.zeta[n],
            q_s: self.q_s[n],
            q_j: self.q_j[n],
        }
    }

    pub fn slots(&self) -> impl Iterator<Item = SlotState> + '_ {
        (0..self.len()).map(|n| self.slot(n))
    }

    /// True when every per-slot vector has the same length.
    pub fn is_consistent(&self) -> bool {
        let n = self.len();
        self.p_j.len() == n && self.zeta.len() == n && self.q_s.len() == n && self.q_j.len() == n
    }
}
