//! CNOT-equivalent cost of circuits.

use serde::{Deserialize, Serialize};

use super::{Circuit, Gate, GateKind};

/// CNOT-equivalents charged for multi-qubit operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateCostModel {
    /// CNOT or CZ.
    pub two_qubit: u64,
    /// Doubly controlled X or Z.
    pub ccz: u64,
    /// `c`-controlled Z for `c >= 3` costs `mc_per_control * (c - 1)`.
    pub mc_per_control: u64,
    /// Singly controlled single-qubit rotation.
    pub controlled_rotation: u64,
}

impl Default for GateCostModel {
    fn default() -> Self {
        Self {
            two_qubit: 1,
            ccz: 6,
            mc_per_control: 16,
            controlled_rotation: 2,
        }
    }
}

impl GateCostModel {
    /// Cost of a Pauli (X or Z) on one target conditioned on `c` controls.
    pub fn multi_controlled(&self, c: usize) -> u64 {
        match c {
            0 => 0,
            1 => self.two_qubit,
            2 => self.ccz,
            _ => self.mc_per_control * (c as u64 - 1),
        }
    }

    /// Cost of a general single-qubit gate conditioned on `c` controls.
    pub fn controlled_single(&self, c: usize) -> u64 {
        match c {
            0 => 0,
            1 => self.controlled_rotation,
            _ => self.multi_controlled(c),
        }
    }

    /// CNOT ladder plus the (controlled) central rotation of one gadget string.
    pub fn gadget_string(&self, weight: usize, controls: usize) -> u64 {
        if weight == 0 {
            return if controls == 0 { 0 } else { self.controlled_single(controls - 1) };
        }
        2 * (weight as u64 - 1) * self.two_qubit + self.controlled_single(controls)
    }

    pub fn gate(&self, g: &Gate) -> u64 {
        let c = g.control_qubits().len();
        match g.kind {
            GateKind::GeneralR
            | GateKind::RyOnly
            | GateKind::Rx
            | GateKind::Rz
            | GateKind::Hadamard
            | GateKind::ControlledR => self.controlled_single(c),
            GateKind::Cnot | GateKind::Cz | GateKind::Ccz | GateKind::Ncz => self.multi_controlled(c),
            GateKind::PauliGadget | GateKind::ControlledPauliGadget => g
                .generator
                .as_ref()
                .map(|gen| {
                    gen.strings()
                        .iter()
                        .map(|(p, _)| self.gadget_string(p.weight(), c))
                        .sum()
                })
                .unwrap_or(0),
        }
    }
}

pub fn count_nonlocal_gates(c: &Circuit, model: &GateCostModel) -> u64 {
    c.gates().iter().map(|g| model.gate(g)).sum()
}

/// Number of gates touching more than one qubit, each counted once.
pub fn count_multiqubit_gates(c: &Circuit) -> u64 {
    c.gates()
        .iter()
        .filter(|g| g.qubits.len() + g.extra_controls.len() > 1)
        .count() as u64
}
