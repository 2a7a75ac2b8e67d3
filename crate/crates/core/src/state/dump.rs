//! Per-slot state dump lines.

use std::fmt::Write as _;

use super::{NetworkState, ResourceReport};

/// `slot,chain,vnf_index,node` for every mapped VNF.
pub fn placement_rows(state: &NetworkState) -> String {
    let mut out = String::new();
    for (q, nodes) in state.placements().iter().enumerate() {
        for (m, node) in nodes.iter().enumerate() {
            let _ = writeln!(out, "{},{q},{m},{node}", state.slot());
        }
    }
    out
}

/// `slot,node,type,requested,allocated` for every non-zero request.
pub fn resource_rows(slot: usize, report: &ResourceReport) -> String {
    let mut out = String::new();
    for (i, (req, alloc)) in report.requested.iter().zip(&report.allocated).enumerate() {
        for (v, (c, r)) in req.iter().zip(alloc).enumerate() {
            if *c > 0.0 {
                let _ = writeln!(out, "{slot},{i},{v},{c},{r}");
            }
        }
    }
    out
}
