//! Synthetic and file-backed bandwidth traces.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{parse_field, read_file, Flow, ModelError, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Sinusoid,
    Step,
    Trace,
}

impl FromStr for ProfileKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sinusoid" => Ok(Self::Sinusoid),
            "step" => Ok(Self::Step),
            "trace" => Ok(Self::Trace),
            other => Err(ModelError::UnknownProfile(other.to_string())),
        }
    }
}

/// Per-flow bandwidth values keyed by `(flow, slot)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceTable {
    series: Vec<Vec<f64>>,
}

impl TraceTable {
    /// Lines `flow_id,slot,bandwidth`; every flow must cover every slot.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut rows: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(ModelError::parse(line_no, "expected flow_id,slot,bandwidth"));
            }
            let flow: usize = parse_field(f[0], line_no, "flow_id")?;
            let slot: usize = parse_field(f[1], line_no, "slot")?;
            let bw: f64 = parse_field(f[2], line_no, "bandwidth")?;
            if !(bw >= 0.0 && bw.is_finite()) {
                return Err(ModelError::parse(line_no, "bandwidth must be non-negative"));
            }
            if rows.insert((flow, slot), bw).is_some() {
                return Err(ModelError::parse(line_no, format!("duplicate entry for flow {flow} slot {slot}")));
            }
        }
        let n_flows = rows.keys().map(|k| k.0 + 1).max().unwrap_or(0);
        let n_slots = rows.keys().map(|k| k.1 + 1).max().unwrap_or(0);
        let mut series = vec![vec![0.0; n_slots]; n_flows];
        for f in 0..n_flows {
            for t in 0..n_slots {
                series[f][t] = *rows
                    .get(&(f, t))
                    .ok_or_else(|| ModelError::invalid(format!("trace missing flow {f} slot {t}")))?;
            }
        }
        Ok(Self { series })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        Self::parse(&read_file(path)?).map_err(|e| e.in_file(path))
    }

    pub fn n_flows(&self) -> usize {
        self.series.len()
    }

    pub fn series(&self, flow: usize) -> &[f64] {
        &self.series[flow]
    }
}

/// Shape of the generated bandwidth series.
#[derive(Debug, Clone, PartialEq)]
pub enum TrafficProfile {
    /// `B_f(t) = max(0, m_f + amplitude * sin(2πt/period + φ_f))`, with `m_f`
    /// drawn from `mean * [1 - jitter, 1 + jitter]` and `φ_f` from
    /// `2π * [phase, phase + phase_spread)`.
    Sinusoid { mean: f64, amplitude: f64, period: f64, jitter: f64, phase: f64, phase_spread: f64 },
    /// `before` for `t < at`, `after` from then on.
    Step { before: f64, after: f64, at: usize },
    /// Values read verbatim from a trace table.
    Trace(TraceTable),
}

impl TrafficProfile {
    pub fn constant(level: f64) -> Self {
        Self::Step { before: level, after: level, at: 0 }
    }

    pub fn kind(&self) -> ProfileKind {
        match self {
            Self::Sinusoid { .. } => ProfileKind::Sinusoid,
            Self::Step { .. } => ProfileKind::Step,
            Self::Trace(_) => ProfileKind::Trace,
        }
    }
}

/// Generates `n_flows` flows over `slots` slots. Endpoints are drawn
/// uniformly from the topology's nodes (distinct when possible) and service
/// types are dealt round-robin from `services`. Deterministic in `seed`.
pub fn generate_traffic(
    profile: &TrafficProfile,
    n_flows: usize,
    slots: usize,
    seed: u64,
    topology: &Topology,
    services: &[String],
) -> Result<Vec<Flow>, ModelError> {
    if n_flows == 0 || slots == 0 {
        return Err(ModelError::invalid("traffic needs at least one flow and one slot"));
    }
    if services.is_empty() {
        return Err(ModelError::invalid("traffic needs at least one service type"));
    }
    if let TrafficProfile::Trace(table) = profile {
        if table.n_flows() < n_flows {
            return Err(ModelError::invalid(format!(
                "trace has {} flows, {n_flows} requested",
                table.n_flows()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_nodes = topology.len();
    let mut flows = Vec::with_capacity(n_flows);
    for id in 0..n_flows {
        let src = rng.gen_range(0..n_nodes);
        let dst = if n_nodes > 1 {
            let d = rng.gen_range(0..n_nodes - 1);
            if d >= src {
                d + 1
            } else {
                d
            }
        } else {
            src
        };
        let bandwidth = match profile {
            TrafficProfile::Sinusoid { mean, amplitude, period, jitter, phase, phase_spread } => {
                let m = mean * (1.0 + jitter * (2.0 * rng.gen::<f64>() - 1.0));
                let phase = TAU * (phase + phase_spread * rng.gen::<f64>());
                (0..slots)
                    .map(|t| (m + amplitude * (TAU * t as f64 / period + phase).sin()).max(0.0))
                    .collect()
            }
            TrafficProfile::Step { before, after, at } => {
                (0..slots).map(|t| if t < *at { *before } else { *after }).collect()
            }
            TrafficProfile::Trace(table) => {
                let s = table.series(id);
                (0..slots).map(|t| s[t % s.len()]).collect()
            }
        };
        flows.push(Flow {
            id,
            src,
            dst,
            service: services[id % services.len()].clone(),
            bandwidth,
            max_delay: 0.0,
        });
    }
    Ok(flows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topo() -> Topology {
        Topology::parse("[nodes]\n0,10,1,1\n1,10,1,1\n2,10,1,1\n[links]\n0,1,1\n1,2,1\n").unwrap()
    }

    #[test]
    fn step_profile_is_constant() {
        let flows =
            generate_traffic(&TrafficProfile::constant(4.0), 1, 10, 0, &topo(), &["a".into()]).unwrap();
        assert_eq!(flows[0].bandwidth, vec![4.0; 10]);
    }

    #[test]
    fn sinusoid_is_deterministic() {
        let p = TrafficProfile::Sinusoid { mean: 5.0, amplitude: 2.0, period: 8.0, jitter: 0.2, phase: 0.0, phase_spread: 1.0 };
        let a = generate_traffic(&p, 2, 20, 7, &topo(), &["a".into()]).unwrap();
        let b = generate_traffic(&p, 2, 20, 7, &topo(), &["a".into()]).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().flat_map(|f| &f.bandwidth).all(|&x| x >= 0.0));
    }

    #[test]
    fn trace_values_echoed() {
        let table = TraceTable::parse("0,0,1.5\n0,1,2.5\n1,0,3\n1,1,0\n").unwrap();
        let flows = generate_traffic(&TrafficProfile::Trace(table), 2, 2, 0, &topo(), &["a".into()]).unwrap();
        assert_eq!(flows[0].bandwidth, vec![1.5, 2.5]);
        assert_eq!(flows[1].bandwidth, vec![3.0, 0.0]);
    }

    #[test]
    fn unknown_profile_name() {
        assert!(matches!("bursty".parse::<ProfileKind>(), Err(ModelError::UnknownProfile(_))));
    }

    #[test]
    fn incomplete_trace_rejected() {
        assert!(TraceTable::parse("0,0,1\n0,2,1\n").is_err());
    }
}
