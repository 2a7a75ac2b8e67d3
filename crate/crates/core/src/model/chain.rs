use super::{ChainId, FlowId, ModelError, NodeId, VnfTypeId};

/// A traffic flow with a per-slot bandwidth trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub id: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    /// Service type; decides which chain serves the flow.
    pub service: String,
    /// `B_f(t)`, looped when the simulation runs past its end.
    pub bandwidth: Vec<f64>,
    /// `D_f`, copied from the owning chain on assignment.
    pub max_delay: f64,
}

impl Flow {
    pub fn bandwidth_at(&self, slot: usize) -> f64 {
        if self.bandwidth.is_empty() {
            0.0
        } else {
            self.bandwidth[slot % self.bandwidth.len()]
        }
    }
}

/// An ordered sequence of VNFs serving every flow of one service type.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceChain {
    pub id: ChainId,
    pub service: String,
    pub vnfs: Vec<VnfTypeId>,
    /// `D_q`.
    pub max_delay: f64,
    pub flows: Vec<FlowId>,
}

impl ServiceChain {
    pub fn new(id: ChainId, service: impl Into<String>, vnfs: Vec<VnfTypeId>, max_delay: f64) -> Self {
        Self { id, service: service.into(), vnfs, max_delay, flows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.vnfs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vnfs.is_empty()
    }
}

/// Partitions flows among chains by service type and stamps each flow with
/// its chain's delay bound. Existing memberships are replaced.
pub fn assign_flows_to_chains(
    flows: &mut [Flow],
    mut chains: Vec<ServiceChain>,
) -> Result<Vec<ServiceChain>, ModelError> {
    for c in &mut chains {
        c.flows.clear();
    }
    for f in flows.iter_mut() {
        let matching: Vec<usize> =
            chains.iter().enumerate().filter(|(_, c)| c.service == f.service).map(|(i, _)| i).collect();
        if matching.len() != 1 {
            return Err(ModelError::Assignment {
                flow: f.id,
                service: f.service.clone(),
                matches: matching.len(),
            });
        }
        let chain = &mut chains[matching[0]];
        chain.flows.push(f.id);
        f.max_delay = chain.max_delay;
    }
    Ok(chains)
}
