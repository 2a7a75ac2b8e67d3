use std::fmt::Write as _;
use std::path::Path;

use super::{parse_field, read_file, ModelError, VnfTypeId};

/// A VNF type and its cost/delay coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct VnfType {
    pub id: VnfTypeId,
    /// Processing coefficient `t_v^p`: fixed processing delay and resource per
    /// packet-rate unit.
    pub proc_coeff: f64,
    /// Resource allocation (configuration) delay `t_v^c`.
    pub config_delay: f64,
    /// Deployment delay `t_v^d`.
    pub deploy_delay: f64,
    /// Deployment cost `D_v`.
    pub deploy_cost: f64,
    /// Basic energy `λ_v` of a running VM of this type, per slot.
    pub vm_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VnfCatalog {
    types: Vec<VnfType>,
}

impl VnfCatalog {
    pub fn new(mut types: Vec<VnfType>) -> Result<Self, ModelError> {
        if types.is_empty() {
            return Err(ModelError::invalid("VNF catalog is empty"));
        }
        types.sort_by_key(|t| t.id);
        for w in types.windows(2) {
            if w[0].id == w[1].id {
                return Err(ModelError::invalid(format!("duplicate VNF type {}", w[0].id)));
            }
        }
        for (idx, t) in types.iter().enumerate() {
            if t.id != idx {
                return Err(ModelError::invalid(format!(
                    "VNF type ids must be contiguous from 0; missing type {idx}"
                )));
            }
            let coeffs = [t.proc_coeff, t.config_delay, t.deploy_delay, t.deploy_cost, t.vm_energy];
            if coeffs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                return Err(ModelError::invalid(format!("VNF type {idx}: coefficients must be >= 0")));
            }
        }
        Ok(Self { types })
    }

    pub fn get(&self, id: VnfTypeId) -> &VnfType {
        &self.types[id]
    }

    pub fn types(&self) -> &[VnfType] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn max_vm_energy(&self) -> f64 {
        self.types.iter().map(|t| t.vm_energy).fold(0.0, f64::max)
    }

    /// Lines `id,proc_coeff,config_delay,deploy_delay,deploy_cost,vm_energy`.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut types = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 6 {
                return Err(ModelError::parse(
                    line_no,
                    "expected id,proc_coeff,config_delay,deploy_delay,deploy_cost,vm_energy",
                ));
            }
            types.push(VnfType {
                id: parse_field(f[0], line_no, "id")?,
                proc_coeff: parse_field(f[1], line_no, "proc_coeff")?,
                config_delay: parse_field(f[2], line_no, "config_delay")?,
                deploy_delay: parse_field(f[3], line_no, "deploy_delay")?,
                deploy_cost: parse_field(f[4], line_no, "deploy_cost")?,
                vm_energy: parse_field(f[5], line_no, "vm_energy")?,
            });
        }
        Self::new(types)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.types {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                t.id, t.proc_coeff, t.config_delay, t.deploy_delay, t.deploy_cost, t.vm_energy
            );
        }
        out
    }
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<VnfCatalog, ModelError> {
    let path = path.as_ref();
    VnfCatalog::parse(&read_file(path)?).map_err(|e| e.in_file(path))
}
