//! Case-file schema and validation.
//!
//! Cases are JSON documents with buses, generators, branches, and a config
//! block. Bus ids must form the contiguous range 1..=n; branch order in the
//! file fixes branch indices everywhere else (masks, reports, cut sets).

use nc_core::netgraph::{EdgeMask, Topology};
use nc_core::scots::{Generator, ScotsCase};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("JSON parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("schema error: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusEntry {
    pub id: usize,
    pub load: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorEntry {
    pub bus: usize,
    pub pmin: f64,
    pub pmax: f64,
    pub cost: f64,
    pub reg_up: f64,
    pub reg_dn: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchEntry {
    pub from: usize,
    pub to: usize,
    pub susceptance: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEntry {
    pub eta: usize,
    pub lambda: usize,
    #[serde(default = "default_switch_budget")]
    pub switch_budget: usize,
    /// Shed penalty; defaults to 1000x the costliest generator.
    #[serde(default)]
    pub voll: Option<f64>,
    #[serde(default = "default_switch_cost")]
    pub switch_cost: f64,
}

fn default_switch_budget() -> usize {
    2
}

fn default_switch_cost() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub buses: Vec<BusEntry>,
    pub generators: Vec<GeneratorEntry>,
    pub branches: Vec<BranchEntry>,
    pub config: ConfigEntry,
}

/// Parses a case document; structural validation happens in `to_case`.
pub fn parse_case_json(bytes: &[u8]) -> Result<CaseFile, CaseError> {
    Ok(serde_json::from_slice(bytes)?)
}

impl CaseFile {
    pub fn to_case(&self) -> Result<ScotsCase, CaseError> {
        let n = self.buses.len();
        if n == 0 {
            return Err(CaseError::Schema("no buses".to_string()));
        }
        let mut seen = vec![false; n];
        for b in &self.buses {
            if b.id == 0 || b.id > n {
                return Err(CaseError::Schema(format!(
                    "bus id {} outside 1..={n}",
                    b.id
                )));
            }
            if seen[b.id - 1] {
                return Err(CaseError::Schema(format!("duplicate bus id {}", b.id)));
            }
            seen[b.id - 1] = true;
        }
        let mut loads = vec![0.0; n];
        for b in &self.buses {
            loads[b.id - 1] = b.load;
        }
        for g in &self.generators {
            if g.bus == 0 || g.bus > n {
                return Err(CaseError::Schema(format!(
                    "generator references unknown bus {}",
                    g.bus
                )));
            }
        }
        for br in &self.branches {
            if br.from == 0 || br.from > n || br.to == 0 || br.to > n {
                return Err(CaseError::Schema(format!(
                    "branch ({}, {}) references unknown buses",
                    br.from, br.to
                )));
            }
        }
        let topology = Topology::new(n, self.branches.iter().map(|b| (b.from, b.to)).collect())
            .map_err(|e| CaseError::Schema(e.to_string()))?;
        let max_cost = self
            .generators
            .iter()
            .map(|g| g.cost)
            .fold(0.0f64, f64::max);
        let case = ScotsCase {
            topology,
            loads,
            generators: self
                .generators
                .iter()
                .map(|g| Generator {
                    bus: g.bus,
                    p_min: g.pmin,
                    p_max: g.pmax,
                    cost: g.cost,
                    reg_up: g.reg_up,
                    reg_down: g.reg_dn,
                })
                .collect(),
            susceptance: self.branches.iter().map(|b| b.susceptance).collect(),
            capacity: self.branches.iter().map(|b| b.capacity).collect(),
            switch_budget: self.config.switch_budget,
            voll: self.config.voll.unwrap_or(1000.0 * max_cost.max(1.0)),
            switch_cost: self.config.switch_cost,
            eta: self.config.eta,
            lambda: self.config.lambda,
        };
        case.validate().map_err(|e| CaseError::Schema(e.to_string()))?;
        Ok(case)
    }
}

/// Parses a 0/1 mask string and checks it against the branch count.
pub fn parse_mask(s: &str, n_b: usize) -> Result<EdgeMask, CaseError> {
    let mask = EdgeMask::parse(s).map_err(CaseError::Schema)?;
    if mask.len() != n_b {
        return Err(CaseError::Schema(format!(
            "mask has {} bits, case has {} branches",
            mask.len(),
            n_b
        )));
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    const G4: &str = r#"{
      "buses": [
        {"id": 1, "load": 0.0}, {"id": 2, "load": 10.0},
        {"id": 3, "load": 8.0}, {"id": 4, "load": 5.0}
      ],
      "generators": [
        {"bus": 1, "pmin": 0.0, "pmax": 40.0, "cost": 5.0, "reg_up": 40.0, "reg_dn": 40.0}
      ],
      "branches": [
        {"from": 1, "to": 2, "susceptance": 10.0, "capacity": 40.0},
        {"from": 2, "to": 3, "susceptance": 10.0, "capacity": 40.0},
        {"from": 3, "to": 4, "susceptance": 10.0, "capacity": 40.0},
        {"from": 1, "to": 3, "susceptance": 10.0, "capacity": 40.0}
      ],
      "config": {"eta": 2, "lambda": 1}
    }"#;

    #[test]
    fn parses_and_validates() {
        let file = parse_case_json(G4.as_bytes()).unwrap();
        let case = file.to_case().unwrap();
        assert_eq!(case.topology.bus_count(), 4);
        assert_eq!(case.voll, 5000.0);
        assert_eq!(case.switch_budget, 2);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(parse_case_json(b"{").is_err());
        assert!(parse_case_json(b"[]").is_err());
        let dup = G4.replace(r#""id": 2"#, r#""id": 1"#);
        let file = parse_case_json(dup.as_bytes()).unwrap();
        assert!(file.to_case().is_err());
        let bad_bus = G4.replace(r#"{"bus": 1,"#, r#"{"bus": 9,"#);
        let file = parse_case_json(bad_bus.as_bytes()).unwrap();
        assert!(file.to_case().is_err());
    }

    #[test]
    fn mask_parsing() {
        assert!(parse_mask("1101", 4).is_ok());
        assert!(parse_mask("11011", 4).is_err());
        assert!(parse_mask("12", 2).is_err());
        assert!(parse_mask("", 0).is_err());
    }
}
