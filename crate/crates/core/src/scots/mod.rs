//! Two-stage security-constrained transmission switching with connectedness
//! criteria.
//!
//! First stage: dispatch plus switching over a DC network, with the switch
//! mask constrained to stay connected and cut-set branches pinned on. Second
//! stage, per contingency scenario: regulation, load shedding, and corrective
//! switching, with the criteria blocks tying the post-contingency
//! classification to what corrective switching may do. Scenario costs enter
//! either probability-weighted or through a worst-case epigraph.

mod model;
mod recourse;
mod stats;
mod two_stage;

pub use model::{
    audit_kkt_big_m, build_second_stage, criterion1_block, criterion2_block, dispatch_block,
    kkt_block, lambda_branch_indicator_block, phi1_for, DispatchVars, KktVars, NcEncoding,
    SecondStageVars,
};

/// Test-only view of the dual certificate block.
#[doc(hidden)]
pub fn debug_dual_certificate(
    model: &mut crate::solver::Model,
    form: &crate::connectedness::CompactForm,
    z_tilde: &[crate::solver::Expr],
    prefix: &str,
) -> crate::solver::Expr {
    model::dual_certificate_block(model, form, z_tilde, prefix).value
}
pub use recourse::{solve_recourse, RecourseResult};
pub use stats::{audit_criteria, evaluate_statistics, CriteriaAudit, NcStatistics};
pub use two_stage::{solve_two_stage, ScenarioOutcome, ScotsSolution, TwoStageOptions};

use crate::balance::{self, BalancedVector, SynthesisOptions};
use crate::connectedness::compact_form;
use crate::contingency::{build_w_matrices, enumerate_w_lambda, ContingencyError, WCatalog, WMatrices};
use crate::netgraph::{GraphError, SubgraphCatalog, Topology, DEFAULT_CATALOG_CAP};
use crate::solver::SolverError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScotsError {
    #[error("case validation failed: {0}")]
    BadCase(String),
    #[error("scenario {0} violates the failure budget eta = {1}")]
    ScenarioBeyondEta(String, usize),
    #[error("probabilities sum to {0}, expected 1")]
    BadProbabilities(f64),
    #[error("problem too large: {0}")]
    ExplosionGuard(String),
    #[error("first stage infeasible")]
    Infeasible,
    #[error("post-solve big-M audit failed: {0}")]
    BigMTooSmall(String),
    #[error("activation loop did not converge within {0} rounds")]
    NoConvergence(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Contingency(#[from] ContingencyError),
    #[error(transparent)]
    Balance(#[from] balance::BalanceError),
    #[error(transparent)]
    Classify(#[from] crate::connectedness::ClassifyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Generator {
    /// 1-based bus.
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    /// Linear dispatch cost; regulation in either direction is priced at the
    /// same rate.
    pub cost: f64,
    pub reg_up: f64,
    pub reg_down: f64,
}

/// A switching case: DC network data plus cost and budget configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScotsCase {
    pub topology: Topology,
    /// Per-bus load in MW, bus v at index v-1.
    pub loads: Vec<f64>,
    pub generators: Vec<Generator>,
    /// Per-branch susceptance (flow per radian of angle difference).
    pub susceptance: Vec<f64>,
    /// Per-branch capacity in MW.
    pub capacity: Vec<f64>,
    /// Corrective switching budget per scenario.
    pub switch_budget: usize,
    /// Value of lost load (shed penalty per MW).
    pub voll: f64,
    /// Cost per switching action.
    pub switch_cost: f64,
    pub eta: usize,
    pub lambda: usize,
}

impl ScotsCase {
    pub fn validate(&self) -> Result<(), ScotsError> {
        let n = self.topology.bus_count();
        let n_b = self.topology.branch_count();
        if self.loads.len() != n {
            return Err(ScotsError::BadCase(format!(
                "{} loads for {} buses",
                self.loads.len(),
                n
            )));
        }
        if self.susceptance.len() != n_b || self.capacity.len() != n_b {
            return Err(ScotsError::BadCase(
                "susceptance/capacity length must match branch count".to_string(),
            ));
        }
        if self.loads.iter().any(|&l| l < 0.0 || !l.is_finite()) {
            return Err(ScotsError::BadCase("loads must be nonnegative".to_string()));
        }
        if self.capacity.iter().any(|&c| c <= 0.0 || !c.is_finite()) {
            return Err(ScotsError::BadCase("capacities must be positive".to_string()));
        }
        if self.susceptance.iter().any(|&b| b <= 0.0 || !b.is_finite()) {
            return Err(ScotsError::BadCase("susceptances must be positive".to_string()));
        }
        for (k, g) in self.generators.iter().enumerate() {
            if g.bus == 0 || g.bus > n {
                return Err(ScotsError::BadCase(format!("generator {k} on unknown bus {}", g.bus)));
            }
            if g.p_min > g.p_max || g.p_min < 0.0 {
                return Err(ScotsError::BadCase(format!(
                    "generator {k} has bad limits [{}, {}]",
                    g.p_min, g.p_max
                )));
            }
            if g.reg_up < 0.0 || g.reg_down < 0.0 || g.cost < 0.0 {
                return Err(ScotsError::BadCase(format!("generator {k} has negative data")));
            }
        }
        if self.eta == 0 {
            return Err(ScotsError::BadCase("eta must be at least 1".to_string()));
        }
        if self.lambda == 0 || self.lambda > self.eta {
            return Err(ScotsError::BadCase(
                "lambda must satisfy 1 <= lambda <= eta".to_string(),
            ));
        }
        if self.voll <= 0.0 || self.switch_cost < 0.0 {
            return Err(ScotsError::BadCase("bad cost configuration".to_string()));
        }
        Ok(())
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn total_load(&self) -> f64 {
        self.loads.iter().sum()
    }
}

/// Everything the criteria constraints need about connectedness: the cut
/// catalog, the pruned-row matrices, and a verified balanced vector.
#[derive(Debug, Clone)]
pub struct NcBundle {
    pub catalog: SubgraphCatalog,
    pub w_catalog: WCatalog,
    pub w_matrices: WMatrices,
    pub balanced: BalancedVector,
}

impl NcBundle {
    pub fn prepare(
        topology: &Topology,
        lambda: usize,
        synthesis: &SynthesisOptions,
    ) -> Result<Self, ScotsError> {
        let catalog = topology.enumerate_connected_induced_subgraphs(DEFAULT_CATALOG_CAP)?;
        let w_catalog = enumerate_w_lambda(topology, lambda, crate::contingency::DEFAULT_LAMBDA_CAP)?;
        let w_matrices = build_w_matrices(&w_catalog, &catalog);
        let balanced =
            balance::synthesize_w_balanced(topology, &catalog, &w_catalog, &w_matrices, synthesis)?;
        Ok(NcBundle {
            catalog,
            w_catalog,
            w_matrices,
            balanced,
        })
    }

    pub fn n_u(&self) -> usize {
        self.w_catalog.n_u
    }

    pub fn lower_threshold(&self) -> f64 {
        self.balanced.lower_threshold()
    }

    pub fn upper_threshold(&self) -> f64 {
        self.balanced.upper_threshold(self.w_catalog.n_u)
    }

    pub fn compact(&self, topology: &Topology) -> crate::connectedness::CompactForm {
        compact_form(
            topology,
            &self.balanced.c,
            crate::connectedness::default_region_big_m(topology, &self.balanced.c),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioMode {
    Stochastic,
    Robust,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NcMode {
    /// Connectedness enforced on the first-stage mask only (baseline).
    FirstStageOnly,
    /// Criteria constraints active in every scenario block.
    FullCriteria,
}

/// A finite scenario universe with probabilities (ignored in robust mode).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub mode: ScenarioMode,
    pub scenarios: Vec<(crate::contingency::ContingencyVector, f64)>,
}

impl ScenarioSet {
    pub fn validate(&self, case: &ScotsCase) -> Result<(), ScotsError> {
        for (o, _) in &self.scenarios {
            if o.o_g.len() != case.num_generators() || o.o_b.len() != case.topology.branch_count() {
                return Err(ScotsError::BadCase(format!(
                    "scenario {} has wrong dimensions",
                    o.label()
                )));
            }
            if o.total_failures() > case.eta {
                return Err(ScotsError::ScenarioBeyondEta(o.label(), case.eta));
            }
        }
        if self.mode == ScenarioMode::Stochastic && !self.scenarios.is_empty() {
            let total: f64 = self.scenarios.iter().map(|(_, p)| p).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(ScotsError::BadProbabilities(total));
            }
        }
        Ok(())
    }
}
