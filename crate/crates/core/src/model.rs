//! Built life-cycle models: fixed demand per phase plus an hourly use rate.

use std::collections::BTreeMap;

use crate::error::{LcaError, Result};
use crate::hpc::BladeFleet;
use crate::impact::Phase;
use crate::lci::{DemandVector, ElementaryInventory, FlowId, InventorySystem};
use crate::quantum::{QuantumPower, SubsystemCounts};

/// Demand on the technosphere plus elementary exchanges emitted directly by
/// the foreground system.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseInput {
    pub demand: DemandVector,
    pub direct: ElementaryInventory,
}

impl PhaseInput {
    pub fn new(label: &str) -> Self {
        PhaseInput {
            demand: DemandVector::new(label),
            direct: BTreeMap::new(),
        }
    }

    pub fn scaled(&self, factor: f64) -> PhaseInput {
        PhaseInput {
            demand: self.demand.scaled(factor),
            direct: self.direct.iter().map(|(k, v)| (k.clone(), v * factor)).collect(),
        }
    }

    pub fn emit(&mut self, flow: &FlowId, amount: f64) {
        *self.direct.entry(flow.clone()).or_insert(0.0) += amount;
    }
}

/// What was modelled, kept alongside the demands for reporting.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemKind {
    Quantum {
        counts: SubsystemCounts,
        power: QuantumPower,
    },
    Hpc {
        fleet: BladeFleet,
    },
}

/// Products and rates shared by both builders.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedRoles {
    /// Electricity product used during operation (kWh).
    pub grid: FlowId,
    /// Freight product (t·km).
    pub freight: FlowId,
    /// Waste-treatment product (kg).
    pub waste: FlowId,
    /// Assembly demand per kg of assembled equipment.
    pub assembly: Vec<(FlowId, f64)>,
    /// Companion workstation: product (one unit in production) and its draw.
    pub desktop: Option<(FlowId, f64)>,
}

impl SharedRoles {
    pub(crate) fn check(&self, system: &InventorySystem) -> Result<()> {
        require(system, "grid", &self.grid)?;
        require(system, "freight", &self.freight)?;
        require(system, "waste", &self.waste)?;
        for (p, _) in &self.assembly {
            require(system, "assembly", p)?;
        }
        if let Some((p, _)) = &self.desktop {
            require(system, "desktop", p)?;
        }
        Ok(())
    }
}

pub(crate) fn require(system: &InventorySystem, role: &str, product: &FlowId) -> Result<()> {
    if system.product_index(product.as_str()).is_none() {
        return Err(LcaError::MissingRole(format!("{role} ({product})")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub name: String,
    pub kind: SystemKind,
    pub production: PhaseInput,
    pub delivery: PhaseInput,
    pub end_of_life: PhaseInput,
    /// Use-phase input for one hour of continuous operation.
    pub use_per_hour: PhaseInput,
    /// Production broken down by subsystem; the parts sum to `production`.
    pub production_parts: Vec<(String, DemandVector)>,
    pub mass_kg: f64,
    pub freight_tkm: f64,
    pub power_kw: f64,
}

impl SystemModel {
    /// Fixed phases, or the hourly rate for [`Phase::Use`].
    pub fn phase(&self, phase: Phase) -> &PhaseInput {
        match phase {
            Phase::Production => &self.production,
            Phase::Delivery => &self.delivery,
            Phase::Use => &self.use_per_hour,
            Phase::EndOfLife => &self.end_of_life,
        }
    }
}
