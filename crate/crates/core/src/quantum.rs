//! Parametric model of a superconducting quantum computer scaled to a
//! target number of error-corrected logical qubits.
//!
//! The unit of replication is the error-correction setup: control
//! electronics and cabling for one physical-qubit group. The number of
//! setups is `ceil(L·O/M)` for `L` logical qubits, `O` physical qubits per
//! logical qubit and a multiplexing factor `M`. Cryostats, gas-handling
//! systems, compressors and control units are counted around it.

use std::collections::BTreeMap;

use crate::error::{ensure_nonnegative, LcaError, Result};
use crate::lci::{assembly_burden, eol_split, transport_tkm, DemandVector, FlowId, InventorySystem};
use crate::model::{require, PhaseInput, SharedRoles, SystemKind, SystemModel};

pub const HOURS_PER_WEEK: f64 = 168.0;

/// Equipment roles of the quantum system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QuantumRole {
    Cryostat,
    Helium,
    QecSetup,
    QecCable,
    GasHandling,
    Compressor,
    NitrogenTank,
    ControlUnit,
}

impl QuantumRole {
    pub const ALL: [QuantumRole; 8] = [
        QuantumRole::Cryostat,
        QuantumRole::Helium,
        QuantumRole::QecSetup,
        QuantumRole::QecCable,
        QuantumRole::GasHandling,
        QuantumRole::Compressor,
        QuantumRole::NitrogenTank,
        QuantumRole::ControlUnit,
    ];

    pub fn id(self) -> &'static str {
        match self {
            QuantumRole::Cryostat => "cryostat",
            QuantumRole::Helium => "helium",
            QuantumRole::QecSetup => "qec_setup",
            QuantumRole::QecCable => "qec_cable",
            QuantumRole::GasHandling => "ghs",
            QuantumRole::Compressor => "compressor",
            QuantumRole::NitrogenTank => "nitrogen_tank",
            QuantumRole::ControlUnit => "control_unit",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        QuantumRole::ALL.into_iter().find(|r| r.id() == id)
    }

    /// How many of this item the counted system holds.
    pub fn count(self, counts: &SubsystemCounts) -> u64 {
        match self {
            QuantumRole::Cryostat | QuantumRole::Helium => counts.cryostats,
            QuantumRole::QecSetup | QuantumRole::QecCable => counts.qec_setups,
            QuantumRole::GasHandling => counts.ghs_units,
            QuantumRole::Compressor | QuantumRole::NitrogenTank => counts.compressors,
            QuantumRole::ControlUnit => counts.control_units,
        }
    }

    /// Subsystem the item is reported under. Error-correction setups and
    /// their cables sit inside the cryostat.
    pub fn group(self) -> &'static str {
        match self {
            QuantumRole::Cryostat | QuantumRole::Helium | QuantumRole::QecSetup | QuantumRole::QecCable => {
                "cryostat"
            }
            QuantumRole::GasHandling => "ghs",
            QuantumRole::Compressor | QuantumRole::NitrogenTank => "compressor",
            QuantumRole::ControlUnit => "control_unit",
        }
    }

    /// Whether assembly burden applies to the item's mass.
    pub fn assembled(self) -> bool {
        !matches!(self, QuantumRole::Helium | QuantumRole::NitrogenTank)
    }
}

/// Dataset description of one equipment item.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemSpec {
    pub product: FlowId,
    /// Product units per counted item.
    pub quantity: f64,
    /// Mass per counted item.
    pub mass_kg: f64,
    pub origin: String,
    pub distance_km: f64,
    pub recyclable_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumConfig {
    pub logical_qubits: u32,
    pub overhead_factor: f64,
    pub multiplexing_factor: f64,
    pub cryostat_count: u32,
    pub control_unit_count: u32,
    pub per_setup_cryo_power_w: f64,
    pub per_setup_rack_power_w: f64,
    pub compressor_power_kw: f64,
    pub ghs_power_kw: f64,
    pub control_unit_power_kw: f64,
    pub nitrogen_l_per_week_per_compressor: f64,
    /// Liquid nitrogen density used to convert litres to kilograms.
    pub nitrogen_density_kg_per_l: f64,
    /// Elementary flow receiving the boiled-off nitrogen.
    pub nitrogen_flow: FlowId,
    /// Product supplying refill nitrogen (kg), if modelled.
    pub nitrogen_supply: Option<FlowId>,
    pub subsystems: BTreeMap<QuantumRole, SubsystemSpec>,
    pub shared: SharedRoles,
}

impl QuantumConfig {
    /// Scenario A operating parameters with an empty subsystem table.
    pub fn with_defaults(shared: SharedRoles) -> Self {
        QuantumConfig {
            logical_qubits: 100,
            overhead_factor: 7.0,
            multiplexing_factor: 4.0,
            cryostat_count: 6,
            control_unit_count: 1,
            per_setup_cryo_power_w: 36.0,
            per_setup_rack_power_w: 209.0,
            compressor_power_kw: 10.7,
            ghs_power_kw: 1.8,
            control_unit_power_kw: 0.0,
            nitrogen_l_per_week_per_compressor: 10.0,
            nitrogen_density_kg_per_l: 0.807,
            nitrogen_flow: "nitrogen_air".into(),
            nitrogen_supply: None,
            subsystems: BTreeMap::new(),
            shared,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.logical_qubits < 1 {
            return Err(bound("logical_qubits", self.logical_qubits as f64, "must be at least 1"));
        }
        for (name, v) in [
            ("overhead_factor", self.overhead_factor),
            ("multiplexing_factor", self.multiplexing_factor),
        ] {
            if !(v >= 1.0) || !v.is_finite() {
                return Err(bound(name, v, "must be a finite value of at least 1"));
            }
        }
        if self.cryostat_count < 1 {
            return Err(bound("cryostat_count", 0.0, "must be at least 1"));
        }
        for (name, v) in [
            ("per_setup_cryo_power_w", self.per_setup_cryo_power_w),
            ("per_setup_rack_power_w", self.per_setup_rack_power_w),
            ("compressor_power_kw", self.compressor_power_kw),
            ("ghs_power_kw", self.ghs_power_kw),
            ("control_unit_power_kw", self.control_unit_power_kw),
            ("nitrogen_l_per_week_per_compressor", self.nitrogen_l_per_week_per_compressor),
            ("nitrogen_density_kg_per_l", self.nitrogen_density_kg_per_l),
        ] {
            ensure_nonnegative(name, v)?;
        }
        Ok(())
    }

    /// Nitrogen lost to air per hour of operation, in litres.
    pub fn nitrogen_l_per_hour(&self, counts: &SubsystemCounts) -> f64 {
        counts.compressors as f64 * self.nitrogen_l_per_week_per_compressor / HOURS_PER_WEEK
    }
}

fn bound(name: &'static str, value: f64, reason: &'static str) -> LcaError {
    LcaError::InvalidArgument { name, value, reason }
}

/// Number of error-correction setups: `ceil(L·O/M)`.
pub fn qec_setups(logical_qubits: u32, overhead: f64, multiplexing: f64) -> Result<u64> {
    if logical_qubits < 1 {
        return Err(bound("logical_qubits", logical_qubits as f64, "must be at least 1"));
    }
    if !(overhead >= 1.0) || !overhead.is_finite() {
        return Err(bound("overhead_factor", overhead, "must be a finite value of at least 1"));
    }
    if !(multiplexing >= 1.0) || !multiplexing.is_finite() {
        return Err(bound("multiplexing_factor", multiplexing, "must be a finite value of at least 1"));
    }
    let exact = logical_qubits as f64 * overhead / multiplexing;
    // Snap values a rounding error away from an integer before the ceiling.
    let nearest = exact.round();
    let setups = if (exact - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        exact.ceil()
    };
    Ok(setups as u64)
}

/// Cryostats needed when each holds at most `capacity` setups.
pub fn cryostats_for_capacity(setups: u64, capacity: f64) -> Result<u32> {
    if !(capacity > 0.0) || !capacity.is_finite() {
        return Err(bound("setups_per_cryostat", capacity, "must be positive"));
    }
    Ok(((setups as f64 / capacity).ceil() as u32).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubsystemCounts {
    pub cryostats: u64,
    pub ghs_units: u64,
    pub compressors: u64,
    pub control_units: u64,
    pub qec_setups: u64,
}

impl SubsystemCounts {
    pub fn setups_per_cryostat(&self) -> f64 {
        self.qec_setups as f64 / self.cryostats as f64
    }
}

/// One compressor per cryostat; one gas-handling system serves two.
pub fn subsystem_counts(setups: u64, cryostat_count: u32, control_units: u32) -> Result<SubsystemCounts> {
    if cryostat_count == 0 {
        return Err(bound("cryostat_count", 0.0, "must be at least 1"));
    }
    let cryostats = cryostat_count as u64;
    Ok(SubsystemCounts {
        cryostats,
        ghs_units: cryostats.div_ceil(2),
        compressors: cryostats,
        control_units: control_units as u64,
        qec_setups: setups,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumPower {
    pub compressors_kw: f64,
    pub ghs_kw: f64,
    pub qec_kw: f64,
    pub control_unit_kw: f64,
    pub total_kw: f64,
}

pub fn quantum_power_kw(counts: &SubsystemCounts, cfg: &QuantumConfig) -> QuantumPower {
    let compressors_kw = counts.compressors as f64 * cfg.compressor_power_kw;
    let ghs_kw = counts.ghs_units as f64 * cfg.ghs_power_kw;
    let qec_kw =
        counts.qec_setups as f64 * (cfg.per_setup_cryo_power_w + cfg.per_setup_rack_power_w) / 1000.0;
    let control_unit_kw = counts.control_units as f64 * cfg.control_unit_power_kw;
    QuantumPower {
        compressors_kw,
        ghs_kw,
        qec_kw,
        control_unit_kw,
        total_kw: compressors_kw + ghs_kw + qec_kw + control_unit_kw,
    }
}

/// Counts the system described by `cfg`.
pub fn counts_for(cfg: &QuantumConfig) -> Result<SubsystemCounts> {
    cfg.validate()?;
    let setups = qec_setups(cfg.logical_qubits, cfg.overhead_factor, cfg.multiplexing_factor)?;
    subsystem_counts(setups, cfg.cryostat_count, cfg.control_unit_count)
}

pub fn build_quantum_system(name: &str, cfg: &QuantumConfig, system: &InventorySystem) -> Result<SystemModel> {
    let counts = counts_for(cfg)?;
    let power = quantum_power_kw(&counts, cfg);
    let shared = &cfg.shared;
    shared.check(system)?;
    if system.elementary_index(cfg.nitrogen_flow.as_str()).is_none() {
        return Err(LcaError::MissingRole(format!("nitrogen ({})", cfg.nitrogen_flow)));
    }

    let mut groups: BTreeMap<&'static str, (DemandVector, f64)> = BTreeMap::new();
    let mut delivery_tkm = 0.0;
    let mut end_of_life = PhaseInput::new("end_of_life");
    let mut total_mass = 0.0;
    for role in QuantumRole::ALL {
        let spec = cfg
            .subsystems
            .get(&role)
            .ok_or_else(|| LcaError::MissingRole(role.id().to_string()))?;
        require(system, role.id(), &spec.product)?;
        let n = role.count(&counts) as f64;
        let mass = n * spec.mass_kg;
        let (demand, assembled_mass) = groups
            .entry(role.group())
            .or_insert_with(|| (DemandVector::new("production"), 0.0));
        demand.add(&spec.product, n * spec.quantity);
        if role.assembled() {
            *assembled_mass += mass;
        }
        delivery_tkm += transport_tkm(mass, spec.distance_km)?;
        end_of_life
            .demand
            .merge(&eol_split(mass, spec.recyclable_fraction, &shared.waste)?);
        total_mass += mass;
    }

    let mut production = PhaseInput::new("production");
    let mut production_parts = Vec::new();
    for (group, (mut demand, assembled_mass)) in groups {
        demand.merge(&assembly_burden(assembled_mass, &shared.assembly)?);
        production.demand.merge(&demand);
        production_parts.push((group.to_string(), demand));
    }
    let mut use_per_hour = PhaseInput::new("use");
    let mut draw_kw = power.total_kw;
    if let Some((desktop, kw)) = &shared.desktop {
        let mut d = DemandVector::new("production");
        d.add(desktop, 1.0);
        production.demand.merge(&d);
        production_parts.push(("desktop".to_string(), d));
        draw_kw += kw;
    }
    use_per_hour.demand.add(&shared.grid, draw_kw);
    let nitrogen_kg = cfg.nitrogen_l_per_hour(&counts) * cfg.nitrogen_density_kg_per_l;
    use_per_hour.emit(&cfg.nitrogen_flow, nitrogen_kg);
    if let Some(supply) = &cfg.nitrogen_supply {
        require(system, "nitrogen_supply", supply)?;
        use_per_hour.demand.add(supply, nitrogen_kg);
    }

    let mut delivery = PhaseInput::new("delivery");
    delivery.demand.add(&shared.freight, delivery_tkm);

    Ok(SystemModel {
        name: name.to_string(),
        kind: SystemKind::Quantum { counts, power },
        production,
        delivery,
        end_of_life,
        use_per_hour,
        production_parts,
        mass_kg: total_mass,
        freight_tkm: delivery_tkm,
        power_kw: power.total_kw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn setups_for_both_scenarios() {
        assert_eq!(qec_setups(100, 7.0, 4.0).unwrap(), 175);
        assert_eq!(qec_setups(100, 1000.0, 20.0).unwrap(), 5000);
        assert_eq!(qec_setups(1, 1.0, 1.0).unwrap(), 1);
    }

    #[test]
    fn setups_round_up_fractional() {
        assert_eq!(qec_setups(3, 7.0, 4.0).unwrap(), 6); // 5.25
        assert_eq!(qec_setups(10, 1.1, 1.0).unwrap(), 11); // 11.000000000000002
    }

    #[test]
    fn setups_reject_out_of_bounds() {
        assert!(qec_setups(0, 7.0, 4.0).is_err());
        assert!(qec_setups(1, 0.5, 4.0).is_err());
        assert!(qec_setups(1, 7.0, 0.0).is_err());
        assert!(qec_setups(1, f64::NAN, 4.0).is_err());
    }

    #[test]
    fn counts_scenario_a() {
        let c = subsystem_counts(175, 6, 1).unwrap();
        assert_eq!(
            c,
            SubsystemCounts {
                cryostats: 6,
                ghs_units: 3,
                compressors: 6,
                control_units: 1,
                qec_setups: 175
            }
        );
        assert!((c.setups_per_cryostat() - 29.1667).abs() < 1e-4);
    }

    #[test]
    fn counts_scenario_a_prime() {
        let c = subsystem_counts(5000, 10, 2).unwrap();
        assert_eq!((c.cryostats, c.ghs_units, c.compressors, c.control_units), (10, 5, 10, 2));
        assert_eq!(c.setups_per_cryostat(), 500.0);
    }

    #[test]
    fn counts_single_lab_setup() {
        let c = subsystem_counts(1, 1, 1).unwrap();
        assert_eq!((c.cryostats, c.ghs_units, c.compressors, c.control_units), (1, 1, 1, 1));
        assert!(subsystem_counts(1, 0, 1).is_err());
    }

    #[test]
    fn capacity_helper_reproduces_cryostat_counts() {
        assert_eq!(cryostats_for_capacity(175, 30.0).unwrap(), 6);
        assert_eq!(cryostats_for_capacity(5000, 500.0).unwrap(), 10);
    }

    fn cfg() -> QuantumConfig {
        QuantumConfig::with_defaults(SharedRoles {
            grid: "electricity".into(),
            freight: "freight".into(),
            waste: "waste".into(),
            assembly: vec![],
            desktop: None,
        })
    }

    #[test]
    fn power_scenario_a() {
        let p = quantum_power_kw(&subsystem_counts(175, 6, 1).unwrap(), &cfg());
        assert!((p.compressors_kw - 64.2).abs() < 1e-12);
        assert!((p.qec_kw - 42.875).abs() < 1e-12);
        assert!((p.ghs_kw - 5.4).abs() < 1e-12);
        assert_eq!(p.control_unit_kw, 0.0);
        assert!((p.total_kw - 112.475).abs() < 1e-12);
    }

    #[test]
    fn power_scenario_a_prime() {
        let p = quantum_power_kw(&subsystem_counts(5000, 10, 2).unwrap(), &cfg());
        assert!((p.compressors_kw - 107.0).abs() < 1e-12);
        assert!((p.qec_kw - 1225.0).abs() < 1e-9);
    }

    #[test]
    fn power_zero_counts() {
        let zero = SubsystemCounts {
            cryostats: 0,
            ghs_units: 0,
            compressors: 0,
            control_units: 0,
            qec_setups: 0,
        };
        assert_eq!(quantum_power_kw(&zero, &cfg()).total_kw, 0.0);
    }

    #[test]
    fn nitrogen_rate_scenario_a() {
        let c = subsystem_counts(175, 6, 1).unwrap();
        let l_per_h = cfg().nitrogen_l_per_hour(&c);
        assert!((l_per_h - 60.0 / 168.0).abs() < 1e-15);
        assert!((l_per_h - 0.357).abs() < 1e-3);
    }

    #[test]
    fn config_validation() {
        let mut c = cfg();
        c.multiplexing_factor = 0.5;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.ghs_power_kw = -1.0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.cryostat_count = 0;
        assert!(c.validate().is_err());
    }
}
