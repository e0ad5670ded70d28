//! Classical supercomputer scaled from a single compute blade to a target
//! CPU core count.

use crate::error::{ensure_nonnegative, LcaError, Result};
use crate::lci::{assembly_burden, eol_split, transport_tkm, DemandVector, FlowId, InventorySystem};
use crate::model::{require, PhaseInput, SharedRoles, SystemKind, SystemModel};

pub const HOURS_PER_YEAR: f64 = 8760.0;

/// Power supplies fitted to one blade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsuSpec {
    pub count: u32,
    pub rating_w: f64,
    pub load_fraction: f64,
}

impl PsuSpec {
    /// Power delivered at the stated load, in kW.
    pub fn supplied_kw(&self) -> f64 {
        self.count as f64 * self.rating_w * self.load_fraction / 1000.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HpcConfig {
    pub target_cores: u64,
    pub cores_per_cpu: u32,
    pub cpus_per_blade: u32,
    pub blade_power_kw: f64,
    pub blade_mass_kg: f64,
    pub psu: PsuSpec,
    pub blade_product: FlowId,
    /// Interconnect cabling, one product unit per blade.
    pub cable_product: Option<FlowId>,
    pub cable_mass_per_blade_kg: f64,
    pub origin: String,
    pub distance_km: f64,
    pub recyclable_fraction: f64,
    pub shared: SharedRoles,
}

impl HpcConfig {
    /// Scenario B blade and fleet parameters.
    pub fn with_defaults(blade_product: FlowId, shared: SharedRoles) -> Self {
        HpcConfig {
            target_cores: 606_208,
            cores_per_cpu: 24,
            cpus_per_blade: 2,
            blade_power_kw: 1.45,
            blade_mass_kg: 28.6,
            psu: PsuSpec {
                count: 2,
                rating_w: 1100.0,
                load_fraction: 0.66,
            },
            blade_product,
            cable_product: None,
            cable_mass_per_blade_kg: 0.0,
            origin: "China".to_string(),
            distance_km: 17_267.5,
            recyclable_fraction: 0.0,
            shared,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_cores == 0 {
            return Err(LcaError::InvalidArgument {
                name: "target_cores",
                value: 0.0,
                reason: "must be positive",
            });
        }
        for (name, v) in [
            ("blade_power_kw", self.blade_power_kw),
            ("blade_mass_kg", self.blade_mass_kg),
            ("cable_mass_per_blade_kg", self.cable_mass_per_blade_kg),
            ("distance_km", self.distance_km),
        ] {
            ensure_nonnegative(name, v)?;
        }
        blades_for_cores(self.target_cores, self.cores_per_cpu, self.cpus_per_blade)?;
        Ok(())
    }
}

/// `target / (cores_per_cpu · cpus_per_blade)`. Fractional blades are kept so
/// that fleet totals stay proportional to the core count.
pub fn blades_for_cores(target_cores: u64, cores_per_cpu: u32, cpus_per_blade: u32) -> Result<f64> {
    if cores_per_cpu == 0 || cpus_per_blade == 0 {
        return Err(LcaError::InvalidArgument {
            name: if cores_per_cpu == 0 { "cores_per_cpu" } else { "cpus_per_blade" },
            value: 0.0,
            reason: "must be positive",
        });
    }
    Ok(target_cores as f64 / (cores_per_cpu as f64 * cpus_per_blade as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BladeFleet {
    pub blades: f64,
    pub cpus: f64,
    pub cores: f64,
    pub total_power_kw: f64,
    pub total_mass_kg: f64,
    pub cable_mass_kg: f64,
}

pub fn fleet_totals(blades: f64, cfg: &HpcConfig) -> BladeFleet {
    let cpus = blades * cfg.cpus_per_blade as f64;
    BladeFleet {
        blades,
        cpus,
        cores: cpus * cfg.cores_per_cpu as f64,
        total_power_kw: blades * cfg.blade_power_kw,
        total_mass_kg: blades * cfg.blade_mass_kg,
        cable_mass_kg: if cfg.cable_product.is_some() {
            blades * cfg.cable_mass_per_blade_kg
        } else {
            0.0
        },
    }
}

/// Energy for continuous operation over `hours_per_year`.
pub fn annual_energy_kwh(power_kw: f64, hours_per_year: f64) -> Result<f64> {
    ensure_nonnegative("power_kw", power_kw)?;
    ensure_nonnegative("hours_per_year", hours_per_year)?;
    Ok(power_kw * hours_per_year)
}

pub fn fleet_for(cfg: &HpcConfig) -> Result<BladeFleet> {
    cfg.validate()?;
    let blades = blades_for_cores(cfg.target_cores, cfg.cores_per_cpu, cfg.cpus_per_blade)?;
    Ok(fleet_totals(blades, cfg))
}

pub fn build_hpc_system(name: &str, cfg: &HpcConfig, system: &InventorySystem) -> Result<SystemModel> {
    let fleet = fleet_for(cfg)?;
    let shared = &cfg.shared;
    shared.check(system)?;
    require(system, "blade", &cfg.blade_product)?;

    let mut production = PhaseInput::new("production");
    let mut parts = Vec::new();

    let mut blades = DemandVector::new("production");
    blades.add(&cfg.blade_product, fleet.blades);
    blades.merge(&assembly_burden(fleet.total_mass_kg, &shared.assembly)?);
    production.demand.merge(&blades);
    parts.push(("compute_blade".to_string(), blades));

    if let Some(cable) = &cfg.cable_product {
        require(system, "cable", cable)?;
        let mut cables = DemandVector::new("production");
        cables.add(cable, fleet.blades);
        cables.merge(&assembly_burden(fleet.cable_mass_kg, &shared.assembly)?);
        production.demand.merge(&cables);
        parts.push(("cables".to_string(), cables));
    }

    let mut draw_kw = fleet.total_power_kw;
    if let Some((desktop, kw)) = &shared.desktop {
        let mut d = DemandVector::new("production");
        d.add(desktop, 1.0);
        production.demand.merge(&d);
        parts.push(("desktop".to_string(), d));
        draw_kw += kw;
    }

    let mass = fleet.total_mass_kg + fleet.cable_mass_kg;
    let tkm = transport_tkm(mass, cfg.distance_km)?;
    let mut delivery = PhaseInput::new("delivery");
    delivery.demand.add(&shared.freight, tkm);

    let mut end_of_life = PhaseInput::new("end_of_life");
    end_of_life.demand = eol_split(mass, cfg.recyclable_fraction, &shared.waste)?;

    let mut use_per_hour = PhaseInput::new("use");
    use_per_hour.demand.add(&shared.grid, draw_kw);

    Ok(SystemModel {
        name: name.to_string(),
        kind: SystemKind::Hpc { fleet },
        production,
        delivery,
        end_of_life,
        use_per_hour,
        production_parts: parts,
        mass_kg: mass,
        freight_tkm: tkm,
        power_kw: fleet.total_power_kw,
    })
}

/// Descriptor of a machine for the order-of-magnitude comparison table.
/// Optional fields are either given or derived from the others.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineDescriptor {
    pub label: String,
    pub cores_per_cpu: f64,
    pub cpus_per_blade: f64,
    pub gpus_per_blade: f64,
    pub ram_per_cpu_gb: f64,
    pub ram_per_gpu_gb: f64,
    /// Either the core target or a cabinet layout fixes the blade count.
    pub target_cores: Option<f64>,
    pub cabinets: Option<f64>,
    pub blades_per_cabinet: Option<f64>,
    pub mass_per_cabinet_kg: Option<f64>,
    pub blade_power_kw: Option<f64>,
    pub total_power_kw: Option<f64>,
    pub blade_mass_kg: Option<f64>,
    pub cores_per_gpu: Option<f64>,
    pub combined_cores: Option<f64>,
}

impl MachineDescriptor {
    /// The modelled workstation-class blade fleet.
    pub fn modeled(cfg: &HpcConfig) -> Self {
        MachineDescriptor {
            label: "modeled".to_string(),
            cores_per_cpu: cfg.cores_per_cpu as f64,
            cpus_per_blade: cfg.cpus_per_blade as f64,
            gpus_per_blade: 2.0,
            ram_per_cpu_gb: 768.0,
            ram_per_gpu_gb: 8.0,
            target_cores: Some(cfg.target_cores as f64),
            cabinets: None,
            blades_per_cabinet: None,
            mass_per_cabinet_kg: None,
            blade_power_kw: Some(cfg.blade_power_kw),
            total_power_kw: None,
            blade_mass_kg: Some(cfg.blade_mass_kg),
            cores_per_gpu: Some(1792.0),
            combined_cores: None,
        }
    }

    /// The exascale reference machine, described by cabinet layout.
    pub fn reference() -> Self {
        MachineDescriptor {
            label: "reference".to_string(),
            cores_per_cpu: 64.0,
            cpus_per_blade: 2.0,
            gpus_per_blade: 8.0,
            ram_per_cpu_gb: 512.0,
            ram_per_gpu_gb: 128.0,
            target_cores: None,
            cabinets: Some(74.0),
            blades_per_cabinet: Some(64.0),
            mass_per_cabinet_kg: Some(3629.0),
            blade_power_kw: None,
            total_power_kw: Some(21_000.0),
            blade_mass_kg: None,
            cores_per_gpu: None,
            combined_cores: Some(8_699_904.0),
        }
    }

    fn blades(&self) -> Result<f64> {
        match (self.target_cores, self.cabinets, self.blades_per_cabinet) {
            (_, Some(c), Some(b)) => Ok(c * b),
            (Some(cores), _, _) => Ok(cores / (self.cores_per_cpu * self.cpus_per_blade)),
            _ => Err(self.underdetermined("blade count")),
        }
    }

    fn underdetermined(&self, what: &str) -> LcaError {
        LcaError::InvalidProcess {
            process: self.label.clone(),
            reason: format!("descriptor does not determine the {what}"),
        }
    }

    /// Derives every comparison quantity.
    pub fn derive(&self) -> Result<Vec<(&'static str, f64)>> {
        let blades = self.blades()?;
        let cpus = blades * self.cpus_per_blade;
        let gpus = blades * self.gpus_per_blade;
        let cpu_cores = cpus * self.cores_per_cpu;
        let (total_power, blade_power) = match (self.total_power_kw, self.blade_power_kw) {
            (Some(t), _) => (t, t / blades),
            (None, Some(p)) => (p * blades, p),
            _ => return Err(self.underdetermined("power")),
        };
        let (total_mass, blade_mass) = match (self.cabinets, self.mass_per_cabinet_kg, self.blade_mass_kg) {
            (Some(c), Some(m), _) => (c * m, c * m / blades),
            (_, _, Some(m)) => (m * blades, m),
            _ => return Err(self.underdetermined("mass")),
        };
        let (gpu_cores, cores_per_gpu) = match (self.combined_cores, self.cores_per_gpu) {
            (Some(all), _) => (all - cpu_cores, (all - cpu_cores) / gpus),
            (None, Some(k)) => (k * gpus, k),
            _ => return Err(self.underdetermined("GPU cores")),
        };
        Ok(vec![
            ("total_power_kw", total_power),
            ("power_per_blade_kw", blade_power),
            ("cores_per_gpu", cores_per_gpu),
            ("combined_cores", cpu_cores + gpu_cores),
            ("total_cpu", cpus),
            ("total_gpu", gpus),
            ("compute_nodes", cpus),
            ("total_cpu_cores", cpu_cores),
            ("total_gpu_cores", gpu_cores),
            ("total_blades", blades),
            ("total_ram_cpu_gb", cpus * self.ram_per_cpu_gb),
            ("total_ram_gpu_gb", gpus * self.ram_per_gpu_gb),
            ("mass_per_blade_kg", blade_mass),
            ("total_mass_kg", total_mass),
        ])
    }
}

/// Published derived cells: (quantity, printed value, printed decimals).
pub const PUBLISHED_MODELED: &[(&str, f64, u32)] = &[
    ("total_power_kw", 18_312.53, 2),
    ("combined_cores", 45_869_738.67, 2),
    ("total_cpu", 25_258.67, 2),
    ("total_gpu", 25_258.67, 2),
    ("compute_nodes", 25_258.67, 2),
    ("total_cpu_cores", 606_208.0, 0),
    ("total_gpu_cores", 45_263_530.67, 2),
    ("total_blades", 12_629.33, 2),
    ("total_ram_cpu_gb", 19_398_656.0, 0),
    ("total_ram_gpu_gb", 202_069.33, 2),
    ("total_mass_kg", 361_199.0, 0),
];

pub const PUBLISHED_REFERENCE: &[(&str, f64, u32)] = &[
    ("power_per_blade_kw", 4.43, 2),
    ("cores_per_gpu", 213.62, 2),
    ("total_cpu", 9_472.0, 0),
    ("total_gpu", 37_888.0, 0),
    ("compute_nodes", 9_472.0, 0),
    ("total_cpu_cores", 606_208.0, 0),
    ("total_gpu_cores", 8_093_696.0, 0),
    ("total_blades", 4_736.0, 0),
    ("total_ram_cpu_gb", 4_849_664.0, 0),
    ("total_ram_gpu_gb", 4_849_664.0, 0),
    ("mass_per_blade_kg", 57.0, 0),
    ("total_mass_kg", 268_546.0, 0),
];

/// Relative tolerance of the cross-check.
pub const CROSSCHECK_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, PartialEq)]
pub struct CrosscheckCell {
    pub machine: String,
    pub quantity: &'static str,
    pub computed: f64,
    pub published: f64,
    pub decimals: u32,
    pub rel_diff: f64,
    pub pass: bool,
}

/// A cell passes when within [`CROSSCHECK_TOLERANCE`] of the printed value or
/// when the computed value rounds to it at the printed precision.
pub fn crosscheck_cell(
    machine: &str,
    quantity: &'static str,
    computed: f64,
    published: f64,
    decimals: u32,
) -> CrosscheckCell {
    let rel_diff = ((computed - published) / published).abs();
    let scale = 10f64.powi(decimals as i32);
    let rounds_to = ((computed * scale).round() - published * scale).abs() < 0.5;
    CrosscheckCell {
        machine: machine.to_string(),
        quantity,
        computed,
        published,
        decimals,
        rel_diff,
        pass: rel_diff <= CROSSCHECK_TOLERANCE || rounds_to,
    }
}

pub fn table_crosscheck(modeled: &MachineDescriptor, reference: &MachineDescriptor) -> Result<Vec<CrosscheckCell>> {
    let mut cells = Vec::new();
    for (machine, published) in [(modeled, PUBLISHED_MODELED), (reference, PUBLISHED_REFERENCE)] {
        let derived = machine.derive()?;
        for &(quantity, value, decimals) in published {
            let computed = derived
                .iter()
                .find(|(q, _)| *q == quantity)
                .map(|(_, v)| *v)
                .expect("every published quantity is derived");
            cells.push(crosscheck_cell(&machine.label, quantity, computed, value, decimals));
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> HpcConfig {
        HpcConfig::with_defaults(
            "compute_blade".into(),
            SharedRoles {
                grid: "electricity".into(),
                freight: "freight".into(),
                waste: "waste".into(),
                assembly: vec![],
                desktop: None,
            },
        )
    }

    #[test]
    fn blade_counts() {
        let b = blades_for_cores(606_208, 24, 2).unwrap();
        assert!((b - 12_629.33).abs() < 0.01);
        assert_eq!(blades_for_cores(606_208, 64, 2).unwrap(), 4736.0);
        assert!(blades_for_cores(606_208, 0, 2).is_err());
        assert!(blades_for_cores(606_208, 24, 0).is_err());
    }

    #[test]
    fn fleet_power_and_mass() {
        let f = fleet_for(&cfg()).unwrap();
        assert!((f.total_power_kw - 18_312.53).abs() < 0.01);
        assert!((f.total_mass_kg - 361_199.0).abs() < 0.5);
        assert!((f.cpus - 25_258.67).abs() < 0.01);
        assert_eq!(f.cable_mass_kg, 0.0);
    }

    #[test]
    fn single_blade_fleet() {
        let mut c = cfg();
        c.target_cores = 48;
        let f = fleet_for(&c).unwrap();
        assert_eq!(f.blades, 1.0);
        assert_eq!(f.total_power_kw, 1.45);
        assert_eq!(f.total_mass_kg, 28.6);
    }

    #[test]
    fn annual_energy_per_blade() {
        let e = annual_energy_kwh(1.45, HOURS_PER_YEAR).unwrap();
        assert!((e - 12_702.0).abs() < 1e-9);
        assert!(annual_energy_kwh(-1.0, 1.0).is_err());
    }

    #[test]
    fn power_supplies_cover_blade_draw() {
        let kw = cfg().psu.supplied_kw();
        assert!((kw - 1.452).abs() < 1e-12);
        assert!(((kw - 1.45) / 1.45).abs() < 0.002);
    }

    #[test]
    fn crosscheck_rule_accepts_rounded_values() {
        assert!(crosscheck_cell("r", "mass_per_blade_kg", 56.70, 57.0, 0).pass);
        assert!(!crosscheck_cell("r", "mass_per_blade_kg", 56.4, 57.0, 0).pass);
        assert!(crosscheck_cell("m", "x", 100.4, 100.0, 0).pass);
        assert!(!crosscheck_cell("m", "x", 101.0, 100.0, 0).pass);
    }

    #[test]
    fn every_published_cell_reproduces() {
        let cells = table_crosscheck(&MachineDescriptor::modeled(&cfg()), &MachineDescriptor::reference()).unwrap();
        assert_eq!(cells.len(), PUBLISHED_MODELED.len() + PUBLISHED_REFERENCE.len());
        for c in &cells {
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn underdetermined_descriptor_is_rejected() {
        let mut d = MachineDescriptor::reference();
        d.total_power_kw = None;
        assert!(d.derive().is_err());
    }
}
