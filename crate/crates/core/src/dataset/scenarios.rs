//! Scenario file: `scope,key,value` settings resolved into system configs.
//!
//! Scopes are `common`, `quantum`, `hpc` and `scenario:<id>`. A scenario
//! takes the defaults of its kind's scope and overrides them with its own
//! keys. Keys that no reader consumes are errors, so typos surface.

use std::collections::BTreeMap;

use super::format::{parse_real, ColumnType, Row, Schema};
use crate::error::{LcaError, Result};
use crate::hpc::{HpcConfig, PsuSpec};
use crate::lci::FlowId;
use crate::model::SharedRoles;
use crate::quantum::{cryostats_for_capacity, qec_setups, QuantumConfig, QuantumRole, SubsystemSpec};
use crate::scenario::{DEFAULT_GRID, DEFAULT_LIFETIME_HOURS, REFERENCE_HOURS};

pub const SCHEMA: Schema = Schema {
    kind: "scenarios",
    file: "scenarios.csv",
    columns: &[
        ("scope", ColumnType::Text),
        ("key", ColumnType::Text),
        ("value", ColumnType::Text),
    ],
};
const FILE: &str = "scenarios.csv";

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: u64,
}

/// Settings of one scope with consumption tracking.
struct Keys {
    scope: String,
    entries: BTreeMap<String, Entry>,
    used: std::collections::BTreeSet<String>,
}

impl Keys {
    fn new(scope: &str, entries: BTreeMap<String, Entry>) -> Self {
        Keys {
            scope: scope.to_string(),
            entries,
            used: Default::default(),
        }
    }

    fn take(&mut self, key: &str) -> Option<Entry> {
        let e = self.entries.get(key)?.clone();
        self.used.insert(key.to_string());
        Some(e)
    }

    fn err(&self, e: &Entry, key: &str, message: &str) -> LcaError {
        LcaError::parse(FILE, e.line, format!("{}.{key}: {message}", self.scope))
    }

    fn text(&mut self, key: &str) -> Result<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) if e.value.is_empty() => Err(self.err(&e, key, "value must not be empty")),
            Some(e) => Ok(Some(e.value)),
        }
    }

    fn required_text(&mut self, key: &str) -> Result<String> {
        self.text(key)?.ok_or_else(|| self.missing(key))
    }

    fn missing(&self, key: &str) -> LcaError {
        LcaError::MissingRole(format!("{}.{key}", self.scope))
    }

    fn real(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => match parse_real(&e.value) {
                Some(v) if v >= 0.0 => Ok(Some(v)),
                _ => Err(self.err(&e, key, &format!("`{}` is not a nonnegative number", e.value))),
            },
        }
    }

    fn real_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.real(key)?.unwrap_or(default))
    }

    fn required_real(&mut self, key: &str) -> Result<f64> {
        self.real(key)?.ok_or_else(|| self.missing(key))
    }

    fn integer(&mut self, key: &str) -> Result<Option<u64>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => match e.value.trim().parse::<u64>() {
                Ok(v) => Ok(Some(v)),
                Err(_) => Err(self.err(&e, key, &format!("`{}` is not a nonnegative integer", e.value))),
            },
        }
    }

    fn count(&mut self, key: &str, default: u32) -> Result<u32> {
        match self.take(key) {
            None => Ok(default),
            Some(e) => e
                .value
                .trim()
                .parse::<u32>()
                .map_err(|_| self.err(&e, key, &format!("`{}` is not a nonnegative integer", e.value))),
        }
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .split(';')
                .map(|s| parse_real(s).filter(|v| *v >= 0.0))
                .collect::<Option<Vec<_>>>()
                .map(Some)
                .ok_or_else(|| self.err(&e, key, "expected `;`-separated nonnegative numbers")),
        }
    }

    /// Keys under `prefix.`, with the prefix removed.
    fn with_prefix(&self, prefix: &str) -> Vec<String> {
        let p = format!("{prefix}.");
        self.entries
            .keys()
            .filter_map(|k| k.strip_prefix(&p).map(str::to_string))
            .collect()
    }

    fn finish(self) -> Result<()> {
        for (key, e) in &self.entries {
            if !self.used.contains(key) {
                return Err(self.err(e, key, "unknown key"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemConfig {
    Quantum(QuantumConfig),
    Hpc(HpcConfig),
}

impl SystemConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            SystemConfig::Quantum(_) => "quantum",
            SystemConfig::Hpc(_) => "hpc",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub id: String,
    pub description: String,
    pub config: SystemConfig,
    pub lifetime_hours: f64,
    pub replacement_multiplier: u32,
}

/// Resolved contents of a scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub method: Option<String>,
    pub reference_hours: f64,
    pub sweep_hours: Vec<f64>,
    pub shared: SharedRoles,
    /// Sorted by id.
    pub scenarios: Vec<ScenarioSpec>,
}

impl ScenarioFile {
    pub fn get(&self, id: &str) -> Option<&ScenarioSpec> {
        self.scenarios.iter().find(|s| s.id == id)
    }
}

pub fn parse(rows: &[Row]) -> Result<ScenarioFile> {
    let mut scopes: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
    for row in rows {
        let scope = row.required(0, "scope")?;
        let key = row.required(1, "key")?;
        let known = matches!(scope, "common" | "quantum" | "hpc")
            || scope.strip_prefix("scenario:").is_some_and(|id| !id.is_empty());
        if !known {
            return Err(row.error(format!("unknown scope `{scope}`")));
        }
        let entries = scopes.entry(scope.to_string()).or_default();
        if let Some(first) = entries.get(key) {
            return Err(row.error(format!("duplicate key `{scope}.{key}` (first set on line {})", first.line)));
        }
        entries.insert(
            key.to_string(),
            Entry {
                value: row.text(2).to_string(),
                line: row.line,
            },
        );
    }

    let mut common = Keys::new("common", scopes.remove("common").unwrap_or_default());
    let method = common.text("method")?;
    let reference_hours = common.real_or("reference_hours", REFERENCE_HOURS)?;
    let sweep_hours = common.list("sweep_hours")?.unwrap_or_else(|| DEFAULT_GRID.to_vec());
    let default_lifetime = common.real_or("lifetime_hours", DEFAULT_LIFETIME_HOURS)?;
    let default_multiplier = common.count("replacement_multiplier", 1)?;
    let mut assembly = Vec::new();
    for product in common.with_prefix("assembly") {
        let amount = common.required_real(&format!("assembly.{product}"))?;
        assembly.push((FlowId::from(product), amount));
    }
    let desktop = match common.text("desktop.product")? {
        Some(p) => Some((FlowId::from(p), common.real_or("desktop.power_kw", 0.0)?)),
        None => None,
    };
    let shared = SharedRoles {
        grid: common.required_text("grid")?.into(),
        freight: common.required_text("freight")?.into(),
        waste: common.required_text("waste")?.into(),
        assembly,
        desktop,
    };
    common.finish()?;

    let quantum_defaults = scopes.remove("quantum").unwrap_or_default();
    let hpc_defaults = scopes.remove("hpc").unwrap_or_default();
    let mut scenarios = Vec::new();
    for (scope, own) in scopes {
        let id = scope.strip_prefix("scenario:").expect("scope checked").to_string();
        let mut own = Keys::new(&scope, own);
        let kind = own.required_text("kind")?;
        let description = own.text("description")?.unwrap_or_default();
        let lifetime_hours = own.real_or("lifetime_hours", default_lifetime)?;
        let replacement_multiplier = own.count("replacement_multiplier", default_multiplier)?;
        let defaults = match kind.as_str() {
            "quantum" => &quantum_defaults,
            "hpc" => &hpc_defaults,
            _ => {
                let e = own.entries["kind"].clone();
                return Err(own.err(&e, "kind", "expected `quantum` or `hpc`"));
            }
        };
        let mut merged = defaults.clone();
        for (k, e) in &own.entries {
            if !own.used.contains(k) {
                merged.insert(k.clone(), e.clone());
            }
        }
        let mut keys = Keys::new(&scope, merged);
        let config = if kind == "quantum" {
            SystemConfig::Quantum(quantum_config(&mut keys, shared.clone())?)
        } else {
            SystemConfig::Hpc(hpc_config(&mut keys, shared.clone())?)
        };
        keys.finish()?;
        scenarios.push(ScenarioSpec {
            id,
            description,
            config,
            lifetime_hours,
            replacement_multiplier,
        });
    }
    // Kind scopes with no scenario are still checked for typos.
    for (scope, entries) in [("quantum", quantum_defaults), ("hpc", hpc_defaults)] {
        let mut keys = Keys::new(scope, entries);
        let used = if scope == "quantum" {
            quantum_config(&mut keys, shared.clone()).map(|_| ())
        } else {
            hpc_config(&mut keys, shared.clone()).map(|_| ())
        };
        // Missing required keys only matter once a scenario uses the scope.
        match used {
            Err(LcaError::MissingRole(_)) | Ok(()) => {}
            Err(e) => return Err(e),
        }
        keys.used.extend(keys.entries.keys().filter(|k| known_key(scope, k)).cloned().collect::<Vec<_>>());
        keys.finish()?;
    }

    Ok(ScenarioFile {
        method,
        reference_hours,
        sweep_hours,
        shared,
        scenarios,
    })
}

const QUANTUM_KEYS: &[&str] = &[
    "logical_qubits",
    "overhead_factor",
    "multiplexing_factor",
    "cryostat_count",
    "setups_per_cryostat",
    "control_unit_count",
    "per_setup_cryo_power_w",
    "per_setup_rack_power_w",
    "compressor_power_kw",
    "ghs_power_kw",
    "control_unit_power_kw",
    "nitrogen_l_per_week_per_compressor",
    "nitrogen_density_kg_per_l",
    "nitrogen_flow",
    "nitrogen_supply",
];
const SUBSYSTEM_FIELDS: &[&str] = &["product", "quantity", "mass_kg", "origin", "distance_km", "recyclable_fraction"];
const HPC_KEYS: &[&str] = &[
    "target_cores",
    "cores_per_cpu",
    "cpus_per_blade",
    "blade_power_kw",
    "blade_mass_kg",
    "psu_count",
    "psu_rating_w",
    "psu_load_fraction",
    "blade_product",
    "cable_product",
    "cable_mass_per_blade_kg",
    "origin",
    "distance_km",
    "recyclable_fraction",
];

fn known_key(scope: &str, key: &str) -> bool {
    if scope == "hpc" {
        return HPC_KEYS.contains(&key);
    }
    if QUANTUM_KEYS.contains(&key) {
        return true;
    }
    let mut parts = key.splitn(3, '.');
    matches!(
        (parts.next(), parts.next(), parts.next()),
        (Some("subsystem"), Some(role), Some(field))
            if QuantumRole::from_id(role).is_some() && SUBSYSTEM_FIELDS.contains(&field)
    )
}

fn fraction(keys: &mut Keys, key: &str) -> Result<f64> {
    match keys.take(key) {
        None => Ok(0.0),
        Some(e) => match parse_real(&e.value) {
            Some(v) if (0.0..=1.0).contains(&v) => Ok(v),
            _ => Err(keys.err(&e, key, "must be a number in [0, 1]")),
        },
    }
}

fn quantum_config(keys: &mut Keys, shared: SharedRoles) -> Result<QuantumConfig> {
    let mut c = QuantumConfig::with_defaults(shared);
    c.logical_qubits = keys.count("logical_qubits", c.logical_qubits)?;
    c.overhead_factor = keys.real_or("overhead_factor", c.overhead_factor)?;
    c.multiplexing_factor = keys.real_or("multiplexing_factor", c.multiplexing_factor)?;
    c.control_unit_count = keys.count("control_unit_count", c.control_unit_count)?;
    let fixed = keys.integer("cryostat_count")?;
    let capacity = keys.take("setups_per_cryostat");
    c.cryostat_count = match (fixed, capacity) {
        (Some(_), Some(e)) => {
            return Err(keys.err(&e, "setups_per_cryostat", "conflicts with cryostat_count"));
        }
        (Some(n), None) => u32::try_from(n).map_err(|_| LcaError::InvalidArgument {
            name: "cryostat_count",
            value: n as f64,
            reason: "too large",
        })?,
        (None, Some(e)) => {
            let cap = parse_real(&e.value)
                .ok_or_else(|| keys.err(&e, "setups_per_cryostat", "not a number"))?;
            let setups = qec_setups(c.logical_qubits, c.overhead_factor, c.multiplexing_factor)?;
            cryostats_for_capacity(setups, cap)?
        }
        (None, None) => c.cryostat_count,
    };
    c.per_setup_cryo_power_w = keys.real_or("per_setup_cryo_power_w", c.per_setup_cryo_power_w)?;
    c.per_setup_rack_power_w = keys.real_or("per_setup_rack_power_w", c.per_setup_rack_power_w)?;
    c.compressor_power_kw = keys.real_or("compressor_power_kw", c.compressor_power_kw)?;
    c.ghs_power_kw = keys.real_or("ghs_power_kw", c.ghs_power_kw)?;
    c.control_unit_power_kw = keys.real_or("control_unit_power_kw", c.control_unit_power_kw)?;
    c.nitrogen_l_per_week_per_compressor =
        keys.real_or("nitrogen_l_per_week_per_compressor", c.nitrogen_l_per_week_per_compressor)?;
    c.nitrogen_density_kg_per_l = keys.real_or("nitrogen_density_kg_per_l", c.nitrogen_density_kg_per_l)?;
    if let Some(f) = keys.text("nitrogen_flow")? {
        c.nitrogen_flow = f.into();
    }
    c.nitrogen_supply = keys.text("nitrogen_supply")?.map(FlowId::from);
    for role in QuantumRole::ALL {
        let p = |field: &str| format!("subsystem.{}.{field}", role.id());
        c.subsystems.insert(
            role,
            SubsystemSpec {
                product: keys.required_text(&p("product"))?.into(),
                quantity: keys.real_or(&p("quantity"), 1.0)?,
                mass_kg: keys.required_real(&p("mass_kg"))?,
                origin: keys.text(&p("origin"))?.unwrap_or_default(),
                distance_km: keys.required_real(&p("distance_km"))?,
                recyclable_fraction: fraction(keys, &p("recyclable_fraction"))?,
            },
        );
    }
    c.validate()?;
    Ok(c)
}

fn hpc_config(keys: &mut Keys, shared: SharedRoles) -> Result<HpcConfig> {
    let blade = keys.required_text("blade_product")?;
    let mut c = HpcConfig::with_defaults(blade.into(), shared);
    if let Some(n) = keys.integer("target_cores")? {
        c.target_cores = n;
    }
    c.cores_per_cpu = keys.count("cores_per_cpu", c.cores_per_cpu)?;
    c.cpus_per_blade = keys.count("cpus_per_blade", c.cpus_per_blade)?;
    c.blade_power_kw = keys.real_or("blade_power_kw", c.blade_power_kw)?;
    c.blade_mass_kg = keys.real_or("blade_mass_kg", c.blade_mass_kg)?;
    c.psu = PsuSpec {
        count: keys.count("psu_count", c.psu.count)?,
        rating_w: keys.real_or("psu_rating_w", c.psu.rating_w)?,
        load_fraction: keys.real_or("psu_load_fraction", c.psu.load_fraction)?,
    };
    c.cable_product = keys.text("cable_product")?.map(FlowId::from);
    c.cable_mass_per_blade_kg = keys.real_or("cable_mass_per_blade_kg", c.cable_mass_per_blade_kg)?;
    if let Some(o) = keys.text("origin")? {
        c.origin = o;
    }
    c.distance_km = keys.real_or("distance_km", c.distance_km)?;
    c.recyclable_fraction = fraction(keys, "recyclable_fraction")?;
    c.validate()?;
    Ok(c)
}
