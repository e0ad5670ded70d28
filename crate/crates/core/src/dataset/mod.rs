//! Dataset bundles: flows, processes, characterization factors and
//! scenarios, loaded from four versioned text files.

pub mod format;
pub mod scenarios;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use self::format::{read_rows, ColumnType, Schema};
pub use self::scenarios::{ScenarioFile, ScenarioSpec, SystemConfig};
use crate::error::{LcaError, Result};
use crate::hpc::build_hpc_system;
use crate::impact::{ImpactMethod, Indicator};
use crate::lci::{build_system, Direction, Exchange, Flow, FlowId, FlowKind, InventorySystem, Process, ProcessId};
use crate::quantum::build_quantum_system;
use crate::scenario::{Engine, Scenario};

pub const FLOWS: Schema = Schema {
    kind: "flows",
    file: "flows.csv",
    columns: &[
        ("id", ColumnType::Text),
        ("name", ColumnType::Text),
        ("kind", ColumnType::Text),
        ("unit", ColumnType::Text),
        ("compartment", ColumnType::Text),
    ],
};

pub const PROCESSES: Schema = Schema {
    kind: "processes",
    file: "processes.csv",
    columns: &[
        ("process", ColumnType::Text),
        ("name", ColumnType::Text),
        ("location", ColumnType::Text),
        ("flow", ColumnType::Text),
        ("amount", ColumnType::Real),
        ("direction", ColumnType::Text),
    ],
};

pub const CHARACTERIZATION: Schema = Schema {
    kind: "characterization",
    file: "characterization.csv",
    columns: &[
        ("method", ColumnType::Text),
        ("flow", ColumnType::Text),
        ("indicator", ColumnType::Text),
        ("factor", ColumnType::Real),
    ],
};

pub const FILE_NAMES: [&str; 4] = ["flows.csv", "processes.csv", "characterization.csv", "scenarios.csv"];

/// Raw file contents of a bundle.
#[derive(Debug, Clone, Default)]
pub struct BundleSources {
    pub flows: Vec<u8>,
    pub processes: Vec<u8>,
    pub characterization: Vec<u8>,
    pub scenarios: Vec<u8>,
}

impl BundleSources {
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read(&path).map_err(|e| LcaError::Io {
                path,
                message: e.to_string(),
            })
        };
        Ok(BundleSources {
            flows: read(FILE_NAMES[0])?,
            processes: read(FILE_NAMES[1])?,
            characterization: read(FILE_NAMES[2])?,
            scenarios: read(FILE_NAMES[3])?,
        })
    }

    /// The calibrated reference bundle compiled into the library.
    pub fn reference() -> Self {
        BundleSources {
            flows: include_bytes!("../../data/reference/flows.csv").to_vec(),
            processes: include_bytes!("../../data/reference/processes.csv").to_vec(),
            characterization: include_bytes!("../../data/reference/characterization.csv").to_vec(),
            scenarios: include_bytes!("../../data/reference/scenarios.csv").to_vec(),
        }
    }
}

/// A non-fatal finding from loading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub file: &'static str,
    pub line: Option<u64>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "warning: {}:{l}: {}", self.file, self.message),
            None => write!(f, "warning: {}: {}", self.file, self.message),
        }
    }
}

/// A validated, immutable dataset.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub flows: Vec<Flow>,
    pub processes: Vec<Process>,
    pub system: InventorySystem,
    pub method: ImpactMethod,
    pub scenarios: ScenarioFile,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn load_and_validate(dir: &Path) -> Result<Bundle> {
    Bundle::from_sources(&BundleSources::read_dir(dir)?)
}

fn parse_flows(bytes: &[u8]) -> Result<(Vec<Flow>, BTreeMap<String, u64>)> {
    let mut flows = Vec::new();
    let mut lines = BTreeMap::new();
    for row in read_rows(&FLOWS, bytes)? {
        let id = row.required(0, "id")?;
        let kind = match row.text(2) {
            "elementary" => FlowKind::Elementary,
            "intermediate" => FlowKind::Intermediate,
            other => return Err(row.error(format!("kind `{other}` is not `elementary` or `intermediate`"))),
        };
        let compartment = row.text(4);
        let flow = Flow {
            id: id.into(),
            name: row.text(1).to_string(),
            kind,
            unit: row.required(3, "unit")?.to_string(),
            compartment: (!compartment.is_empty()).then(|| compartment.to_string()),
        };
        flow.validate().map_err(|e| row.error(e.to_string()))?;
        if let Some(first) = lines.insert(id.to_string(), row.line) {
            return Err(row.error(format!("duplicate flow `{id}` (first on line {first})")));
        }
        flows.push(flow);
    }
    Ok((flows, lines))
}

fn parse_processes(bytes: &[u8]) -> Result<(Vec<Process>, BTreeMap<String, u64>)> {
    struct Draft {
        name: String,
        location: String,
        reference: Option<(FlowId, u64)>,
        exchanges: Vec<Exchange>,
    }
    let mut drafts: BTreeMap<String, Draft> = BTreeMap::new();
    let mut lines = BTreeMap::new();
    for row in read_rows(&PROCESSES, bytes)? {
        let id = row.required(0, "process")?;
        let flow = row.required(3, "flow")?;
        let amount = row.real(4, "amount")?;
        lines.entry(id.to_string()).or_insert(row.line);
        let d = drafts.entry(id.to_string()).or_insert_with(|| Draft {
            name: String::new(),
            location: String::new(),
            reference: None,
            exchanges: Vec::new(),
        });
        for (slot, i) in [(&mut d.name, 1), (&mut d.location, 2)] {
            let v = row.text(i);
            if !v.is_empty() {
                if !slot.is_empty() && slot != v {
                    return Err(row.error(format!("process `{id}` has conflicting {}", PROCESSES.columns[i].0)));
                }
                *slot = v.to_string();
            }
        }
        let direction = match row.text(5) {
            "input" => Direction::Input,
            "output" => Direction::Output,
            "reference" => {
                if let Some((_, first)) = &d.reference {
                    return Err(row.error(format!("process `{id}` already has a reference output on line {first}")));
                }
                d.reference = Some((flow.into(), row.line));
                Direction::Output
            }
            other => return Err(row.error(format!("direction `{other}` is not input, output or reference"))),
        };
        d.exchanges.push(Exchange {
            flow: flow.into(),
            amount,
            direction,
        });
    }
    let mut processes = Vec::new();
    for (id, d) in drafts {
        let Some((reference_product, _)) = d.reference else {
            return Err(LcaError::parse(
                PROCESSES.file,
                lines[&id],
                format!("process `{id}` has no row with direction `reference`"),
            ));
        };
        processes.push(Process {
            id: ProcessId(id),
            name: d.name,
            location: d.location,
            reference_product,
            exchanges: d.exchanges,
        });
    }
    Ok((processes, lines))
}

fn parse_method(
    bytes: &[u8],
    wanted: Option<&str>,
    flows: &[Flow],
    diagnostics: &mut Vec<Diagnostic>,
) -> Result<ImpactMethod> {
    let rows = read_rows(&CHARACTERIZATION, bytes)?;
    let mut names: Vec<&str> = rows.iter().map(|r| r.text(0)).collect();
    names.sort_unstable();
    names.dedup();
    let name = match wanted {
        Some(w) if names.contains(&w) => w.to_string(),
        Some(w) => {
            return Err(LcaError::parse(
                CHARACTERIZATION.file,
                2,
                format!("method `{w}` has no factors"),
            ))
        }
        None if names.len() == 1 => names[0].to_string(),
        None if names.is_empty() => {
            return Err(LcaError::parse(CHARACTERIZATION.file, 2, "no characterisation factors"));
        }
        None => {
            return Err(LcaError::parse(
                CHARACTERIZATION.file,
                2,
                format!("several methods ({}); select one with common.method", names.join(", ")),
            ))
        }
    };
    let mut method = ImpactMethod::new(name.clone());
    let mut seen: BTreeMap<(String, Indicator), u64> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.text(0) == name) {
        let flow = row.required(1, "flow")?;
        let indicator = Indicator::from_id(row.text(2))
            .ok_or_else(|| row.error(format!("unknown indicator `{}`", row.text(2))))?;
        let factor = row.real(3, "factor")?;
        if let Some(first) = seen.insert((flow.to_string(), indicator), row.line) {
            return Err(row.error(format!("duplicate factor for `{flow}`/{indicator} (first on line {first})")));
        }
        match flows.iter().find(|f| f.id.as_str() == flow) {
            Some(f) if f.is_elementary() => method.set(&flow.into(), indicator, factor)?,
            Some(_) => diagnostics.push(Diagnostic {
                file: CHARACTERIZATION.file,
                line: Some(row.line),
                message: format!("factor on intermediate flow `{flow}` ignored"),
            }),
            None => diagnostics.push(Diagnostic {
                file: CHARACTERIZATION.file,
                line: Some(row.line),
                message: format!("factor references unknown flow `{flow}`; ignored"),
            }),
        }
    }
    Ok(method)
}

/// Adds the process's first line to referential errors.
fn locate(err: LcaError, lines: &BTreeMap<String, u64>) -> LcaError {
    let process = match &err {
        LcaError::DanglingFlow { process, .. }
        | LcaError::InvalidProcess { process, .. }
        | LcaError::DuplicateProcess(process) => Some(process.clone()),
        LcaError::DuplicateProducer { second, .. } => Some(second.clone()),
        LcaError::Singular { .. } | LcaError::NoProducer(_) => None,
        _ => None,
    };
    match process.and_then(|p| lines.get(&p)) {
        Some(&line) => LcaError::parse(PROCESSES.file, line, err.to_string()),
        None => err,
    }
}

impl Bundle {
    pub fn reference() -> Result<Bundle> {
        Bundle::from_sources(&BundleSources::reference())
    }

    /// Parses and cross-checks all four files. Deterministic and independent
    /// of row order within each file.
    pub fn from_sources(src: &BundleSources) -> Result<Bundle> {
        let (flows, _) = parse_flows(&src.flows)?;
        let (processes, process_lines) = parse_processes(&src.processes)?;
        let scenario_rows = read_rows(&scenarios::SCHEMA, &src.scenarios)?;
        let scenario_file = scenarios::parse(&scenario_rows)?;
        let mut diagnostics = Vec::new();
        let method = parse_method(
            &src.characterization,
            scenario_file.method.as_deref(),
            &flows,
            &mut diagnostics,
        )?;
        let system = build_system(&processes, &flows).map_err(|e| locate(e, &process_lines))?;
        for flow in system.unreferenced_elementary() {
            diagnostics.push(Diagnostic {
                file: FLOWS.file,
                line: None,
                message: format!("elementary flow `{flow}` is not used by any process"),
            });
        }
        for flow in system.elementary_flows() {
            if !method.covers(flow.as_str()) {
                diagnostics.push(Diagnostic {
                    file: CHARACTERIZATION.file,
                    line: None,
                    message: format!("elementary flow `{flow}` has no characterisation factor"),
                });
            }
        }
        let bundle = Bundle {
            flows,
            processes,
            system,
            method,
            scenarios: scenario_file,
            diagnostics,
        };
        // Resolve every scenario now so role errors surface at load time.
        for spec in &bundle.scenarios.scenarios {
            bundle.build(spec)?;
        }
        Ok(bundle)
    }

    pub fn engine(&self) -> Engine<'_> {
        Engine::new(&self.system, &self.method)
    }

    pub fn scenario_ids(&self) -> Vec<&str> {
        self.scenarios.scenarios.iter().map(|s| s.id.as_str()).collect()
    }

    pub fn spec(&self, id: &str) -> Result<&ScenarioSpec> {
        self.scenarios
            .get(id)
            .ok_or_else(|| LcaError::UnknownScenario(id.to_string()))
    }

    pub fn build(&self, spec: &ScenarioSpec) -> Result<Scenario> {
        let system = match &spec.config {
            SystemConfig::Quantum(c) => build_quantum_system(&spec.id, c, &self.system),
            SystemConfig::Hpc(c) => build_hpc_system(&spec.id, c, &self.system),
        }
        .map_err(|e| e.in_scenario(&spec.id))?;
        Ok(Scenario {
            id: spec.id.clone(),
            system,
            lifetime_hours: spec.lifetime_hours,
            replacement_multiplier: spec.replacement_multiplier,
        })
    }

    pub fn scenario(&self, id: &str) -> Result<Scenario> {
        self.build(self.spec(id)?)
    }

    pub fn all_scenarios(&self) -> Result<Vec<Scenario>> {
        self.scenarios.scenarios.iter().map(|s| self.build(s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny() -> BundleSources {
        BundleSources {
            flows: b"#format: qlca-flows/1\nid:text,name:text,kind:text,unit:text,compartment:text\n\
co2,CO2,elementary,kg,air\nelec,Electricity,intermediate,kWh,\n"
                .to_vec(),
            processes: b"#format: qlca-processes/1\n\
process:text,name:text,location:text,flow:text,amount:real,direction:text\n\
grid,Grid,QC,elec,1,reference\ngrid,,,co2,0.02,output\n"
                .to_vec(),
            characterization: b"#format: qlca-characterization/1\n\
method:text,flow:text,indicator:text,factor:real\nm,co2,climate_change,1\n"
                .to_vec(),
            scenarios: b"#format: qlca-scenarios/1\nscope:text,key:text,value:text\n\
common,grid,elec\ncommon,freight,elec\ncommon,waste,elec\n"
                .to_vec(),
        }
    }

    #[test]
    fn tiny_bundle_loads() {
        let b = Bundle::from_sources(&tiny()).unwrap();
        assert_eq!(b.system.dim(), 1);
        assert_eq!(b.method.name, "m");
        assert!(b.scenario_ids().is_empty());
        assert!(b.diagnostics.is_empty(), "{:?}", b.diagnostics);
    }

    #[test]
    fn empty_processes_file() {
        let mut s = tiny();
        s.processes = b"#format: qlca-processes/1\nprocess:text,name:text,location:text,flow:text,amount:real,direction:text\n".to_vec();
        let err = Bundle::from_sources(&s).unwrap_err();
        assert_eq!(err.to_string(), "no processes");
    }

    #[test]
    fn unknown_flow_in_factors_is_a_warning() {
        let mut s = tiny();
        s.characterization.extend_from_slice(b"m,ghost,climate_change,3\n");
        let b = Bundle::from_sources(&s).unwrap();
        assert_eq!(b.diagnostics.len(), 1);
        assert!(b.diagnostics[0].message.contains("ghost"));
        assert_eq!(b.diagnostics[0].line, Some(4));
    }

    #[test]
    fn dangling_flow_is_located() {
        let mut s = tiny();
        s.processes.extend_from_slice(b"grid,,,missing,1,input\n");
        match Bundle::from_sources(&s).unwrap_err() {
            LcaError::Parse { file, line, message } => {
                assert_eq!((file.as_str(), line), ("processes.csv", 3));
                assert!(message.contains("missing") && message.contains("grid"), "{message}");
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn row_order_does_not_matter() {
        let mut s = tiny();
        s.processes = b"#format: qlca-processes/1\n\
process:text,name:text,location:text,flow:text,amount:real,direction:text\n\
grid,,,co2,0.02,output\ngrid,Grid,QC,elec,1,reference\n"
            .to_vec();
        let a = Bundle::from_sources(&tiny()).unwrap();
        let b = Bundle::from_sources(&s).unwrap();
        assert_eq!(a.system.biosphere(), b.system.biosphere());
        assert_eq!(a.processes[0].name, b.processes[0].name);
    }

    #[test]
    fn missing_reference_row() {
        let mut s = tiny();
        s.processes = b"#format: qlca-processes/1\n\
process:text,name:text,location:text,flow:text,amount:real,direction:text\ngrid,Grid,QC,elec,1,output\n"
            .to_vec();
        assert!(matches!(
            Bundle::from_sources(&s),
            Err(LcaError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn unknown_scenario() {
        let b = Bundle::from_sources(&tiny()).unwrap();
        assert_eq!(b.scenario("Z").unwrap_err(), LcaError::UnknownScenario("Z".into()));
    }
}
