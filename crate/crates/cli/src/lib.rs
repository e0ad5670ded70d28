//! Command-line front end: argument parsing, dataset resolution, console
//! tables and report files.
//!
//! Exit status: 0 success, 1 invalid input or failed check, 2 computation
//! failure, 64 usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use qlca::dataset::{load_and_validate, Bundle, SystemConfig};
use qlca::hpc::{self, MachineDescriptor};
use qlca::impact::{Impacts, Indicator, PhaseImpact};
use qlca::model::SystemKind;
use qlca::report::{self, display};
use qlca::scenario::{run_sensitivity, Scenario, SweepSeries};
use qlca::LcaError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_COMPUTATION: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "qlca", version, about = "Life-cycle impacts of a quantum computer and a core-equivalent supercomputer")]
struct Cli {
    /// Dataset directory; the embedded reference bundle when omitted.
    #[arg(long, global = true, env = "QLCA_DATASET", value_name = "DIR")]
    dataset: Option<PathBuf>,
    /// Directory for CSV and SVG outputs; nothing is written when omitted.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load the dataset and report diagnostics.
    Validate {
        /// Treat warnings as failures.
        #[arg(long)]
        strict: bool,
    },
    /// Size one system and evaluate it.
    Model {
        #[command(subcommand)]
        system: ModelCommand,
    },
    /// Two scenarios side by side, with their crossover hours.
    Compare {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// Operating hours, comma separated; the dataset reference hour by default.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        hours: Vec<f64>,
    },
    /// Phase results over a grid of operating hours.
    Sweep {
        /// Scenario ids, comma separated; all scenarios by default.
        #[arg(long = "scenario", value_delimiter = ',')]
        scenarios: Vec<String>,
        /// Hour grid, comma separated; the dataset grid by default.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        hours: Vec<f64>,
    },
    /// Every scenario: sweeps, crossovers, ratios, dominance and charts.
    Sensitivity {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        hours: Vec<f64>,
        #[arg(long, allow_negative_numbers = true)]
        reference_hours: Option<f64>,
    },
    /// Compare derived machine quantities with their published values.
    #[command(name = "crosscheck-table21")]
    CrosscheckTable21,
}

#[derive(Debug, Subcommand)]
enum ModelCommand {
    Quantum(QuantumArgs),
    Hpc(HpcArgs),
}

#[derive(Debug, Args)]
struct QuantumArgs {
    #[arg(long, default_value = "A")]
    scenario: String,
    #[arg(long)]
    logical_qubits: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    overhead: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    multiplexing: Option<f64>,
    #[arg(long)]
    cryostats: Option<u32>,
    #[arg(long)]
    control_units: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    hours: Option<f64>,
}

#[derive(Debug, Args)]
struct HpcArgs {
    #[arg(long, default_value = "B")]
    scenario: String,
    #[arg(long)]
    target_cores: Option<u64>,
    #[arg(long)]
    cores_per_cpu: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    blade_power_kw: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    hours: Option<f64>,
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Computation(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => EXIT_INVALID,
            Failure::Computation(_) => EXIT_COMPUTATION,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Computation(m) => m,
        }
    }
}

fn is_computational(e: &LcaError) -> bool {
    match e {
        LcaError::Scenario { source, .. } => is_computational(source),
        LcaError::Singular { .. }
        | LcaError::IllConditioned { .. }
        | LcaError::Residual { .. }
        | LcaError::IndexMismatch { .. }
        | LcaError::NonFinite { .. }
        | LcaError::EmptySeries => true,
        _ => false,
    }
}

impl From<LcaError> for Failure {
    fn from(e: LcaError) -> Self {
        if is_computational(&e) {
            Failure::Computation(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

struct Session<'a> {
    stdout: &'a mut dyn Write,
    out_dir: Option<PathBuf>,
}

impl Session<'_> {
    fn say(&mut self, text: &str) -> Outcome {
        self.stdout
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Computation(format!("stdout: {e}")))
    }

    fn file(&mut self, name: &str, contents: &str) -> Outcome {
        let Some(dir) = &self.out_dir else { return Ok(()) };
        let path = dir.join(name);
        write_file(&path, contents).map_err(|e| Failure::Computation(format!("{}: {e}", path.display())))?;
        log::debug!("wrote {}", path.display());
        Ok(())
    }
}

fn write_file(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)
}

/// Runs one command line with the process's stdout and stderr.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// Runs one command line, writing console output to the given streams.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let mut session = Session {
        stdout,
        out_dir: cli.out.clone(),
    };
    match dispatch(&cli, &mut session) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            f.code()
        }
    }
}

fn load(cli: &Cli) -> Result<(Bundle, String), Failure> {
    match &cli.dataset {
        Some(dir) => Ok((load_and_validate(dir)?, dir.display().to_string())),
        None => Ok((Bundle::reference()?, "embedded reference".to_string())),
    }
}

fn dispatch(cli: &Cli, s: &mut Session<'_>) -> Outcome {
    let (bundle, source) = load(cli)?;
    match &cli.command {
        Command::Validate { strict } => validate(&bundle, &source, *strict, s),
        Command::Model { system: ModelCommand::Quantum(args) } => model_quantum(&bundle, args, s),
        Command::Model { system: ModelCommand::Hpc(args) } => model_hpc(&bundle, args, s),
        Command::Compare { a, b, hours } => compare(&bundle, a, b, hours, s),
        Command::Sweep { scenarios, hours } => sweep(&bundle, scenarios, hours, s),
        Command::Sensitivity { hours, reference_hours } => sensitivity(&bundle, hours, *reference_hours, s),
        Command::CrosscheckTable21 => crosscheck(&bundle, s),
    }
}

fn validate(bundle: &Bundle, source: &str, strict: bool, s: &mut Session<'_>) -> Outcome {
    let mut text = String::new();
    let _ = writeln!(text, "dataset: {source}");
    let _ = writeln!(
        text,
        "{} flows, {} processes, method `{}`, scenarios {}",
        bundle.flows.len(),
        bundle.processes.len(),
        bundle.method.name,
        bundle.scenario_ids().join(", ")
    );
    for d in &bundle.diagnostics {
        let _ = writeln!(text, "{d}");
    }
    let _ = writeln!(text, "{} warnings", bundle.diagnostics.len());
    s.say(&text)?;
    if strict && !bundle.diagnostics.is_empty() {
        return Err(Failure::Invalid("warnings present under --strict".into()));
    }
    Ok(())
}

fn phase_table(scenario: &str, hours: f64, phases: &[PhaseImpact]) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "{scenario} at {} h", display(hours));
    let _ = write!(t, "  {:<12}", "phase");
    for ind in Indicator::ALL {
        let _ = write!(t, "{:>28}", format!("{} ({})", ind.id(), ind.unit()));
    }
    t.push('\n');
    let mut total = Impacts::ZERO;
    for p in phases {
        total += p.impacts;
        let _ = write!(t, "  {:<12}", p.phase.id());
        for ind in Indicator::ALL {
            let _ = write!(t, "{:>28}", display(p.impacts[ind]));
        }
        t.push('\n');
    }
    let _ = write!(t, "  {:<12}", "total");
    for ind in Indicator::ALL {
        let _ = write!(t, "{:>28}", display(total[ind]));
    }
    t.push('\n');
    t
}

fn contribution_table(parts: &[(String, Impacts)]) -> String {
    let mut total = Impacts::ZERO;
    for (_, v) in parts {
        total += *v;
    }
    let mut t = String::from("  production share by subsystem\n");
    for (name, v) in parts {
        let _ = write!(t, "    {name:<14}");
        for ind in Indicator::ALL {
            let share = if total[ind] > 0.0 { 100.0 * v[ind] / total[ind] } else { 0.0 };
            let _ = write!(t, "{:>12}", format!("{}%", report::format_sig(share, 3)));
        }
        t.push('\n');
    }
    t
}

fn quantity_table(rows: &[(String, &str, f64, &str)]) -> String {
    let mut t = String::new();
    for (_, q, v, unit) in rows {
        let _ = writeln!(t, "  {q:<28}{:>16} {unit}", display(*v));
    }
    t
}

fn single_model(
    bundle: &Bundle,
    scenario: &Scenario,
    hours: f64,
    quantities: Vec<(String, &str, f64, &str)>,
    s: &mut Session<'_>,
) -> Outcome {
    let engine = bundle.engine();
    let phases = engine.evaluate(scenario, hours)?;
    let parts = engine.contributions(scenario)?;
    let mut text = format!("scenario {}\n", scenario.id);
    text.push_str(&quantity_table(&quantities));
    text.push_str(&phase_table(&scenario.id, hours, &phases));
    text.push_str(&contribution_table(&parts));
    s.say(&text)?;
    s.file("quantities.csv", &report::quantities_csv(&quantities))?;
    s.file("phase_impacts.csv", &report::phase_impacts_csv(&[(scenario.id.clone(), hours, phases)]))?;
    s.file("contributions.csv", &report::contribution_csv(&[(scenario.id.clone(), parts)]))
}

fn model_quantum(bundle: &Bundle, args: &QuantumArgs, s: &mut Session<'_>) -> Outcome {
    let mut spec = bundle.spec(&args.scenario)?.clone();
    let SystemConfig::Quantum(cfg) = &mut spec.config else {
        return Err(Failure::Invalid(format!("scenario `{}` is not a quantum scenario", spec.id)));
    };
    if let Some(v) = args.logical_qubits {
        cfg.logical_qubits = v;
    }
    if let Some(v) = args.overhead {
        cfg.overhead_factor = v;
    }
    if let Some(v) = args.multiplexing {
        cfg.multiplexing_factor = v;
    }
    if let Some(v) = args.cryostats {
        cfg.cryostat_count = v;
    }
    if let Some(v) = args.control_units {
        cfg.control_unit_count = v;
    }
    let cfg = cfg.clone();
    let scenario = bundle.build(&spec)?;
    let SystemKind::Quantum { counts, power } = &scenario.system.kind else {
        unreachable!("quantum config builds a quantum system")
    };
    let id = scenario.id.clone();
    let row = |q, v, u| (id.clone(), q, v, u);
    let quantities = vec![
        row("logical_qubits", cfg.logical_qubits as f64, "qubit"),
        row("overhead_factor", cfg.overhead_factor, "1"),
        row("multiplexing_factor", cfg.multiplexing_factor, "1"),
        row("qec_setups", counts.qec_setups as f64, "setup"),
        row("cryostats", counts.cryostats as f64, "unit"),
        row("setups_per_cryostat", counts.setups_per_cryostat(), "setup"),
        row("ghs_units", counts.ghs_units as f64, "unit"),
        row("compressors", counts.compressors as f64, "unit"),
        row("control_units", counts.control_units as f64, "unit"),
        row("compressors_power_kw", power.compressors_kw, "kW"),
        row("ghs_power_kw", power.ghs_kw, "kW"),
        row("qec_power_kw", power.qec_kw, "kW"),
        row("control_unit_power_kw", power.control_unit_kw, "kW"),
        row("system_power_kw", power.total_kw, "kW"),
        row("grid_draw_kw", scenario.system.power_kw, "kW"),
        row("nitrogen_l_per_hour", cfg.nitrogen_l_per_hour(counts), "L/h"),
        row("mass_kg", scenario.system.mass_kg, "kg"),
        row("freight_tkm", scenario.system.freight_tkm, "t*km"),
    ];
    let hours = args.hours.unwrap_or(bundle.scenarios.reference_hours);
    single_model(bundle, &scenario, hours, quantities, s)
}

fn model_hpc(bundle: &Bundle, args: &HpcArgs, s: &mut Session<'_>) -> Outcome {
    let mut spec = bundle.spec(&args.scenario)?.clone();
    let SystemConfig::Hpc(cfg) = &mut spec.config else {
        return Err(Failure::Invalid(format!("scenario `{}` is not an hpc scenario", spec.id)));
    };
    if let Some(v) = args.target_cores {
        cfg.target_cores = v;
    }
    if let Some(v) = args.cores_per_cpu {
        cfg.cores_per_cpu = v;
    }
    if let Some(v) = args.blade_power_kw {
        cfg.blade_power_kw = v;
    }
    let cfg = cfg.clone();
    let scenario = bundle.build(&spec)?;
    let SystemKind::Hpc { fleet } = &scenario.system.kind else {
        unreachable!("hpc config builds an hpc system")
    };
    let blade_energy = hpc::annual_energy_kwh(cfg.blade_power_kw, hpc::HOURS_PER_YEAR)?;
    let id = scenario.id.clone();
    let row = |q, v, u| (id.clone(), q, v, u);
    let quantities = vec![
        row("target_cores", cfg.target_cores as f64, "cores"),
        row("cores_per_cpu", cfg.cores_per_cpu as f64, "cores"),
        row("blades", fleet.blades, "blade"),
        row("cpus", fleet.cpus, "CPU"),
        row("blade_power_kw", cfg.blade_power_kw, "kW"),
        row("psu_supplied_kw", cfg.psu.supplied_kw(), "kW"),
        row("fleet_power_kw", fleet.total_power_kw, "kW"),
        row("grid_draw_kw", scenario.system.power_kw, "kW"),
        row("blade_annual_energy_kwh", blade_energy, "kWh"),
        row("fleet_annual_energy_kwh", blade_energy * fleet.blades, "kWh"),
        row("fleet_mass_kg", fleet.total_mass_kg, "kg"),
        row("cable_mass_kg", fleet.cable_mass_kg, "kg"),
        row("freight_tkm", scenario.system.freight_tkm, "t*km"),
    ];
    let hours = args.hours.unwrap_or(bundle.scenarios.reference_hours);
    single_model(bundle, &scenario, hours, quantities, s)
}

fn sorted_grid(hours: &[f64]) -> Vec<f64> {
    let mut grid = hours.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn crossover_lines(report: &qlca::scenario::SensitivityReport) -> String {
    let mut t = String::from("crossovers\n");
    for c in &report.crossovers {
        let at = c.hours.map_or("none".to_string(), |h| format!("{} h", display(h)));
        let _ = writeln!(
            t,
            "  {} vs {} {:<15} {:<16} {:>14}  lower before: {}, after: {}",
            c.x,
            c.y,
            c.indicator.id(),
            c.status.id(),
            at,
            c.lower_before.as_deref().unwrap_or("none"),
            c.lower_after.as_deref().unwrap_or("none")
        );
    }
    t
}

fn compare(bundle: &Bundle, a: &str, b: &str, hours: &[f64], s: &mut Session<'_>) -> Outcome {
    let hours = if hours.is_empty() { vec![bundle.scenarios.reference_hours] } else { hours.to_vec() };
    let scenarios = vec![bundle.scenario(a)?, bundle.scenario(b)?];
    let engine = bundle.engine();
    let report = run_sensitivity(&engine, &scenarios, &sorted_grid(&hours), bundle.scenarios.reference_hours)?;
    let mut rows = Vec::new();
    let mut text = String::new();
    for &h in &hours {
        for p in &report.profiles {
            let phases = p.at(h)?;
            text.push_str(&phase_table(&p.scenario, h, &phases));
            rows.push((p.scenario.clone(), h, phases));
        }
    }
    text.push_str(&crossover_lines(&report));
    let _ = writeln!(text, "{b} over {a} at {} h", display(report.reference_hours));
    for r in report.ratios.iter().filter(|r| r.x == a) {
        let _ = writeln!(
            text,
            "  {:<15} fixed-phase ratio {:>10}  orders of magnitude {:>10}",
            r.indicator.id(),
            r.fixed_ratio.map_or("none".into(), |v| display(1.0 / v)),
            r.orders_of_magnitude.map_or("none".into(), display)
        );
    }
    s.say(&text)?;
    s.file("phase_impacts.csv", &report::phase_impacts_csv(&rows))?;
    s.file("crossovers.csv", &report::crossover_csv(&report.crossovers))?;
    s.file("ratios.csv", &report::ratio_csv(&report.ratios))
}

fn file_stem(id: &str) -> String {
    id.chars()
        .flat_map(|c| match c {
            '\'' => "-prime".chars().collect::<Vec<_>>(),
            c if c.is_ascii_alphanumeric() || c == '-' || c == '_' => vec![c],
            _ => vec!['_'],
        })
        .collect()
}

fn write_charts(series: &[SweepSeries], s: &mut Session<'_>) -> Outcome {
    for ind in Indicator::ALL {
        s.file(&format!("lines_{}.svg", ind.id()), &report::log_lines_svg(series, ind)?)?;
        for one in series {
            s.file(
                &format!("bars_{}_{}.svg", file_stem(&one.scenario), ind.id()),
                &report::stacked_bars_svg(one, ind)?,
            )?;
        }
    }
    Ok(())
}

fn sweep_table(series: &[SweepSeries]) -> String {
    let mut t = String::new();
    for ind in Indicator::ALL {
        let _ = writeln!(t, "{} ({}) totals", ind.id(), ind.unit());
        let _ = write!(t, "  {:<10}", "hours");
        for one in series {
            let _ = write!(t, "{:>14}", one.scenario);
        }
        t.push('\n');
        if let Some(first) = series.first() {
            for (i, h) in first.hours.iter().enumerate() {
                let _ = write!(t, "  {:<10}", display(*h));
                for one in series {
                    let _ = write!(t, "{:>14}", display(one.total(ind, i)));
                }
                t.push('\n');
            }
        }
    }
    t
}

fn sweep(bundle: &Bundle, ids: &[String], hours: &[f64], s: &mut Session<'_>) -> Outcome {
    let grid = if hours.is_empty() { bundle.scenarios.sweep_hours.clone() } else { hours.to_vec() };
    let scenarios = if ids.is_empty() {
        bundle.all_scenarios()?
    } else {
        ids.iter().map(|id| bundle.scenario(id)).collect::<Result<Vec<_>, _>>()?
    };
    let engine = bundle.engine();
    let series = scenarios
        .iter()
        .map(|sc| engine.sweep(sc, &grid))
        .collect::<Result<Vec<_>, _>>()?;
    s.say(&sweep_table(&series))?;
    s.file("sweep.csv", &report::sweep_csv(&series))?;
    write_charts(&series, s)
}

fn sensitivity(bundle: &Bundle, hours: &[f64], reference: Option<f64>, s: &mut Session<'_>) -> Outcome {
    let grid = if hours.is_empty() { bundle.scenarios.sweep_hours.clone() } else { hours.to_vec() };
    let reference = reference.unwrap_or(bundle.scenarios.reference_hours);
    let scenarios = bundle.all_scenarios()?;
    let report = run_sensitivity(&bundle.engine(), &scenarios, &grid, reference)?;

    let mut text = String::new();
    for (id, phases) in &report.at_reference {
        text.push_str(&phase_table(id, reference, phases));
    }
    text.push_str(&sweep_table(&report.sweeps));
    text.push_str(&crossover_lines(&report));
    text.push_str("use phase exceeds production after\n");
    for (id, ind, h) in &report.dominance {
        let at = h.map_or("never".to_string(), |h| format!("{} h", display(h)));
        let _ = writeln!(text, "  {id:<6} {:<15} {at}", ind.id());
    }
    for (x, y, r) in &report.setup_ratios {
        let _ = writeln!(text, "error-correction setups {y} / {x}: {}", display(*r));
    }
    s.say(&text)?;

    let rows: Vec<_> = report
        .at_reference
        .iter()
        .map(|(id, phases)| (id.clone(), reference, phases.clone()))
        .collect();
    s.file("phase_impacts.csv", &report::phase_impacts_csv(&rows))?;
    s.file("sweep.csv", &report::sweep_csv(&report.sweeps))?;
    s.file("crossovers.csv", &report::crossover_csv(&report.crossovers))?;
    s.file("dominance.csv", &report::dominance_csv(&report.dominance))?;
    s.file("ratios.csv", &report::ratio_csv(&report.ratios))?;
    s.file("setup_ratios.csv", &report::setup_ratio_csv(&report.setup_ratios))?;
    s.file("contributions.csv", &report::contribution_csv(&report.contributions))?;
    write_charts(&report.sweeps, s)
}

fn crosscheck(bundle: &Bundle, s: &mut Session<'_>) -> Outcome {
    let cfg = bundle
        .scenarios
        .scenarios
        .iter()
        .filter_map(|spec| match &spec.config {
            SystemConfig::Hpc(cfg) => Some((spec.id != "B", cfg)),
            SystemConfig::Quantum(_) => None,
        })
        .min_by_key(|(not_b, _)| *not_b)
        .map(|(_, cfg)| cfg)
        .ok_or_else(|| Failure::Invalid("dataset has no hpc scenario".into()))?;
    let cells = hpc::table_crosscheck(&MachineDescriptor::modeled(cfg), &MachineDescriptor::reference())?;
    let mut text = format!(
        "  {:<10}{:<20}{:>16}{:>16}  {:<6}{:>10}  result\n",
        "machine", "quantity", "computed", "published", "unit", "diff"
    );
    for c in &cells {
        let _ = writeln!(
            text,
            "  {:<10}{:<20}{:>16}{:>16}  {:<6}{:>9}%  {}",
            c.machine,
            c.quantity,
            display(c.computed),
            display(c.published),
            report::quantity_unit(c.quantity),
            report::format_sig(100.0 * c.rel_diff, 3),
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    let failed = cells.iter().filter(|c| !c.pass).count();
    let _ = writeln!(text, "{} of {} cells within tolerance", cells.len() - failed, cells.len());
    s.say(&text)?;
    s.file("crosscheck.csv", &report::crosscheck_csv(&cells))?;
    if failed > 0 {
        return Err(Failure::Invalid(format!("{failed} cells outside tolerance")));
    }
    Ok(())
}
