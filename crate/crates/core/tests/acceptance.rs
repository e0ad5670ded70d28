//! Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
//!
//! Run with `cargo test -p qlca --test acceptance`.

mod common;

use std::time::Instant;

use common::*;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use qlca::dataset::Bundle;
use qlca::hpc::{self, annual_energy_kwh, blades_for_cores, HpcConfig, MachineDescriptor};
use qlca::impact::{Indicator, Phase};
use qlca::lci::FlowId;
use qlca::model::SharedRoles;
use qlca::quantum::{self, qec_setups, QuantumConfig};
use qlca::scenario::{crossover, run_sensitivity, Engine, SensitivityReport, DEFAULT_GRID, REFERENCE_HOURS};

const EXACT_TOL: f64 = 0.005;
const DELIVERY_TOL: f64 = 0.01;
const NEUMANN_TOL: f64 = 1e-6;
const LINEARITY_TOL: f64 = 1e-9;
const AFFINE_TOL: f64 = 1e-12;
const BISECTION_TOL_H: f64 = 1.0;
const A_TOTAL_T: f64 = 583.0;
const A_TOTAL_TOL: f64 = 0.05;
const A_USE_SHARE_MAX: f64 = 0.25;
const GAP_MIN: [f64; 3] = [1.5, 1.5, 0.8];
const CROSSOVER_TARGET_H: [f64; 3] = [50_000.0, 10_000.0, 85_000.0];
const CROSSOVER_TOL: f64 = 0.30;
const FIXED_RATIO_TARGET: [f64; 3] = [0.77, 0.88, 0.90];
const FIXED_RATIO_TOL: f64 = 0.10;
const CRYOSTAT_SHARE: (f64, f64) = (0.85, 0.95);

type Outcome = Result<String, String>;

fn close(got: f64, want: f64, tol: f64) -> bool {
    ((got - want) / want).abs() <= tol
}

fn shared() -> SharedRoles {
    SharedRoles {
        grid: FlowId::from("grid"),
        freight: FlowId::from("freight"),
        waste: FlowId::from("waste"),
        assembly: Vec::new(),
        desktop: None,
    }
}

fn criterion_1() -> Outcome {
    let a = qec_setups(100, 7.0, 4.0).map_err(|e| e.to_string())?;
    let ap = qec_setups(100, 1000.0, 20.0).map_err(|e| e.to_string())?;
    let detail = format!("setups A={a} A'={ap}");
    if a == 175 && ap == 5000 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_2() -> Outcome {
    let mut cfg = QuantumConfig::with_defaults(shared());
    let counts = quantum::counts_for(&cfg).map_err(|e| e.to_string())?;
    let a = quantum::quantum_power_kw(&counts, &cfg);
    cfg.overhead_factor = 1000.0;
    cfg.multiplexing_factor = 20.0;
    cfg.cryostat_count = 10;
    let counts = quantum::counts_for(&cfg).map_err(|e| e.to_string())?;
    let ap = quantum::quantum_power_kw(&counts, &cfg);
    let detail = format!(
        "A total {} kW (compressors {}, qec {}, ghs {}); A' compressors {} kW, qec {} kW",
        a.total_kw, a.compressors_kw, a.qec_kw, a.ghs_kw, ap.compressors_kw, ap.qec_kw
    );
    let ok = (a.total_kw - 112.475).abs() < 1e-9
        && close(a.total_kw, 112.5, EXACT_TOL)
        && close(a.compressors_kw, 64.0, EXACT_TOL)
        && close(a.qec_kw, 43.0, EXACT_TOL)
        && (a.ghs_kw - 5.4).abs() < 1e-9
        && (ap.compressors_kw - 107.0).abs() < 1e-9
        && (ap.qec_kw - 1225.0).abs() < 1e-9
        && close(ap.qec_kw, 1227.0, EXACT_TOL);
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_3() -> Outcome {
    let cfg = HpcConfig::with_defaults(FlowId::from("blade"), shared());
    let blades = blades_for_cores(606_208, 24, 2).map_err(|e| e.to_string())?;
    let fleet = hpc::fleet_totals(blades, &cfg);
    let cells = hpc::table_crosscheck(&MachineDescriptor::modeled(&cfg), &MachineDescriptor::reference())
        .map_err(|e| e.to_string())?;
    let reference = MachineDescriptor::reference().derive().map_err(|e| e.to_string())?;
    let get = |q: &str| reference.iter().find(|(k, _)| *k == q).map(|(_, v)| *v).unwrap_or(f64::NAN);
    let checks = [
        (blades, 12_629.33),
        (fleet.total_power_kw, 18_312.53),
        (fleet.total_mass_kg, 361_199.0),
        (fleet.cpus, 25_258.67),
        (get("total_blades"), 4_736.0),
        (get("power_per_blade_kw"), 4.43),
        (get("total_mass_kg"), 268_546.0),
    ];
    let failed_cells: Vec<_> = cells.iter().filter(|c| !c.pass).map(|c| c.quantity).collect();
    let worst = checks.iter().map(|(g, w)| ((g - w) / w).abs()).fold(0.0, f64::max);
    let detail = format!(
        "blades {blades:.2}, power {:.2} kW, mass {:.0} kg; worst named diff {:.3}%, table cells {}/{} pass",
        fleet.total_power_kw,
        fleet.total_mass_kg,
        100.0 * worst,
        cells.len() - failed_cells.len(),
        cells.len()
    );
    if worst <= EXACT_TOL && failed_cells.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; failing {failed_cells:?}"))
    }
}

fn criterion_4() -> Outcome {
    let e = annual_energy_kwh(1.45, 8760.0).map_err(|e| e.to_string())?;
    let detail = format!("{e} kWh");
    if e == 12_702.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_5(bundle: &Bundle) -> Outcome {
    let b = bundle.scenario("B").map_err(|e| e.to_string())?;
    let a = bundle.scenario("A").map_err(|e| e.to_string())?;
    let detail = format!("B {:.1} t*km, A {:.1} t*km", b.system.freight_tkm, a.system.freight_tkm);
    if close(b.system.freight_tkm, 6_574_899.0, DELIVERY_TOL) && close(a.system.freight_tkm, 41_310.0, DELIVERY_TOL) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run_property<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn criterion_6() -> Outcome {
    run_property(200, small_system(), |sys| {
        let inv = sys.build().inventory_for(&sys.demand_vector()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for (k, want) in sys.neumann_inventory().iter().enumerate() {
            let got = inv.get(format!("e{k}").as_str()).copied().unwrap_or(0.0);
            prop_assert!(rel_close_with_floor(got, *want, NEUMANN_TOL, 1e-12), "e{k}: {got} vs {want}");
        }
        Ok(())
    })?;
    Ok(format!("200 systems, rel tol {NEUMANN_TOL:e}"))
}

fn criterion_7(bundle: &Bundle) -> Outcome {
    let engine = bundle.engine();
    let scenarios = bundle.all_scenarios().map_err(|e| e.to_string())?;
    let products: Vec<FlowId> = bundle.system.products().to_vec();
    let n = products.len();
    let strategy = (
        proptest::collection::vec(0.0..5.0f64, n),
        proptest::collection::vec(0.0..5.0f64, n),
        0.1..10.0f64,
        0.1..10.0f64,
        0usize..scenarios.len(),
        0.0..200_000.0f64,
    );
    run_property(64, strategy, |(d1, d2, a, b, si, hours)| {
        let demand = |v: &[f64]| {
            let mut p = qlca::model::PhaseInput::new("d");
            for (flow, x) in products.iter().zip(v) {
                p.demand.add(flow, *x);
            }
            p
        };
        let (p1, p2) = (demand(&d1), demand(&d2));
        let mixed = engine.impacts(&combine(&[(&p1, a), (&p2, b)])).unwrap();
        let i1 = engine.impacts(&p1).unwrap();
        let i2 = engine.impacts(&p2).unwrap();
        for ind in Indicator::ALL {
            let want = a * i1[ind] + b * i2[ind];
            prop_assert!(rel_close(mixed[ind], want, LINEARITY_TOL), "linearity {ind:?}: {} vs {want}", mixed[ind]);
        }

        // Phase additivity: the sum of phase results equals one combined run.
        let s = &scenarios[si];
        let sys = &s.system;
        let phases = engine.evaluate(s, hours).unwrap();
        let all = combine(&[(&sys.production, 1.0), (&sys.delivery, 1.0), (&sys.end_of_life, 1.0), (&sys.use_per_hour, hours)]);
        let joint = engine.impacts(&all).unwrap();
        for ind in Indicator::ALL {
            let sum: f64 = phases.iter().map(|p| p.impacts[ind]).sum();
            prop_assert!(rel_close(sum, joint[ind], LINEARITY_TOL), "additivity {ind:?}: {sum} vs {}", joint[ind]);
        }
        Ok(())
    })?;
    Ok(format!("64 random demand pairs and phase splits, rel tol {LINEARITY_TOL:e}"))
}

fn criterion_8(bundle: &Bundle) -> Outcome {
    let engine = bundle.engine();
    let scenarios = bundle.all_scenarios().map_err(|e| e.to_string())?;
    let worst = std::cell::Cell::new(0.0f64);
    let hours = proptest::collection::vec(0.0..200_000.0f64, 5);
    run_property(32, (0..scenarios.len(), hours), |(si, hours)| {
        let s = &scenarios[si];
        let profile = engine.profile(s).unwrap();
        let fixed = [&s.system.production, &s.system.delivery, &s.system.end_of_life]
            .map(|p| engine.impacts(p).unwrap());
        for h in hours {
            let use_h = engine.impacts(&combine(&[(&s.system.use_per_hour, h)])).unwrap();
            for ind in Indicator::ALL {
                let want = fixed.iter().map(|f| f[ind]).sum::<f64>() + use_h[ind];
                let got = profile.total(ind, h);
                let diff = (got - want).abs() / want.abs();
                worst.set(worst.get().max(diff));
                prop_assert!(diff <= AFFINE_TOL, "{} {ind:?} at {h} h: {got} vs {want}", s.id);
            }
        }
        Ok(())
    })?;

    let compared = std::cell::Cell::new(0u32);
    let pair = (1.0..1e6f64, 0.0..100.0f64, 1.0..1e6f64, 0.0..100.0f64);
    run_property(100, pair, |(fx, rx, fy, ry)| {
        let x = profile("x", fx, rx, 1e9, 1);
        let y = profile("y", fy, ry, 1e9, 1);
        let ind = Indicator::ClimateChange;
        if let (Some(a), Some(b)) = (crossover(&x, &y, ind).hours, bisection_crossover(&x, &y, ind)) {
            compared.set(compared.get() + 1);
            prop_assert!((a - b).abs() <= BISECTION_TOL_H, "analytic {a} vs bisection {b}");
        }
        Ok(())
    })?;
    Ok(format!(
        "affine worst rel diff {:.1e} over 32 x 5 random hours; {} of 100 pairs crossed, all within {BISECTION_TOL_H} h",
        worst.get(),
        compared.get()
    ))
}

fn sensitivity(engine: &Engine<'_>, bundle: &Bundle) -> Result<SensitivityReport, String> {
    let scenarios = bundle.all_scenarios().map_err(|e| e.to_string())?;
    run_sensitivity(engine, &scenarios, &DEFAULT_GRID, REFERENCE_HOURS).map_err(|e| e.to_string())
}

fn criterion_9(bundle: &Bundle) -> Outcome {
    let base = sensitivity(&bundle.engine(), bundle)?;
    for ind in Indicator::ALL {
        for k in [1e-3, 0.37, 42.0, 1e6] {
            let method = bundle.method.rescaled(ind, k);
            let engine = Engine::new(&bundle.system, &method);
            let scaled = sensitivity(&engine, bundle)?;
            for (a, b) in base.crossovers.iter().zip(&scaled.crossovers) {
                let same_hours = match (a.hours, b.hours) {
                    (Some(x), Some(y)) => rel_close(x, y, 1e-9),
                    (None, None) => true,
                    _ => false,
                };
                if a.status != b.status || !same_hours || a.lower_before != b.lower_before || a.lower_after != b.lower_after {
                    return Err(format!("{} vs {} on {} changed under x{k} on {}", a.x, a.y, a.indicator.id(), ind.id()));
                }
            }
            for h in DEFAULT_GRID {
                for x in &base.profiles {
                    for y in &base.profiles {
                        let before = x.total(ind, h) < y.total(ind, h);
                        let sx = scaled.profile(&x.scenario).unwrap();
                        let sy = scaled.profile(&y.scenario).unwrap();
                        if before != (sx.total(ind, h) < sy.total(ind, h)) {
                            return Err(format!("lower of {} / {} at {h} h flipped", x.scenario, y.scenario));
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{} crossovers stable under 4 scale factors per indicator", base.crossovers.len()))
}

fn criterion_10(report: &SensitivityReport) -> Outcome {
    let a = report.profile("A").ok_or("scenario A missing")?;
    let ind = Indicator::ClimateChange;
    let total = a.total(ind, REFERENCE_HOURS);
    let use_share = a.use_rate[ind] * REFERENCE_HOURS / total;
    let detail = format!("A = {total:.1} t CO2eq at {REFERENCE_HOURS} h, use share {:.1}%", 100.0 * use_share);
    if close(total, A_TOTAL_T, A_TOTAL_TOL) && use_share < A_USE_SHARE_MAX {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_11(report: &SensitivityReport) -> Outcome {
    let a = report.profile("A").ok_or("scenario A missing")?;
    let b = report.profile("B").ok_or("scenario B missing")?;
    let gaps: Vec<f64> = Indicator::ALL
        .iter()
        .map(|&i| (b.total(i, REFERENCE_HOURS) / a.total(i, REFERENCE_HOURS)).log10())
        .collect();
    let detail = format!("orders of magnitude {:.2} / {:.2} / {:.2}", gaps[0], gaps[1], gaps[2]);
    if gaps.iter().zip(GAP_MIN).all(|(g, m)| *g >= m) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_12(report: &SensitivityReport) -> Outcome {
    let ap = report.profile("A'").ok_or("scenario A' missing")?;
    let bp = report.profile("B'").ok_or("scenario B' missing")?;
    let b = report.profile("B").ok_or("scenario B missing")?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, ind) in Indicator::ALL.into_iter().enumerate() {
        let cross = crossover(ap, bp, ind).hours;
        let ratio = ap.fixed_total()[ind] / b.fixed_total()[ind];
        ok &= cross.is_some_and(|h| close(h, CROSSOVER_TARGET_H[k], CROSSOVER_TOL));
        ok &= (ratio - FIXED_RATIO_TARGET[k]).abs() <= FIXED_RATIO_TOL;
        parts.push(format!(
            "{}: crossover {} h, fixed ratio {:.3}",
            ind.id(),
            cross.map_or("none".to_string(), |h| format!("{h:.0}")),
            ratio
        ));
    }
    let detail = parts.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_13(report: &SensitivityReport) -> Outcome {
    let parts = &report.contributions.iter().find(|(s, _)| s == "A").ok_or("scenario A missing")?.1;
    let a = report.profile("A").ok_or("scenario A missing")?;
    let cryostat = &parts.iter().find(|(g, _)| g == "cryostat").ok_or("no cryostat group")?.1;
    let shares: Vec<f64> = Indicator::ALL.iter().map(|&i| cryostat[i] / a.fixed(Phase::Production)[i]).collect();
    let detail = format!(
        "cryostat share {:.1}% / {:.1}% / {:.1}%",
        100.0 * shares[0],
        100.0 * shares[1],
        100.0 * shares[2]
    );
    if shares.iter().all(|s| (CRYOSTAT_SHARE.0..=CRYOSTAT_SHARE.1).contains(s)) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let bundle = match Bundle::reference() {
        Ok(b) => b,
        Err(e) => {
            println!("FAIL  reference bundle does not load: {e}");
            std::process::exit(1);
        }
    };
    let report = sensitivity(&bundle.engine(), &bundle);

    let calibrated = |f: fn(&SensitivityReport) -> Outcome| -> Outcome {
        match &report {
            Ok(r) => f(r),
            Err(e) => Err(e.clone()),
        }
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("1  qec setup counts", Box::new(criterion_1)),
        ("2  quantum power breakdown", Box::new(criterion_2)),
        ("3  blade fleet and reference machine", Box::new(criterion_3)),
        ("4  annual blade energy", Box::new(criterion_4)),
        ("5  delivery t*km", Box::new(|| criterion_5(&bundle))),
        ("6  solver vs Neumann series", Box::new(criterion_6)),
        ("7  linearity and phase additivity", Box::new(|| criterion_7(&bundle))),
        ("8  affine structure and crossover oracle", Box::new(|| criterion_8(&bundle))),
        ("9  argmin invariance under rescaling", Box::new(|| criterion_9(&bundle))),
        ("10 scenario A climate total", Box::new(|| calibrated(criterion_10))),
        ("11 A vs B gap", Box::new(|| calibrated(criterion_11))),
        ("12 A' vs B' crossovers and fixed ratios", Box::new(|| calibrated(criterion_12))),
        ("13 cryostat share of production", Box::new(|| calibrated(criterion_13))),
    ];

    let mut failures = 0;
    for (name, check) in &criteria {
        let start = Instant::now();
        let outcome = check();
        let ms = start.elapsed().as_secs_f64() * 1e3;
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{ms:.0} ms]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name}: {detail} [{ms:.0} ms]");
            }
        }
    }
    for d in &bundle.diagnostics {
        println!("note: reference bundle {d}");
    }
    println!("{} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
