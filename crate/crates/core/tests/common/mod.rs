//! Oracles and generators shared by the property tests and the acceptance run.
#![allow(dead_code)]

use proptest::prelude::*;
use qlca::impact::{Impacts, Indicator};
use qlca::lci::{build_system, DemandVector, ElementaryInventory, Exchange, Flow, FlowId, InventorySystem, Process};
use qlca::model::PhaseInput;
use qlca::scenario::{AffineProfile, HOUR_CAP};

/// A small process network: `inputs[i][j]` is what process `j` draws from
/// product `i`, with column sums kept below one so the Neumann series converges.
#[derive(Debug, Clone)]
pub struct SmallSystem {
    pub inputs: Vec<Vec<f64>>,
    pub emissions: Vec<Vec<f64>>,
    pub demand: Vec<f64>,
}

pub fn small_system() -> impl Strategy<Value = SmallSystem> {
    (1usize..=8, 1usize..=4).prop_flat_map(|(n, m)| {
        let cap = 0.9 / n as f64;
        let cell = prop_oneof![Just(0.0), 0.0..cap];
        (
            proptest::collection::vec(proptest::collection::vec(cell, n), n),
            proptest::collection::vec(proptest::collection::vec(0.0..10.0f64, n), m),
            proptest::collection::vec(0.0..10.0f64, n),
        )
            .prop_map(|(mut inputs, emissions, demand)| {
                for (i, row) in inputs.iter_mut().enumerate() {
                    row[i] = 0.0;
                }
                SmallSystem { inputs, emissions, demand }
            })
    })
}

impl SmallSystem {
    pub fn build(&self) -> InventorySystem {
        let n = self.demand.len();
        let mut flows: Vec<Flow> = (0..n).map(|i| Flow::intermediate(&format!("p{i}"), "product", "unit")).collect();
        flows.extend((0..self.emissions.len()).map(|k| Flow::elementary(&format!("e{k}"), "emission", "kg", "air")));
        let processes: Vec<Process> = (0..n)
            .map(|j| {
                let mut ex = Vec::new();
                for i in 0..n {
                    if self.inputs[i][j] > 0.0 {
                        ex.push(Exchange::input(&format!("p{i}"), self.inputs[i][j]));
                    }
                }
                for (k, row) in self.emissions.iter().enumerate() {
                    ex.push(Exchange::output(&format!("e{k}"), row[j]));
                }
                Process::new(&format!("proc{j}"), "process", "GLO", &format!("p{j}"), ex)
            })
            .collect();
        build_system(&processes, &flows).expect("generated system is valid")
    }

    pub fn demand_vector(&self) -> DemandVector {
        let mut d = DemandVector::new("f");
        for (i, v) in self.demand.iter().enumerate() {
            d.add(&FlowId(format!("p{i}")), *v);
        }
        d
    }

    /// Inventory from the truncated series s = f + T f + T^2 f + ...
    pub fn neumann_inventory(&self) -> Vec<f64> {
        let n = self.demand.len();
        let mut term = self.demand.clone();
        let mut s = term.clone();
        for _ in 0..2000 {
            let next: Vec<f64> = (0..n).map(|i| (0..n).map(|j| self.inputs[i][j] * term[j]).sum()).collect();
            let size: f64 = next.iter().map(|v| v.abs()).sum();
            for (a, b) in s.iter_mut().zip(&next) {
                *a += b;
            }
            term = next;
            if size <= 1e-18 * s.iter().map(|v| v.abs()).sum::<f64>() {
                break;
            }
        }
        self.emissions.iter().map(|row| row.iter().zip(&s).map(|(b, x)| b * x).sum()).collect()
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    let scale = a.abs().max(b.abs());
    scale == 0.0 || (a - b).abs() <= tol * scale
}

pub fn rel_close_with_floor(a: f64, b: f64, tol: f64, floor: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(floor)
}

/// Profile with the given fixed and hourly parts on every indicator.
pub fn profile(id: &str, fixed: f64, rate: f64, lifetime_hours: f64, multiplier: u32) -> AffineProfile {
    AffineProfile {
        scenario: id.to_string(),
        production: Impacts([fixed; 3]),
        delivery: Impacts::ZERO,
        end_of_life: Impacts::ZERO,
        use_rate: Impacts([rate; 3]),
        lifetime_hours,
        replacement_multiplier: multiplier,
    }
}

/// First sign change of `total_x - total_y` on a fine scan of [0, cap],
/// refined by bisection. None when the difference never changes sign.
pub fn bisection_crossover(x: &AffineProfile, y: &AffineProfile, ind: Indicator) -> Option<f64> {
    let d = |h: f64| x.total(ind, h) - y.total(ind, h);
    let sign = |v: f64| if v > 0.0 { 1 } else if v < 0.0 { -1 } else { 0 };
    let s0 = sign(d(0.0));
    if s0 == 0 {
        return None;
    }
    let steps = 20_000;
    let mut lo = 0.0;
    for k in 1..=steps {
        let hi = HOUR_CAP * k as f64 / steps as f64;
        if sign(d(hi)) != s0 {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if sign(d(mid)) == s0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Some(0.5 * (a + b));
        }
        lo = hi;
    }
    None
}

pub fn combine(parts: &[(&PhaseInput, f64)]) -> PhaseInput {
    let mut out = PhaseInput::new("combined");
    for (p, k) in parts {
        out.demand.merge(&p.demand.scaled(*k));
        for (flow, v) in &p.direct {
            *out.direct.entry(flow.clone()).or_insert(0.0) += v * k;
        }
    }
    out
}

pub fn inventory_close(a: &ElementaryInventory, b: &ElementaryInventory, tol: f64) -> bool {
    let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).collect();
    keys.into_iter().all(|k| rel_close(a.get(k).copied().unwrap_or(0.0), b.get(k).copied().unwrap_or(0.0), tol))
}
