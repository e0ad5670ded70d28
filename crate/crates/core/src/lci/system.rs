use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::linalg::{mat_vec, LuFactors, SingularPivot};
use super::{DemandVector, Direction, ElementaryInventory, Flow, FlowId, FlowKind, Process, ProcessId};
use crate::error::{LcaError, Result};

/// Relative residual accepted after a solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;
/// Above this 1-norm condition estimate the technosphere is rejected.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Activity level of every process, in process-column order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingVector(pub Vec<f64>);

impl ScalingVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Assembled technosphere `A` (products × processes, square) and biosphere
/// `B` (elementary flows × processes), with the LU factors of `A`.
#[derive(Debug, Clone)]
pub struct InventorySystem {
    products: Vec<FlowId>,
    processes: Vec<ProcessId>,
    elementary: Vec<FlowId>,
    product_index: HashMap<FlowId, usize>,
    elementary_index: HashMap<FlowId, usize>,
    flows: BTreeMap<FlowId, Flow>,
    technosphere: Vec<f64>,
    biosphere: Vec<f64>,
    lu: LuFactors,
    condition: f64,
    unreferenced_elementary: Vec<FlowId>,
}

/// Validates a dataset and assembles its inventory system.
///
/// Rows and columns are ordered by product id, so the result does not depend
/// on the order of `processes` or `flows`. Inputs enter `A` with a negative
/// sign; the reference output is the `+1` on the diagonal. Elementary
/// exchanges enter `B` with their stated amount.
pub fn build_system(processes: &[Process], flows: &[Flow]) -> Result<InventorySystem> {
    let mut flow_map: BTreeMap<FlowId, Flow> = BTreeMap::new();
    for flow in flows {
        flow.validate()?;
        if flow_map.insert(flow.id.clone(), flow.clone()).is_some() {
            return Err(LcaError::DuplicateFlow(flow.id.to_string()));
        }
    }
    if processes.is_empty() {
        return Err(LcaError::NoProcesses);
    }

    let mut seen_process = BTreeSet::new();
    let mut producer: BTreeMap<FlowId, &Process> = BTreeMap::new();
    let mut referenced = BTreeSet::new();
    for process in processes {
        if !seen_process.insert(process.id.clone()) {
            return Err(LcaError::DuplicateProcess(process.id.to_string()));
        }
        validate_process(process, &flow_map)?;
        referenced.extend(process.exchanges.iter().map(|e| e.flow.clone()));
        if let Some(first) = producer.insert(process.reference_product.clone(), process) {
            return Err(LcaError::DuplicateProducer {
                product: process.reference_product.to_string(),
                first: first.id.to_string(),
                second: process.id.to_string(),
            });
        }
    }

    let mut unreferenced_elementary = Vec::new();
    for flow in flow_map.values() {
        match flow.kind {
            FlowKind::Intermediate if !producer.contains_key(&flow.id) => {
                return Err(LcaError::NoProducer(flow.id.to_string()));
            }
            FlowKind::Elementary if !referenced.contains(&flow.id) => {
                unreferenced_elementary.push(flow.id.clone());
            }
            _ => {}
        }
    }

    let products: Vec<FlowId> = producer.keys().cloned().collect();
    let processes_ordered: Vec<ProcessId> = producer.values().map(|p| p.id.clone()).collect();
    let elementary: Vec<FlowId> = flow_map
        .values()
        .filter(|f| f.is_elementary())
        .map(|f| f.id.clone())
        .collect();
    let product_index: HashMap<FlowId, usize> =
        products.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
    let elementary_index: HashMap<FlowId, usize> =
        elementary.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();

    let n = products.len();
    let m = elementary.len();
    let mut technosphere = vec![0.0; n * n];
    let mut biosphere = vec![0.0; m * n];
    for (col, process) in producer.values().enumerate() {
        for exchange in &process.exchanges {
            if let Some(&row) = product_index.get(&exchange.flow) {
                let signed = match exchange.direction {
                    Direction::Output => exchange.amount,
                    Direction::Input => -exchange.amount,
                };
                technosphere[row * n + col] += signed;
            } else {
                let row = elementary_index[&exchange.flow];
                biosphere[row * n + col] += exchange.amount;
            }
        }
    }

    let lu = LuFactors::factorize(n, &technosphere).map_err(|SingularPivot(pivot)| {
        LcaError::Singular {
            pivot,
            product: products[pivot].to_string(),
        }
    })?;
    let condition = lu.condition_1norm(&technosphere);
    if !(condition <= CONDITION_LIMIT) {
        return Err(LcaError::IllConditioned { condition });
    }

    Ok(InventorySystem {
        products,
        processes: processes_ordered,
        elementary,
        product_index,
        elementary_index,
        flows: flow_map,
        technosphere,
        biosphere,
        lu,
        condition,
        unreferenced_elementary,
    })
}

fn validate_process(process: &Process, flows: &BTreeMap<FlowId, Flow>) -> Result<()> {
    let invalid = |reason: String| LcaError::InvalidProcess {
        process: process.id.to_string(),
        reason,
    };
    match flows.get(&process.reference_product) {
        None => {
            return Err(LcaError::DanglingFlow {
                process: process.id.to_string(),
                flow: process.reference_product.to_string(),
            })
        }
        Some(f) if f.is_elementary() => {
            return Err(invalid(format!(
                "reference product `{}` is an elementary flow",
                f.id
            )))
        }
        Some(_) => {}
    }

    let mut reference_outputs = 0;
    for exchange in &process.exchanges {
        let flow = flows.get(&exchange.flow).ok_or_else(|| LcaError::DanglingFlow {
            process: process.id.to_string(),
            flow: exchange.flow.to_string(),
        })?;
        if !exchange.amount.is_finite() {
            return Err(LcaError::NonFinite {
                flow: exchange.flow.to_string(),
                value: exchange.amount,
            });
        }
        if flow.is_elementary() {
            continue;
        }
        let is_reference = exchange.flow == process.reference_product;
        match (exchange.direction, is_reference) {
            (Direction::Output, true) => {
                if exchange.amount != 1.0 {
                    return Err(invalid(format!(
                        "reference output must be normalised to 1.0, found {}",
                        exchange.amount
                    )));
                }
                reference_outputs += 1;
            }
            (Direction::Output, false) => {
                return Err(invalid(format!(
                    "co-product `{}` is not allowed under cut-off",
                    exchange.flow
                )))
            }
            (Direction::Input, true) => {
                return Err(invalid("consumes its own reference product".to_string()))
            }
            (Direction::Input, false) => {}
        }
    }
    match reference_outputs {
        1 => Ok(()),
        0 => Err(invalid("missing reference output".to_string())),
        k => Err(invalid(format!("{k} reference outputs, expected exactly one"))),
    }
}

impl InventorySystem {
    pub fn dim(&self) -> usize {
        self.products.len()
    }

    /// Intermediate products in row order.
    pub fn products(&self) -> &[FlowId] {
        &self.products
    }

    /// Producing processes in column order; column `j` produces `products()[j]`.
    pub fn processes(&self) -> &[ProcessId] {
        &self.processes
    }

    pub fn elementary_flows(&self) -> &[FlowId] {
        &self.elementary
    }

    pub fn flow(&self, id: &str) -> Option<&Flow> {
        self.flows.get(id)
    }

    pub fn product_index(&self, product: &str) -> Option<usize> {
        self.product_index.get(product).copied()
    }

    pub fn elementary_index(&self, flow: &str) -> Option<usize> {
        self.elementary_index.get(flow).copied()
    }

    /// Row-major `A`.
    pub fn technosphere(&self) -> &[f64] {
        &self.technosphere
    }

    /// Row-major `B`.
    pub fn biosphere(&self) -> &[f64] {
        &self.biosphere
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    /// Elementary flows declared in the dataset but used by no process. They
    /// may still be emitted directly by a system model.
    pub fn unreferenced_elementary(&self) -> &[FlowId] {
        &self.unreferenced_elementary
    }

    /// Dense demand vector in row order.
    pub fn demand_dense(&self, demand: &DemandVector) -> Result<Vec<f64>> {
        let mut f = vec![0.0; self.dim()];
        for (flow, &amount) in &demand.entries {
            if !amount.is_finite() {
                return Err(LcaError::NonFinite {
                    flow: flow.to_string(),
                    value: amount,
                });
            }
            let idx = self
                .product_index(flow.as_str())
                .ok_or_else(|| LcaError::UnknownProduct(flow.to_string()))?;
            f[idx] += amount;
        }
        Ok(f)
    }

    /// Solves `A·s = f`.
    pub fn solve_scaling(&self, demand: &DemandVector) -> Result<ScalingVector> {
        let f = self.demand_dense(demand)?;
        self.solve_dense(&f).map(ScalingVector)
    }

    pub(crate) fn solve_dense(&self, f: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        let mut s = self.lu.solve(f);
        let mut residual = self.relative_residual(&s, f);
        if residual > RESIDUAL_TOLERANCE {
            // One step of iterative refinement.
            let r: Vec<f64> = mat_vec(n, n, &self.technosphere, &s)
                .iter()
                .zip(f)
                .map(|(as_, fi)| fi - as_)
                .collect();
            let correction = self.lu.solve(&r);
            for (si, ci) in s.iter_mut().zip(correction) {
                *si += ci;
            }
            residual = self.relative_residual(&s, f);
        }
        if !(residual <= RESIDUAL_TOLERANCE) {
            return Err(LcaError::Residual { residual });
        }
        Ok(s)
    }

    fn relative_residual(&self, s: &[f64], f: &[f64]) -> f64 {
        let n = self.dim();
        let a_s = mat_vec(n, n, &self.technosphere, s);
        let r = a_s.iter().zip(f).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if r == 0.0 {
            return 0.0;
        }
        let norm_a = (0..n)
            .map(|i| self.technosphere[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let norm_s = s.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let norm_f = f.iter().map(|v| v.abs()).fold(0.0, f64::max);
        r / (norm_a * norm_s + norm_f)
    }

    /// `g = B·s`, keyed by elementary flow (every flow present, zeros included).
    pub fn inventory(&self, s: &ScalingVector) -> Result<ElementaryInventory> {
        if s.0.len() != self.dim() {
            return Err(LcaError::IndexMismatch {
                expected: self.dim(),
                got: s.0.len(),
            });
        }
        let g = mat_vec(self.elementary.len(), self.dim(), &self.biosphere, &s.0);
        Ok(self.elementary.iter().cloned().zip(g).collect())
    }

    /// Convenience: demand straight to elementary inventory.
    pub fn inventory_for(&self, demand: &DemandVector) -> Result<ElementaryInventory> {
        let s = self.solve_scaling(demand)?;
        self.inventory(&s)
    }
}
