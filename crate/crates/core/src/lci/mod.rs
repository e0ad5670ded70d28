//! Life-cycle inventory: flows, processes and the matrix computation that
//! turns a final demand into an elementary-flow inventory.
//!
//! The technosphere is square: every intermediate product has exactly one
//! producing process, so column `j` of the technosphere matrix is the process
//! producing product `j`. Given a demand `f` the scaling vector is the
//! solution of `A·s = f` and the elementary inventory is `g = B·s`.

mod burden;
mod linalg;
mod system;

use std::collections::BTreeMap;
use std::fmt;

pub use burden::{assembly_burden, eol_split, transport_tkm};
pub use linalg::LuFactors;
pub use system::{build_system, InventorySystem, ScalingVector};

use crate::error::{LcaError, Result};

macro_rules! id_newtype {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

id_newtype!(FlowId);
id_newtype!(ProcessId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowKind {
    /// Resource or emission exchanged with the environment.
    Elementary,
    /// Product or service exchanged between human activities.
    Intermediate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub id: FlowId,
    pub name: String,
    pub kind: FlowKind,
    pub unit: String,
    /// `air`, `water`, `soil`; present exactly when the flow is elementary.
    pub compartment: Option<String>,
}

impl Flow {
    pub fn elementary(id: &str, name: &str, unit: &str, compartment: &str) -> Self {
        Flow {
            id: id.into(),
            name: name.to_string(),
            kind: FlowKind::Elementary,
            unit: unit.to_string(),
            compartment: Some(compartment.to_string()),
        }
    }

    pub fn intermediate(id: &str, name: &str, unit: &str) -> Self {
        Flow {
            id: id.into(),
            name: name.to_string(),
            kind: FlowKind::Intermediate,
            unit: unit.to_string(),
            compartment: None,
        }
    }

    pub fn is_elementary(&self) -> bool {
        self.kind == FlowKind::Elementary
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| LcaError::InvalidFlow {
            flow: self.id.to_string(),
            reason: reason.to_string(),
        };
        if self.id.0.trim().is_empty() {
            return Err(fail("empty id"));
        }
        match (self.kind, &self.compartment) {
            (FlowKind::Elementary, None) => Err(fail("elementary flow needs a compartment")),
            (FlowKind::Intermediate, Some(_)) => {
                Err(fail("intermediate flow cannot have a compartment"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exchange {
    pub flow: FlowId,
    /// Amount in the flow's unit per unit of reference product.
    pub amount: f64,
    pub direction: Direction,
}

impl Exchange {
    pub fn input(flow: &str, amount: f64) -> Self {
        Exchange {
            flow: flow.into(),
            amount,
            direction: Direction::Input,
        }
    }

    pub fn output(flow: &str, amount: f64) -> Self {
        Exchange {
            flow: flow.into(),
            amount,
            direction: Direction::Output,
        }
    }
}

/// A technosphere activity normalised to one unit of its reference product.
#[derive(Debug, Clone, PartialEq)]
pub struct Process {
    pub id: ProcessId,
    pub name: String,
    pub location: String,
    pub reference_product: FlowId,
    pub exchanges: Vec<Exchange>,
}

impl Process {
    /// Builds a process whose reference output (amount 1.0) is prepended to
    /// `exchanges`.
    pub fn new(id: &str, name: &str, location: &str, product: &str, exchanges: Vec<Exchange>) -> Self {
        let mut all = vec![Exchange::output(product, 1.0)];
        all.extend(exchanges);
        Process {
            id: id.into(),
            name: name.to_string(),
            location: location.to_string(),
            reference_product: product.into(),
            exchanges: all,
        }
    }
}

/// Final demand on intermediate products, labelled with the phase it
/// belongs to.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DemandVector {
    pub label: String,
    pub entries: BTreeMap<FlowId, f64>,
}

impl DemandVector {
    pub fn new(label: impl Into<String>) -> Self {
        DemandVector {
            label: label.into(),
            entries: BTreeMap::new(),
        }
    }

    /// Adds `amount` of `product`, merging with any existing entry.
    pub fn add(&mut self, product: &FlowId, amount: f64) {
        *self.entries.entry(product.clone()).or_insert(0.0) += amount;
    }

    pub fn merge(&mut self, other: &DemandVector) {
        for (flow, amount) in &other.entries {
            self.add(flow, *amount);
        }
    }

    pub fn scaled(&self, factor: f64) -> DemandVector {
        DemandVector {
            label: self.label.clone(),
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), v * factor))
                .collect(),
        }
    }

    pub fn get(&self, product: &str) -> f64 {
        self.entries.get(product).copied().unwrap_or(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Elementary inventory keyed by flow id.
pub type ElementaryInventory = BTreeMap<FlowId, f64>;
