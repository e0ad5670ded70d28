//! Characterisation of elementary inventories into the three endpoint
//! indicators, and aggregation of per-phase results.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut};

use crate::error::{LcaError, Result};
use crate::lci::{ElementaryInventory, FlowId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Indicator {
    ClimateChange,
    Ecosystems,
    HumanHealth,
}

impl Indicator {
    pub const ALL: [Indicator; 3] = [
        Indicator::ClimateChange,
        Indicator::Ecosystems,
        Indicator::HumanHealth,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Indicator::ClimateChange => "climate_change",
            Indicator::Ecosystems => "ecosystems",
            Indicator::HumanHealth => "human_health",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Indicator::ALL.into_iter().find(|i| i.id() == id)
    }

    /// Unit of reported results.
    pub fn unit(self) -> &'static str {
        match self {
            Indicator::ClimateChange => "t CO2eq",
            Indicator::Ecosystems => "PDF.m2.yr",
            Indicator::HumanHealth => "DALY",
        }
    }

    /// Unit in which characterisation factors are expressed, per unit of flow.
    pub fn factor_unit(self) -> &'static str {
        match self {
            Indicator::ClimateChange => "kg CO2eq",
            _ => self.unit(),
        }
    }

    /// Conversion from factor unit to reporting unit. Climate factors are
    /// tabulated in kg CO2eq and reported in tonnes.
    pub fn reporting_scale(self) -> f64 {
        match self {
            Indicator::ClimateChange => 1e-3,
            _ => 1.0,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// One value per indicator, in reporting units.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Impacts(pub [f64; 3]);

impl Impacts {
    pub const ZERO: Impacts = Impacts([0.0; 3]);

    pub fn scaled(self, factor: f64) -> Impacts {
        Impacts(self.0.map(|v| v * factor))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Indicator, f64)> + '_ {
        Indicator::ALL.into_iter().map(move |i| (i, self[i]))
    }
}

impl Index<Indicator> for Impacts {
    type Output = f64;
    fn index(&self, i: Indicator) -> &f64 {
        &self.0[i.index()]
    }
}

impl IndexMut<Indicator> for Impacts {
    fn index_mut(&mut self, i: Indicator) -> &mut f64 {
        &mut self.0[i.index()]
    }
}

impl Add for Impacts {
    type Output = Impacts;
    fn add(self, rhs: Impacts) -> Impacts {
        Impacts([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1], self.0[2] + rhs.0[2]])
    }
}

impl AddAssign for Impacts {
    fn add_assign(&mut self, rhs: Impacts) {
        *self = *self + rhs;
    }
}

/// Characterisation factors keyed by (elementary flow, indicator).
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactMethod {
    pub name: String,
    factors: BTreeMap<(FlowId, Indicator), f64>,
}

impl ImpactMethod {
    pub fn new(name: impl Into<String>) -> Self {
        ImpactMethod {
            name: name.into(),
            factors: BTreeMap::new(),
        }
    }

    /// Sets a factor, expressed in [`Indicator::factor_unit`] per flow unit.
    pub fn set(&mut self, flow: &FlowId, indicator: Indicator, factor: f64) -> Result<()> {
        if !factor.is_finite() {
            return Err(LcaError::NonFinite {
                flow: flow.to_string(),
                value: factor,
            });
        }
        self.factors.insert((flow.clone(), indicator), factor);
        Ok(())
    }

    pub fn with(mut self, flow: &str, indicator: Indicator, factor: f64) -> Self {
        self.set(&flow.into(), indicator, factor)
            .expect("factor must be finite");
        self
    }

    pub fn factor(&self, flow: &str, indicator: Indicator) -> Option<f64> {
        self.factors.get(&(FlowId::from(flow), indicator)).copied()
    }

    /// True when the flow has a factor for at least one indicator.
    pub fn covers(&self, flow: &str) -> bool {
        Indicator::ALL.iter().any(|&i| self.factor(flow, i).is_some())
    }

    pub fn flows(&self) -> impl Iterator<Item = &FlowId> {
        let mut seen: Vec<&FlowId> = self.factors.keys().map(|(f, _)| f).collect();
        seen.dedup();
        seen.into_iter()
    }

    /// Multiplies every factor of one indicator by `k`.
    pub fn rescaled(&self, indicator: Indicator, k: f64) -> ImpactMethod {
        let mut out = self.clone();
        for ((_, ind), v) in out.factors.iter_mut() {
            if *ind == indicator {
                *v *= k;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Characterization {
    pub impacts: Impacts,
    /// Share of the inventory (sum of absolute amounts) carried by flows the
    /// method characterises. 1.0 for an empty inventory.
    pub coverage: f64,
    /// Flows with nonzero amounts and no factor at all.
    pub uncharacterized: Vec<FlowId>,
}

/// `impact[i] = Σ factor(flow, i) · g[flow]`, converted to reporting units.
pub fn characterize(g: &ElementaryInventory, method: &ImpactMethod) -> Result<Characterization> {
    let mut raw = [0.0; 3];
    let mut total_mass = 0.0;
    let mut covered_mass = 0.0;
    let mut uncharacterized = Vec::new();
    for (flow, &amount) in g {
        if !amount.is_finite() {
            return Err(LcaError::NonFinite {
                flow: flow.to_string(),
                value: amount,
            });
        }
        total_mass += amount.abs();
        if !method.covers(flow.as_str()) {
            if amount != 0.0 {
                log::debug!("flow `{flow}` has no characterisation factor in `{}`", method.name);
                uncharacterized.push(flow.clone());
            }
            continue;
        }
        covered_mass += amount.abs();
        for indicator in Indicator::ALL {
            if let Some(cf) = method.factor(flow.as_str(), indicator) {
                raw[indicator.index()] += cf * amount;
            }
        }
    }
    let mut impacts = Impacts::ZERO;
    for indicator in Indicator::ALL {
        impacts[indicator] = raw[indicator.index()] * indicator.reporting_scale();
    }
    let coverage = if total_mass > 0.0 {
        covered_mass / total_mass
    } else {
        1.0
    };
    Ok(Characterization {
        impacts,
        coverage,
        uncharacterized,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Production,
    Delivery,
    Use,
    EndOfLife,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Production, Phase::Delivery, Phase::Use, Phase::EndOfLife];

    pub fn id(self) -> &'static str {
        match self {
            Phase::Production => "production",
            Phase::Delivery => "delivery",
            Phase::Use => "use",
            Phase::EndOfLife => "end_of_life",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Phase::ALL.into_iter().find(|p| p.id() == id)
    }

    pub fn is_fixed(self) -> bool {
        self != Phase::Use
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseImpact {
    pub phase: Phase,
    pub impacts: Impacts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifecycleTotals {
    pub total: Impacts,
    /// Per phase, per indicator share of the total. `None` where the
    /// indicator total is not positive.
    pub shares: Vec<(Phase, [Option<f64>; 3])>,
}

impl LifecycleTotals {
    pub fn share(&self, phase: Phase, indicator: Indicator) -> Option<f64> {
        self.shares
            .iter()
            .find(|(p, _)| *p == phase)
            .and_then(|(_, s)| s[indicator.index()])
    }
}

pub fn aggregate_phases(phases: &[PhaseImpact]) -> Result<LifecycleTotals> {
    let mut total = Impacts::ZERO;
    for (i, p) in phases.iter().enumerate() {
        if phases[..i].iter().any(|q| q.phase == p.phase) {
            return Err(LcaError::DuplicatePhase(p.phase));
        }
        total += p.impacts;
    }
    let shares = phases
        .iter()
        .map(|p| {
            let mut s = [None; 3];
            for indicator in Indicator::ALL {
                let t = total[indicator];
                if t > 0.0 {
                    s[indicator.index()] = Some(p.impacts[indicator] / t);
                }
            }
            (p.phase, s)
        })
        .collect();
    Ok(LifecycleTotals { total, shares })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv(pairs: &[(&str, f64)]) -> ElementaryInventory {
        pairs.iter().map(|(k, v)| (FlowId::from(*k), *v)).collect()
    }

    #[test]
    fn single_flow_unit_factor() {
        let m = ImpactMethod::new("m").with("x", Indicator::Ecosystems, 1.0);
        let c = characterize(&inv(&[("x", 5.0)]), &m).unwrap();
        assert_eq!(c.impacts[Indicator::Ecosystems], 5.0);
        assert_eq!(c.coverage, 1.0);
    }

    #[test]
    fn zero_inventory() {
        let m = ImpactMethod::new("m").with("x", Indicator::HumanHealth, 3.0);
        let c = characterize(&inv(&[("x", 0.0)]), &m).unwrap();
        assert_eq!(c.impacts, Impacts::ZERO);
    }

    #[test]
    fn climate_dot_product_in_tonnes() {
        let m = ImpactMethod::new("m")
            .with("co2", Indicator::ClimateChange, 2.0)
            .with("ch4", Indicator::ClimateChange, 0.5);
        let c = characterize(&inv(&[("co2", 3.0), ("ch4", 4.0)]), &m).unwrap();
        // 8 kg CO2eq reported as 0.008 t.
        assert!((c.impacts[Indicator::ClimateChange] - 0.008).abs() < 1e-15);
    }

    #[test]
    fn climate_unit_conversion_happens_once() {
        // 1000 kg CO2 at factor 1 kg CO2eq/kg is exactly 1 t CO2eq.
        let m = ImpactMethod::new("m").with("co2", Indicator::ClimateChange, 1.0);
        let c = characterize(&inv(&[("co2", 1000.0)]), &m).unwrap();
        assert_eq!(c.impacts[Indicator::ClimateChange], 1.0);
        assert_eq!(Indicator::ClimateChange.unit(), "t CO2eq");
        assert_eq!(Indicator::ClimateChange.factor_unit(), "kg CO2eq");
    }

    #[test]
    fn uncharacterized_flows_are_surfaced() {
        let m = ImpactMethod::new("m").with("co2", Indicator::ClimateChange, 1.0);
        let c = characterize(&inv(&[("co2", 3.0), ("mystery", 1.0)]), &m).unwrap();
        assert_eq!(c.uncharacterized, vec![FlowId::from("mystery")]);
        assert!((c.coverage - 0.75).abs() < 1e-15);
    }

    #[test]
    fn non_finite_inventory_rejected() {
        let m = ImpactMethod::new("m");
        assert!(characterize(&inv(&[("x", f64::INFINITY)]), &m).is_err());
    }

    #[test]
    fn aggregate_single_phase() {
        let t = aggregate_phases(&[PhaseImpact {
            phase: Phase::Use,
            impacts: Impacts([2.0, 3.0, 4.0]),
        }])
        .unwrap();
        for i in Indicator::ALL {
            assert_eq!(t.share(Phase::Use, i), Some(1.0));
        }
    }

    #[test]
    fn aggregate_four_phases() {
        let phases: Vec<PhaseImpact> = Phase::ALL
            .iter()
            .zip([10.0, 30.0, 50.0, 10.0])
            .map(|(&phase, v)| PhaseImpact {
                phase,
                impacts: Impacts([v; 3]),
            })
            .collect();
        let t = aggregate_phases(&phases).unwrap();
        assert_eq!(t.total, Impacts([100.0; 3]));
        let shares: Vec<f64> = Phase::ALL
            .iter()
            .map(|&p| t.share(p, Indicator::Ecosystems).unwrap())
            .collect();
        assert_eq!(shares, vec![0.1, 0.3, 0.5, 0.1]);
    }

    #[test]
    fn aggregate_all_zero_flags_shares() {
        let phases: Vec<PhaseImpact> = Phase::ALL
            .iter()
            .map(|&phase| PhaseImpact {
                phase,
                impacts: Impacts::ZERO,
            })
            .collect();
        let t = aggregate_phases(&phases).unwrap();
        assert_eq!(t.total, Impacts::ZERO);
        assert!(t.shares.iter().all(|(_, s)| s.iter().all(Option::is_none)));
    }

    #[test]
    fn aggregate_duplicate_phase() {
        let p = PhaseImpact {
            phase: Phase::Delivery,
            impacts: Impacts::ZERO,
        };
        assert_eq!(
            aggregate_phases(&[p, p]).unwrap_err(),
            LcaError::DuplicatePhase(Phase::Delivery)
        );
    }
}
