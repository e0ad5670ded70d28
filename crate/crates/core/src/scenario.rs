//! Evaluation of built systems over operating time.
//!
//! Every scenario total has the form `F + r·h`: the fixed phases are solved
//! once and the use phase is one solved hour scaled by `h`. Sweeps,
//! dominance hours and crossovers all work from that affine profile.

use std::collections::BTreeMap;

use crate::error::{LcaError, Result};
use crate::impact::{characterize, Characterization, ImpactMethod, Impacts, Indicator, Phase, PhaseImpact};
use crate::lci::{ElementaryInventory, InventorySystem};
use crate::model::{PhaseInput, SystemKind, SystemModel};

/// Three years of continuous operation.
pub const DEFAULT_LIFETIME_HOURS: f64 = 26_280.0;
/// Five years of continuous operation.
pub const REFERENCE_HOURS: f64 = 43_800.0;
/// Upper end of the crossover search.
pub const HOUR_CAP: f64 = 1e6;
pub const DEFAULT_GRID: [f64; 4] = [1_000.0, 10_000.0, 50_000.0, 100_000.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub system: SystemModel,
    pub lifetime_hours: f64,
    /// Fixed phases are re-incurred at each lifetime boundary when above 1.
    pub replacement_multiplier: u32,
}

impl Scenario {
    pub fn new(id: impl Into<String>, system: SystemModel) -> Self {
        Scenario {
            id: id.into(),
            system,
            lifetime_hours: DEFAULT_LIFETIME_HOURS,
            replacement_multiplier: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lifetime_hours > 0.0) || !self.lifetime_hours.is_finite() {
            return Err(LcaError::InvalidArgument {
                name: "lifetime_hours",
                value: self.lifetime_hours,
                reason: "must be positive",
            });
        }
        if self.replacement_multiplier == 0 {
            return Err(LcaError::InvalidArgument {
                name: "replacement_multiplier",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(())
    }
}

/// Fixed-phase impacts and the hourly use rate of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineProfile {
    pub scenario: String,
    pub production: Impacts,
    pub delivery: Impacts,
    pub end_of_life: Impacts,
    pub use_rate: Impacts,
    pub lifetime_hours: f64,
    pub replacement_multiplier: u32,
}

impl AffineProfile {
    /// Impact of a fixed phase; the use phase has none.
    pub fn fixed(&self, phase: Phase) -> Impacts {
        match phase {
            Phase::Production => self.production,
            Phase::Delivery => self.delivery,
            Phase::EndOfLife => self.end_of_life,
            Phase::Use => Impacts::ZERO,
        }
    }

    pub fn fixed_total(&self) -> Impacts {
        self.production + self.delivery + self.end_of_life
    }

    /// Number of fixed-phase sets incurred by `hours`: one, plus
    /// `multiplier − 1` for every lifetime boundary strictly passed.
    pub fn replacement_factor(&self, hours: f64) -> f64 {
        if self.replacement_multiplier <= 1 || hours <= self.lifetime_hours {
            return 1.0;
        }
        let crossed = (hours / self.lifetime_hours).ceil() - 1.0;
        1.0 + (self.replacement_multiplier - 1) as f64 * crossed
    }

    pub fn at(&self, hours: f64) -> Result<Vec<PhaseImpact>> {
        check_hours(hours)?;
        let k = self.replacement_factor(hours);
        Ok(Phase::ALL
            .into_iter()
            .map(|phase| PhaseImpact {
                phase,
                impacts: if phase == Phase::Use {
                    self.use_rate.scaled(hours)
                } else {
                    self.fixed(phase).scaled(k)
                },
            })
            .collect())
    }

    pub fn total(&self, indicator: Indicator, hours: f64) -> f64 {
        self.fixed_total()[indicator] * self.replacement_factor(hours) + self.use_rate[indicator] * hours
    }

    /// Hour at which the use phase overtakes production, or `None` when
    /// operation carries no impact for the indicator.
    pub fn phase_dominance_hour(&self, indicator: Indicator) -> Option<f64> {
        let rate = self.use_rate[indicator];
        if rate > 0.0 {
            Some((self.production[indicator] / rate).max(0.0))
        } else {
            None
        }
    }

    /// Lifetime boundaries below `cap` where the fixed phases step up.
    fn breakpoints(&self, cap: f64) -> Vec<f64> {
        let mut out = Vec::new();
        if self.replacement_multiplier > 1 {
            let mut h = self.lifetime_hours;
            while h < cap {
                out.push(h);
                h += self.lifetime_hours;
            }
        }
        out
    }
}

fn check_hours(hours: f64) -> Result<()> {
    if !(hours >= 0.0) || !hours.is_finite() {
        return Err(LcaError::InvalidArgument {
            name: "hours",
            value: hours,
            reason: "must be finite and nonnegative",
        });
    }
    Ok(())
}

/// Impact values for a grid of operating hours, built from one profile.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSeries {
    pub scenario: String,
    pub hours: Vec<f64>,
    /// Per hour point, impacts in [`Phase::ALL`] order.
    pub values: Vec<[Impacts; 4]>,
}

impl SweepSeries {
    pub fn value(&self, phase: Phase, indicator: Indicator, point: usize) -> f64 {
        let i = Phase::ALL.iter().position(|p| *p == phase).expect("phase listed");
        self.values[point][i][indicator]
    }

    pub fn total(&self, indicator: Indicator, point: usize) -> f64 {
        self.values[point].iter().map(|v| v[indicator]).sum()
    }
}

pub fn check_grid(grid: &[f64]) -> Result<()> {
    for h in grid {
        check_hours(*h)?;
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(LcaError::UnsortedGrid);
    }
    Ok(())
}

impl AffineProfile {
    pub fn sweep(&self, grid: &[f64]) -> Result<SweepSeries> {
        check_grid(grid)?;
        let mut values = Vec::with_capacity(grid.len());
        for &h in grid {
            let phases = self.at(h)?;
            values.push([phases[0].impacts, phases[1].impacts, phases[2].impacts, phases[3].impacts]);
        }
        Ok(SweepSeries {
            scenario: self.scenario.clone(),
            hours: grid.to_vec(),
            values,
        })
    }
}

/// Solves phase inputs against one inventory system and impact method.
#[derive(Debug, Clone, Copy)]
pub struct Engine<'a> {
    pub system: &'a InventorySystem,
    pub method: &'a ImpactMethod,
}

impl<'a> Engine<'a> {
    pub fn new(system: &'a InventorySystem, method: &'a ImpactMethod) -> Self {
        Engine { system, method }
    }

    /// Elementary inventory of a phase input: solved demand plus direct flows.
    pub fn inventory(&self, input: &PhaseInput) -> Result<ElementaryInventory> {
        let mut g = if input.demand.is_empty() {
            self.system
                .elementary_flows()
                .iter()
                .map(|f| (f.clone(), 0.0))
                .collect()
        } else {
            self.system.inventory_for(&input.demand)?
        };
        for (flow, amount) in &input.direct {
            if self.system.elementary_index(flow.as_str()).is_none() {
                return Err(LcaError::DanglingFlow {
                    process: input.demand.label.clone(),
                    flow: flow.to_string(),
                });
            }
            *g.entry(flow.clone()).or_insert(0.0) += amount;
        }
        Ok(g)
    }

    pub fn characterize(&self, input: &PhaseInput) -> Result<Characterization> {
        characterize(&self.inventory(input)?, self.method)
    }

    pub fn impacts(&self, input: &PhaseInput) -> Result<Impacts> {
        Ok(self.characterize(input)?.impacts)
    }

    pub fn profile(&self, scenario: &Scenario) -> Result<AffineProfile> {
        let wrap = |e: LcaError| e.in_scenario(&scenario.id);
        scenario.validate().map_err(wrap)?;
        let s = &scenario.system;
        Ok(AffineProfile {
            scenario: scenario.id.clone(),
            production: self.impacts(&s.production).map_err(wrap)?,
            delivery: self.impacts(&s.delivery).map_err(wrap)?,
            end_of_life: self.impacts(&s.end_of_life).map_err(wrap)?,
            use_rate: self.impacts(&s.use_per_hour).map_err(wrap)?,
            lifetime_hours: scenario.lifetime_hours,
            replacement_multiplier: scenario.replacement_multiplier,
        })
    }

    pub fn evaluate(&self, scenario: &Scenario, hours: f64) -> Result<Vec<PhaseImpact>> {
        check_hours(hours)?;
        self.profile(scenario)?.at(hours)
    }

    pub fn sweep(&self, scenario: &Scenario, grid: &[f64]) -> Result<SweepSeries> {
        check_grid(grid)?;
        self.profile(scenario)?.sweep(grid)
    }

    /// Production impact of each subsystem group.
    pub fn contributions(&self, scenario: &Scenario) -> Result<Vec<(String, Impacts)>> {
        scenario
            .system
            .production_parts
            .iter()
            .map(|(name, demand)| {
                let input = PhaseInput {
                    demand: demand.clone(),
                    direct: BTreeMap::new(),
                };
                Ok((name.clone(), self.impacts(&input).map_err(|e| e.in_scenario(&scenario.id))?))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossoverStatus {
    Crosses,
    XAlwaysLower,
    YAlwaysLower,
    AlwaysEqual,
    /// The totals meet only beyond [`HOUR_CAP`].
    BeyondHorizon,
}

impl CrossoverStatus {
    pub fn id(self) -> &'static str {
        match self {
            CrossoverStatus::Crosses => "crosses",
            CrossoverStatus::XAlwaysLower => "x_always_lower",
            CrossoverStatus::YAlwaysLower => "y_always_lower",
            CrossoverStatus::AlwaysEqual => "always_equal",
            CrossoverStatus::BeyondHorizon => "beyond_horizon",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverEntry {
    pub x: String,
    pub y: String,
    pub indicator: Indicator,
    pub hours: Option<f64>,
    pub status: CrossoverStatus,
    /// Scenario with the lower total before and after the crossing.
    pub lower_before: Option<String>,
    pub lower_after: Option<String>,
}

/// First hour in `[0, HOUR_CAP]` where the totals of `x` and `y` meet.
pub fn crossover(x: &AffineProfile, y: &AffineProfile, indicator: Indicator) -> CrossoverEntry {
    let fx = x.fixed_total()[indicator];
    let fy = y.fixed_total()[indicator];
    let dr = x.use_rate[indicator] - y.use_rate[indicator];
    let diff = |h: f64| x.total(indicator, h) - y.total(indicator, h);
    let lower = |d: f64| match d.partial_cmp(&0.0) {
        Some(std::cmp::Ordering::Less) => Some(x.scenario.clone()),
        Some(std::cmp::Ordering::Greater) => Some(y.scenario.clone()),
        _ => None,
    };
    let entry = |hours, status, before, after| CrossoverEntry {
        x: x.scenario.clone(),
        y: y.scenario.clone(),
        indicator,
        hours,
        status,
        lower_before: before,
        lower_after: after,
    };

    let mut edges = vec![0.0];
    edges.extend(x.breakpoints(HOUR_CAP));
    edges.extend(y.breakpoints(HOUR_CAP));
    edges.push(HOUR_CAP);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    if edges.len() == 2 && dr == 0.0 && fx == fy {
        return entry(None, CrossoverStatus::AlwaysEqual, None, None);
    }
    for seg in edges.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let mid = 0.5 * (a + b);
        let kx = x.replacement_factor(mid);
        let ky = y.replacement_factor(mid);
        let df = fx * kx - fy * ky;
        if dr == 0.0 {
            continue;
        }
        let h = -df / dr;
        if h >= a && h <= b {
            // Within the segment x climbs past y when dr > 0, and y past x otherwise.
            let (before, after) = if dr > 0.0 { (x, y) } else { (y, x) };
            return entry(
                Some(h),
                CrossoverStatus::Crosses,
                Some(before.scenario.clone()),
                Some(after.scenario.clone()),
            );
        }
    }
    let d0 = diff(0.0);
    let status = if edges.len() == 2 && dr != 0.0 && -(fx - fy) / dr > HOUR_CAP {
        CrossoverStatus::BeyondHorizon
    } else if d0 < 0.0 || (d0 == 0.0 && dr < 0.0) {
        CrossoverStatus::XAlwaysLower
    } else {
        CrossoverStatus::YAlwaysLower
    };
    let before = lower(if d0 == 0.0 { dr } else { d0 });
    entry(None, status, before.clone(), before)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioEntry {
    pub x: String,
    pub y: String,
    pub indicator: Indicator,
    /// Fixed-phase total of `x` over that of `y`.
    pub fixed_ratio: Option<f64>,
    /// `log10(total_y / total_x)` at the reference hour.
    pub orders_of_magnitude: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub reference_hours: f64,
    pub profiles: Vec<AffineProfile>,
    pub sweeps: Vec<SweepSeries>,
    pub at_reference: Vec<(String, Vec<PhaseImpact>)>,
    pub contributions: Vec<(String, Vec<(String, Impacts)>)>,
    pub dominance: Vec<(String, Indicator, Option<f64>)>,
    /// One entry per unordered pair, in input order.
    pub crossovers: Vec<CrossoverEntry>,
    /// One entry per ordered pair.
    pub ratios: Vec<RatioEntry>,
    /// Error-correction setup count of `y` over that of `x`, quantum pairs.
    pub setup_ratios: Vec<(String, String, f64)>,
}

impl SensitivityReport {
    pub fn profile(&self, id: &str) -> Option<&AffineProfile> {
        self.profiles.iter().find(|p| p.scenario == id)
    }

    pub fn crossover(&self, x: &str, y: &str, indicator: Indicator) -> Option<&CrossoverEntry> {
        self.crossovers
            .iter()
            .find(|c| c.x == x && c.y == y && c.indicator == indicator)
    }

    pub fn ratio(&self, x: &str, y: &str, indicator: Indicator) -> Option<&RatioEntry> {
        self.ratios
            .iter()
            .find(|r| r.x == x && r.y == y && r.indicator == indicator)
    }
}

fn positive_ratio(num: f64, den: f64) -> Option<f64> {
    (num > 0.0 && den > 0.0).then(|| num / den)
}

/// Profiles every scenario (in parallel), then tabulates sweeps, dominance,
/// pairwise crossovers and ratios.
pub fn run_sensitivity(
    engine: &Engine<'_>,
    scenarios: &[Scenario],
    grid: &[f64],
    reference_hours: f64,
) -> Result<SensitivityReport> {
    check_grid(grid)?;
    check_hours(reference_hours)?;
    let mut seen = std::collections::BTreeSet::new();
    for s in scenarios {
        if !seen.insert(s.id.as_str()) {
            return Err(LcaError::InvalidArgument {
                name: "scenario",
                value: f64::NAN,
                reason: "scenario ids must be unique",
            });
        }
    }
    let results: Vec<Result<(AffineProfile, Vec<(String, Impacts)>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|s| scope.spawn(move || Ok((engine.profile(s)?, engine.contributions(s)?))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario worker panicked"))
            .collect()
    });
    let mut profiles = Vec::new();
    let mut contributions = Vec::new();
    for r in results {
        let (p, c) = r?;
        contributions.push((p.scenario.clone(), c));
        profiles.push(p);
    }

    let mut sweeps = Vec::new();
    let mut at_reference = Vec::new();
    let mut dominance = Vec::new();
    for p in &profiles {
        sweeps.push(p.sweep(grid)?);
        at_reference.push((p.scenario.clone(), p.at(reference_hours)?));
        for ind in Indicator::ALL {
            dominance.push((p.scenario.clone(), ind, p.phase_dominance_hour(ind)));
        }
    }

    let mut crossovers = Vec::new();
    let mut ratios = Vec::new();
    for (i, x) in profiles.iter().enumerate() {
        for (j, y) in profiles.iter().enumerate() {
            if i == j {
                continue;
            }
            for ind in Indicator::ALL {
                if i < j {
                    crossovers.push(crossover(x, y, ind));
                }
                ratios.push(RatioEntry {
                    x: x.scenario.clone(),
                    y: y.scenario.clone(),
                    indicator: ind,
                    fixed_ratio: positive_ratio(x.fixed_total()[ind], y.fixed_total()[ind]),
                    orders_of_magnitude: positive_ratio(y.total(ind, reference_hours), x.total(ind, reference_hours))
                        .map(f64::log10),
                });
            }
        }
    }

    let setups: Vec<(&str, u64)> = scenarios
        .iter()
        .filter_map(|s| match &s.system.kind {
            SystemKind::Quantum { counts, .. } => Some((s.id.as_str(), counts.qec_setups)),
            SystemKind::Hpc { .. } => None,
        })
        .collect();
    let mut setup_ratios = Vec::new();
    for (i, (x, nx)) in setups.iter().enumerate() {
        for (y, ny) in &setups[i + 1..] {
            setup_ratios.push((x.to_string(), y.to_string(), *ny as f64 / *nx as f64));
        }
    }

    Ok(SensitivityReport {
        reference_hours,
        profiles,
        sweeps,
        at_reference,
        contributions,
        dominance,
        crossovers,
        ratios,
        setup_ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(id: &str, fixed: f64, rate: f64) -> AffineProfile {
        AffineProfile {
            scenario: id.to_string(),
            production: Impacts([fixed; 3]),
            delivery: Impacts::ZERO,
            end_of_life: Impacts::ZERO,
            use_rate: Impacts([rate; 3]),
            lifetime_hours: DEFAULT_LIFETIME_HOURS,
            replacement_multiplier: 1,
        }
    }

    const CC: Indicator = Indicator::ClimateChange;

    #[test]
    fn crossover_algebra() {
        let c = crossover(&profile("x", 10.0, 2.0), &profile("y", 20.0, 1.0), CC);
        assert_eq!(c.status, CrossoverStatus::Crosses);
        assert_eq!(c.hours, Some(10.0));
        assert_eq!(c.lower_before.as_deref(), Some("x"));
        assert_eq!(c.lower_after.as_deref(), Some("y"));
    }

    #[test]
    fn parallel_lines_never_cross() {
        let c = crossover(&profile("x", 10.0, 1.0), &profile("y", 20.0, 1.0), CC);
        assert_eq!(c.hours, None);
        assert_eq!(c.status, CrossoverStatus::XAlwaysLower);
        let c = crossover(&profile("x", 30.0, 1.0), &profile("y", 20.0, 1.0), CC);
        assert_eq!(c.status, CrossoverStatus::YAlwaysLower);
    }

    #[test]
    fn identical_profiles_are_flagged() {
        let c = crossover(&profile("x", 10.0, 1.0), &profile("y", 10.0, 1.0), CC);
        assert_eq!(c.status, CrossoverStatus::AlwaysEqual);
        assert_eq!(c.hours, None);
    }

    #[test]
    fn diverging_lines_report_lower() {
        // x starts lower and grows slower.
        let c = crossover(&profile("x", 10.0, 1.0), &profile("y", 20.0, 2.0), CC);
        assert_eq!(c.status, CrossoverStatus::XAlwaysLower);
    }

    #[test]
    fn crossing_past_the_cap_is_none() {
        let c = crossover(&profile("x", 0.0, 1.0), &profile("y", 2e6, 0.0), CC);
        assert_eq!(c.hours, None);
        assert_eq!(c.status, CrossoverStatus::BeyondHorizon);
    }

    #[test]
    fn dominance_hour() {
        let p = profile("x", 100.0, 0.01);
        assert!((p.phase_dominance_hour(CC).unwrap() - 10_000.0).abs() < 1e-9);
        assert_eq!(profile("x", 100.0, 0.0).phase_dominance_hour(CC), None);
    }

    #[test]
    fn zero_hours_is_fixed_only() {
        let p = profile("x", 5.0, 3.0);
        let at = p.at(0.0).unwrap();
        assert_eq!(at[2].impacts, Impacts::ZERO);
        assert_eq!(p.total(CC, 0.0), 5.0);
        assert!(p.at(-1.0).is_err());
    }

    #[test]
    fn doubling_hours_doubles_use_only() {
        let p = profile("x", 5.0, 3.0);
        let a = p.at(100.0).unwrap();
        let b = p.at(200.0).unwrap();
        assert_eq!(b[2].impacts[CC], 2.0 * a[2].impacts[CC]);
        assert_eq!(a[0], b[0]);
    }

    #[test]
    fn replacement_steps() {
        let mut p = profile("x", 5.0, 0.0);
        p.replacement_multiplier = 2;
        let l = p.lifetime_hours;
        assert_eq!(p.total(CC, l), 5.0);
        assert_eq!(p.total(CC, l + 1.0), 10.0);
        assert_eq!(p.total(CC, 2.0 * l), 10.0);
        assert_eq!(p.total(CC, 2.0 * l + 1.0), 15.0);
    }

    #[test]
    fn crossover_through_a_replacement_jump() {
        // x: 10 + 0h, replaced at 100 h, so 20 after. y: 15 flat.
        let mut x = profile("x", 10.0, 0.0);
        x.lifetime_hours = 100.0;
        x.replacement_multiplier = 2;
        let y = profile("y", 15.0, 0.0);
        let c = crossover(&x, &y, CC);
        assert_eq!(c.hours, None);
        // y with a slope meets x again after the jump.
        let y = profile("y", 15.0, 0.04);
        let c = crossover(&x, &y, CC);
        assert_eq!(c.status, CrossoverStatus::Crosses);
        assert!((c.hours.unwrap() - 125.0).abs() < 1e-9);
    }

    #[test]
    fn sweep_grid_checks() {
        let p = profile("x", 5.0, 3.0);
        assert_eq!(p.sweep(&[10.0, 1.0]), Err(LcaError::UnsortedGrid));
        let s = p.sweep(&[0.0]).unwrap();
        assert_eq!(s.total(CC, 0), 5.0);
        assert_eq!(s.value(Phase::Production, CC, 0), 5.0);
    }
}
