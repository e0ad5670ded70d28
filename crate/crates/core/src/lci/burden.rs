//! Mass-driven foreground burdens: assembly, freight and end of life.

use super::{DemandVector, FlowId};
use crate::error::{ensure_nonnegative, LcaError, Result};

/// Scales per-kilogram assembly coefficients (product, amount per kg) by the
/// assembled mass.
pub fn assembly_burden(mass_kg: f64, coefficients: &[(FlowId, f64)]) -> Result<DemandVector> {
    ensure_nonnegative("mass_kg", mass_kg)?;
    let mut demand = DemandVector::new("production");
    if mass_kg == 0.0 {
        return Ok(demand);
    }
    for (product, per_kg) in coefficients {
        demand.add(product, per_kg * mass_kg);
    }
    Ok(demand)
}

/// Freight in tonne-kilometres.
pub fn transport_tkm(mass_kg: f64, distance_km: f64) -> Result<f64> {
    ensure_nonnegative("mass_kg", mass_kg)?;
    ensure_nonnegative("distance_km", distance_km)?;
    Ok(mass_kg / 1000.0 * distance_km)
}

/// Cut-off end of life: the recyclable share leaves burden-free, the rest is
/// sent to `waste_product` (kg).
pub fn eol_split(mass_kg: f64, recyclable_fraction: f64, waste_product: &FlowId) -> Result<DemandVector> {
    ensure_nonnegative("mass_kg", mass_kg)?;
    if !(0.0..=1.0).contains(&recyclable_fraction) {
        return Err(LcaError::InvalidArgument {
            name: "recyclable_fraction",
            value: recyclable_fraction,
            reason: "must lie in [0, 1]",
        });
    }
    let mut demand = DemandVector::new("end_of_life");
    let waste = (1.0 - recyclable_fraction) * mass_kg;
    if waste > 0.0 {
        demand.add(waste_product, waste);
    }
    Ok(demand)
}
