//! SI unit helpers. Everything inside the simulator is K, kg/s, kW, Hz and Pa;
//! °F and psi only appear at the external interface.

/// Specific heat of water, kJ/(kg·K).
pub const WATER_CP: f64 = 4.186;
/// Density of water, kg/m³.
pub const WATER_DENSITY: f64 = 1000.0;
/// Pascals per psi.
pub const PA_PER_PSI: f64 = 6_894.757_293_168_361;

const KELVIN_OFFSET: f64 = 273.15;

pub fn kelvin_to_fahrenheit(k: f64) -> f64 {
    (k - KELVIN_OFFSET) * 9.0 / 5.0 + 32.0
}

pub fn fahrenheit_to_kelvin(f: f64) -> f64 {
    (f - 32.0) * 5.0 / 9.0 + KELVIN_OFFSET
}

pub fn celsius_to_kelvin(c: f64) -> f64 {
    c + KELVIN_OFFSET
}

pub fn kelvin_to_celsius(k: f64) -> f64 {
    k - KELVIN_OFFSET
}

pub fn psi_to_pa(psi: f64) -> f64 {
    psi * PA_PER_PSI
}

pub fn pa_to_psi(pa: f64) -> f64 {
    pa / PA_PER_PSI
}

/// Thermal capacitance rate of a water stream, kW/K.
pub fn capacitance_rate(mass_flow: f64) -> f64 {
    mass_flow * WATER_CP
}
