//! Canonical observable and action identifiers.
//!
//! These strings are the wire vocabulary shared by the simulator, the task
//! suite, the command-line harness and any foreign-language adapter. Values
//! crossing this boundary use the units listed here (°F and psi where the
//! plant operators use them); everything behind it is SI.

use serde::{Deserialize, Serialize};

/// One entry of the action table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSpec {
    pub id: &'static str,
    pub unit: &'static str,
    pub integer: bool,
    pub default: f64,
    pub min: f64,
    pub max: f64,
}

pub const CHILLERS_ENABLED: &str = "chillers_enabled";
pub const CHILLED_PUMPS_ENABLED: &str = "chilled_pumps_enabled";
pub const CONDENSER_PUMPS_ENABLED: &str = "condenser_pumps_enabled";
pub const CHILLER_LEAVING_TEMP: &str = "chiller_leaving_temp";
pub const TOWER_RETURN_TEMP: &str = "tower_return_temp";
pub const CONDENSER_FLOW: &str = "condenser_flow";
pub const DIFF_PRESSURE: &str = "diff_pressure";
pub const FREE_COOLING_HEX: &str = "free_cooling_hex";

/// The action table, in its canonical order.
pub const CONTROLS: [ControlSpec; 8] = [
    ControlSpec {
        id: CHILLERS_ENABLED,
        unit: "-",
        integer: true,
        default: 1.0,
        min: 0.0,
        max: 3.0,
    },
    ControlSpec {
        id: CHILLED_PUMPS_ENABLED,
        unit: "-",
        integer: true,
        default: 1.0,
        min: 1.0,
        max: 3.0,
    },
    ControlSpec {
        id: CONDENSER_PUMPS_ENABLED,
        unit: "-",
        integer: true,
        default: 1.0,
        min: 1.0,
        max: 3.0,
    },
    ControlSpec {
        id: CHILLER_LEAVING_TEMP,
        unit: "degF",
        integer: false,
        default: 48.0,
        min: 40.0,
        max: 75.0,
    },
    ControlSpec {
        id: TOWER_RETURN_TEMP,
        unit: "degF",
        integer: false,
        default: 55.0,
        min: 32.0,
        max: 90.0,
    },
    ControlSpec {
        id: CONDENSER_FLOW,
        unit: "kg/s",
        integer: false,
        default: 50.0,
        min: 10.0,
        max: 200.0,
    },
    ControlSpec {
        id: DIFF_PRESSURE,
        unit: "psi",
        integer: false,
        default: 15.0,
        min: 0.1,
        max: 50.0,
    },
    ControlSpec {
        id: FREE_COOLING_HEX,
        unit: "-",
        integer: true,
        default: 1.0,
        min: 1.0,
        max: 3.0,
    },
];

pub fn control_spec(id: &str) -> Option<&'static ControlSpec> {
    CONTROLS.iter().find(|c| c.id == id)
}

pub const BUILDING_LOAD: &str = "building_load";
pub const DRY_BULB: &str = "dry_bulb";
pub const WET_BULB: &str = "wet_bulb";
pub const REL_HUMIDITY: &str = "rel_humidity";
pub const TOWER_FAN_POWER: &str = "tower_fan_power";
pub const CONDENSER_PUMP_POWER: &str = "condenser_pump_power";
pub const CHILLED_PUMP_POWER: &str = "chilled_pump_power";
pub const CHILLER_BANK_LEAVING_TEMP: &str = "chiller_bank_leaving_temp";
pub const CHILLED_WATER_SUPPLY_TEMP: &str = "chilled_water_supply_temp";
pub const CHILLED_WATER_RETURN_TEMP: &str = "chilled_water_return_temp";

/// Per-chiller observable suffixes.
pub const CONDENSER_LEAVING_TEMP: &str = "condenser_leaving_temp";
pub const CHILLED_WATER_FLOW: &str = "chilled_water_flow";
pub const COMPRESSOR_POWER: &str = "compressor_power";
pub const PER_CHILLER: [&str; 3] = [CONDENSER_LEAVING_TEMP, CHILLED_WATER_FLOW, COMPRESSOR_POWER];

/// Plant-wide observables, excluding the per-chiller groups.
pub const PLANT_OBSERVABLES: [&str; 11] = [
    BUILDING_LOAD,
    DRY_BULB,
    WET_BULB,
    REL_HUMIDITY,
    TOWER_FAN_POWER,
    CONDENSER_PUMP_POWER,
    CHILLED_PUMP_POWER,
    CHILLER_BANK_LEAVING_TEMP,
    CHILLED_WATER_SUPPLY_TEMP,
    CHILLED_WATER_RETURN_TEMP,
    CHILLERS_ENABLED,
];

/// Power observables that are not per chiller.
pub const AUXILIARY_POWER: [&str; 3] = [TOWER_FAN_POWER, CONDENSER_PUMP_POWER, CHILLED_PUMP_POWER];

/// `chiller_<index>.<quantity>`.
pub fn chiller_id(index: usize, quantity: &str) -> String {
    format!("chiller_{index}.{quantity}")
}

/// Splits `chiller_<index>.<quantity>` into its parts.
pub fn parse_chiller_id(id: &str) -> Option<(usize, &str)> {
    let rest = id.strip_prefix("chiller_")?;
    let (idx, quantity) = rest.split_once('.')?;
    let idx = idx.parse().ok()?;
    PER_CHILLER.contains(&quantity).then_some((idx, quantity))
}

/// Every observable id for a plant with `chillers` chillers.
pub fn observable_ids(chillers: usize) -> Vec<String> {
    let mut ids: Vec<String> = PLANT_OBSERVABLES.iter().map(|s| s.to_string()).collect();
    for i in 0..chillers {
        for q in PER_CHILLER {
            ids.push(chiller_id(i, q));
        }
    }
    ids.sort();
    ids
}

/// True for observables and controls known to the registry, including
/// per-chiller ids up to `max_chillers`.
pub fn is_known_id(id: &str, max_chillers: usize) -> bool {
    if control_spec(id).is_some() || PLANT_OBSERVABLES.contains(&id) {
        return true;
    }
    matches!(parse_chiller_id(id), Some((i, _)) if i < max_chillers)
}

/// Column ids of calibration telemetry tables. Temperatures in K, flows in
/// kg/s, powers in kW, frequencies in Hz.
pub mod telemetry {
    pub const EVAPORATOR_LOAD: &str = "evaporator_load";
    pub const COMPRESSOR_POWER: &str = "compressor_power";
    pub const PUMP_FREQ: &str = "pump_freq";
    pub const PUMP_FLOW: &str = "pump_flow";
    pub const PUMP_POWER: &str = "pump_power";
    pub const FAN_FREQ: &str = "fan_freq";
    pub const FAN_FLOW: &str = "fan_flow";
    pub const FAN_POWER: &str = "fan_power";
    pub const TOWER_INLET_TEMP: &str = "tower_inlet_temp";
    pub const WET_BULB: &str = "wet_bulb";
    pub const TOWER_LEAVING_TEMP: &str = "tower_leaving_temp";
    pub const PUMPS_RUNNING: &str = "pumps_running";
    pub const CHILLERS_RUNNING: &str = "chillers_running";
    pub const BANK_FLOW: &str = "bank_flow";
}

/// Unit family of an observable, used when noise or constraints need to
/// know whether a value is a temperature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    Temperature,
    Power,
    Flow,
    Pressure,
    Count,
    Fraction,
}

pub fn quantity_of(id: &str) -> Option<Quantity> {
    let q = match id {
        DRY_BULB | WET_BULB | CHILLER_BANK_LEAVING_TEMP | CHILLED_WATER_SUPPLY_TEMP
        | CHILLED_WATER_RETURN_TEMP | CHILLER_LEAVING_TEMP | TOWER_RETURN_TEMP => {
            Quantity::Temperature
        }
        BUILDING_LOAD | TOWER_FAN_POWER | CONDENSER_PUMP_POWER | CHILLED_PUMP_POWER => {
            Quantity::Power
        }
        CONDENSER_FLOW => Quantity::Flow,
        DIFF_PRESSURE => Quantity::Pressure,
        REL_HUMIDITY => Quantity::Fraction,
        CHILLERS_ENABLED | CHILLED_PUMPS_ENABLED | CONDENSER_PUMPS_ENABLED | FREE_COOLING_HEX => {
            Quantity::Count
        }
        other => match parse_chiller_id(other)?.1 {
            CONDENSER_LEAVING_TEMP => Quantity::Temperature,
            CHILLED_WATER_FLOW => Quantity::Flow,
            _ => Quantity::Power,
        },
    };
    Some(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chiller_ids_roundtrip() {
        let id = chiller_id(2, COMPRESSOR_POWER);
        assert_eq!(id, "chiller_2.compressor_power");
        assert_eq!(parse_chiller_id(&id), Some((2, COMPRESSOR_POWER)));
        assert_eq!(parse_chiller_id("chiller_x.compressor_power"), None);
        assert_eq!(parse_chiller_id("chiller_0.bogus"), None);
    }

    #[test]
    fn observable_count() {
        assert_eq!(observable_ids(1).len(), 14);
        assert_eq!(observable_ids(3).len(), 20);
    }

    #[test]
    fn defaults_inside_ranges() {
        for c in CONTROLS {
            assert!(c.min <= c.default && c.default <= c.max, "{}", c.id);
        }
    }
}
