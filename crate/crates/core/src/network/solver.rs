use serde::{Deserialize, Serialize};

use crate::components::{
    compressor_power, inverse_fan_setpoint, inverse_pump_setpoint, load_roots, multi_pump_flow,
    multi_tower_leaving_temp, pid_step, solve_chiller, PidGains, PumpFanParams,
};
use crate::config::PlantConfig;
use crate::error::{ModelError, SimError};
use crate::units::{pa_to_psi, WATER_CP, WATER_DENSITY};

use super::state::{Boundary, ChillerState, EnergyBalance, LoopBalance, PlantControls, SimState};
use super::topology::{Attachment, Loop, NetworkTopology};

pub(crate) struct Gains {
    pub chiller: PidGains,
    pub chilled_pump: PidGains,
}

pub(crate) fn gains(config: &PlantConfig) -> Gains {
    let c = &config.control;
    let r = &config.ratings;
    // `rated_load` only fails on invalid coefficients, which validation
    // rejects; fall back to a unit range to keep the gains well formed.
    let q_rated = rated_load(config).unwrap_or(1.0);
    Gains {
        chiller: PidGains {
            kp: c.chiller.kp,
            ki: c.chiller.ki,
            kd: c.chiller.kd,
            output_min: 0.0,
            output_max: q_rated,
            bias: 0.0,
        },
        chilled_pump: PidGains {
            kp: c.chilled_pump.kp,
            ki: c.chilled_pump.ki,
            kd: c.chilled_pump.kd,
            output_min: r.pump_min_freq,
            output_max: r.pump_max_freq,
            bias: 0.0,
        },
    }
}

/// Evaporator load (kW) of one chiller at its rated compressor power.
pub(crate) fn rated_load(config: &PlantConfig) -> Result<f64, ModelError> {
    let params = config.calibration.chiller.with_capacitance(1.0, 1.0);
    let (q, _) = load_roots(config.ratings.chiller_rated_power, &params)?;
    Ok(q.max(0.0))
}

/// Pump banks share one gain per pump: the interaction coefficients carry
/// it, so the per-pump flow gain is pinned to one on the bank path.
fn bank(params: &PumpFanParams) -> PumpFanParams {
    PumpFanParams { c11: 1.0, ..*params }
}

fn loss(topology: &NetworkTopology, attachment: Attachment) -> f64 {
    topology.edges_with(attachment).next().map_or(0.0, |e| e.loss)
}

fn counts(topology: &NetworkTopology, config: &PlantConfig, controls: &PlantControls) -> Counts {
    let e = &config.equipment;
    Counts {
        chillers: controls.chillers_enabled.min(topology.chillers),
        chilled_pumps: controls.chilled_pumps.clamp(1, e.chilled_pumps),
        condenser_pumps: controls.condenser_pumps.clamp(1, e.condenser_pumps),
        heat_exchangers: controls.heat_exchangers.min(e.heat_exchangers),
        fans: e.towers * e.fans_per_tower,
    }
}

#[derive(Debug, Clone, Copy)]
struct Counts {
    chillers: usize,
    chilled_pumps: usize,
    condenser_pumps: usize,
    heat_exchangers: usize,
    fans: usize,
}

/// Chilled-pump frequency that delivers the distribution pressure setpoint
/// in steady flow.
pub(crate) fn chilled_pump_feedforward(
    config: &PlantConfig,
    topology: &NetworkTopology,
    controls: &PlantControls,
) -> f64 {
    let n = counts(topology, config, controls);
    let k = loss(topology, Attachment::AirHandler);
    let flow = if k > 0.0 {
        (controls.diff_pressure.max(0.0) / k).sqrt()
    } else {
        0.0
    };
    let r = &config.ratings;
    inverse_pump_setpoint(flow, n.chilled_pumps, n.chillers, &bank(&config.calibration.chilled))
        .map_or(r.pump_max_freq, |(f, _)| f)
        .clamp(r.pump_min_freq, r.pump_max_freq)
}

/// Everything that follows algebraically from the node temperatures and
/// the controller states.
struct Snapshot {
    chilled_flow: f64,
    condenser_flow: f64,
    condenser_pump_freq: f64,
    fan_freq: f64,
    chilled_pump_power: f64,
    condenser_pump_power: f64,
    fan_power: f64,
    hex_heat: f64,
    tower_heat: f64,
    chillers: Vec<ChillerState>,
    /// Flow, outlet temperature and heat added to the water, per edge.
    edges: Vec<(f64, f64, f64)>,
    distribution_pressure: f64,
    pressures: Vec<f64>,
}

fn evaluate(
    topology: &NetworkTopology,
    config: &PlantConfig,
    state: &SimState,
    controls: &PlantControls,
    boundary: &Boundary,
) -> Result<Snapshot, SimError> {
    let p = topology.ports;
    let n = counts(topology, config, controls);
    let cal = &config.calibration;
    let r = &config.ratings;
    let t = |i: usize| state.nodes[i].temperature;

    // Hydraulics.
    let chilled_bank = bank(&cal.chilled);
    let condenser_bank = bank(&cal.condenser);
    let chilled_flow = multi_pump_flow(
        &vec![state.chilled_pump_freq; n.chilled_pumps],
        n.chilled_pumps,
        n.chillers,
        &chilled_bank,
    )?;
    let (cw_freq, _) =
        inverse_pump_setpoint(controls.condenser_flow.max(0.0), n.condenser_pumps, n.chillers, &condenser_bank)?;
    let cw_freq = cw_freq.clamp(r.pump_min_freq, r.pump_max_freq);
    let condenser_flow =
        multi_pump_flow(&vec![cw_freq; n.condenser_pumps], n.condenser_pumps, n.chillers, &condenser_bank)?;
    let cap_chw = chilled_flow * WATER_CP;
    let cap_cw = condenser_flow * WATER_CP;

    // Branch split: open evaporator/condenser branches share the flow, the
    // bypass opens as the total opening drops below one branch.
    let open: f64 = state.chillers.iter().map(|c| c.valve).sum();
    let bypass = (1.0 - open).max(0.0);
    let conductance = open + bypass;
    let full_chw = chilled_flow / conductance;
    let full_cw = condenser_flow / conductance;

    // Free-cooling heat exchanger between return water and tower basin.
    let eff = config.heat_exchanger.bank_effectiveness(n.heat_exchangers);
    let hex_heat = eff * cap_chw.min(cap_cw) * (t(p.chw_return) - t(p.cw_basin)).max(0.0);

    // Chillers.
    let t_ev_in = t(p.chw_discharge);
    let t_cd_in = t(p.cw_discharge);
    let q_rated = rated_load(config)?;
    let mut chillers = Vec::with_capacity(state.chillers.len());
    for c in &state.chillers {
        if c.valve <= 0.0 {
            chillers.push(ChillerState {
                valve: 0.0,
                t_chilled_out: t_ev_in,
                t_condenser_out: t_cd_in,
                ..ChillerState::default()
            });
            continue;
        }
        let freeze = full_chw * WATER_CP * (t_ev_in - r.chiller_min_leaving_temp);
        let q = state.chiller_demand.clamp(0.0, q_rated.min(freeze.max(0.0)));
        let params = cal.chiller.with_capacitance(full_chw * WATER_CP, full_cw * WATER_CP);
        let w = compressor_power(q, &params)?;
        let sol = solve_chiller(t_ev_in, t_cd_in, w, &params)?;
        chillers.push(ChillerState {
            valve: c.valve,
            evaporator_flow: c.valve * full_chw,
            condenser_flow: c.valve * full_cw,
            load: c.valve * sol.q_evaporator,
            condenser_heat: c.valve * sol.q_condenser,
            compressor_power: c.valve * w,
            t_chilled_out: sol.t_chilled_out,
            t_condenser_out: sol.t_condenser_out,
        });
    }

    // Tower bank: fans follow the inverse model toward the return setpoint.
    let t_tw_in = t(p.cw_return);
    let wb = boundary.weather.t_wet_bulb;
    let target = controls.tower_return_temp;
    let fan_freq = if t_tw_in <= wb || target >= t_tw_in {
        0.0
    } else if target <= wb {
        config.ratings.fan_max_freq
    } else {
        let (f, _) = inverse_fan_setpoint(
            target,
            t_tw_in,
            wb,
            cw_freq,
            n.condenser_pumps,
            n.fans,
            &cal.tower,
            &cal.condenser,
        )?;
        f.min(config.ratings.fan_max_freq)
    };
    let t_tw_out = if t_tw_in > wb {
        multi_tower_leaving_temp(
            t_tw_in,
            wb,
            &vec![cw_freq; n.condenser_pumps],
            &vec![fan_freq; n.fans],
            &cal.tower,
        )?
    } else {
        t_tw_in
    };
    let tower_heat = cap_cw * (t_tw_in - t_tw_out);

    let mut edges = Vec::with_capacity(topology.edges.len());
    for e in &topology.edges {
        let t_in = t(e.from);
        let through = |flow: f64, heat: f64| {
            let cap = flow * WATER_CP;
            let out = if cap > 0.0 { t_in + heat / cap } else { t_in };
            (flow, out, heat)
        };
        edges.push(match e.attachment {
            Attachment::AirHandler => through(chilled_flow, boundary.load),
            Attachment::SupplyMain | Attachment::ChilledPumps => through(chilled_flow, 0.0),
            Attachment::HexChilledSide => through(chilled_flow, -hex_heat),
            Attachment::EvaporatorBypass => through(bypass * full_chw, 0.0),
            Attachment::Evaporator(i) => {
                let c = &chillers[i];
                (c.evaporator_flow, c.t_chilled_out, -c.load)
            }
            Attachment::HexCondenserSide => through(condenser_flow, hex_heat),
            Attachment::CondenserPumps => through(condenser_flow, 0.0),
            Attachment::CondenserBypass => through(bypass * full_cw, 0.0),
            Attachment::Condenser(i) => {
                let c = &chillers[i];
                (c.condenser_flow, c.t_condenser_out, c.condenser_heat)
            }
            Attachment::TowerBank => (condenser_flow, t_tw_out, -tower_heat),
        });
    }

    // Quasi-static pressures relative to each loop's pump inlet.
    let k_dist = loss(topology, Attachment::AirHandler);
    let k_sm = loss(topology, Attachment::SupplyMain);
    let k_ev = loss(topology, Attachment::EvaporatorBypass);
    let k_cd = loss(topology, Attachment::CondenserBypass);
    let k_tw = loss(topology, Attachment::TowerBank);
    let m = chilled_flow;
    let distribution_pressure = k_dist * m * m;
    let head_chw = k_ev * full_chw * full_chw + k_sm * m * m + distribution_pressure;
    let mc = condenser_flow;
    let head_cw = k_cd * full_cw * full_cw + k_tw * mc * mc;
    let mut pressures = vec![0.0; topology.nodes.len()];
    pressures[p.chw_discharge] = head_chw;
    pressures[p.chw_bank] = head_chw - k_ev * full_chw * full_chw;
    pressures[p.chw_supply] = distribution_pressure;
    pressures[p.cw_discharge] = head_cw;
    pressures[p.cw_return] = k_tw * mc * mc;

    let cal_cd = &cal.condenser;
    Ok(Snapshot {
        chilled_flow,
        condenser_flow,
        condenser_pump_freq: cw_freq,
        fan_freq,
        chilled_pump_power: n.chilled_pumps as f64 * cal.chilled.pump_power(state.chilled_pump_freq),
        condenser_pump_power: n.condenser_pumps as f64 * cal_cd.pump_power(cw_freq),
        fan_power: n.fans as f64 * cal_cd.fan_power(fan_freq),
        hex_heat,
        tower_heat,
        chillers,
        edges,
        distribution_pressure,
        pressures,
    })
}

fn record(topology: &NetworkTopology, state: &mut SimState, snap: &Snapshot, load: f64) {
    for (i, node) in state.nodes.iter_mut().enumerate() {
        node.mass_flow = match topology.nodes[i].circuit {
            Loop::Chilled => snap.chilled_flow,
            Loop::Condenser => snap.condenser_flow,
        };
        node.diff_pressure = snap.pressures[i];
    }
    state.chillers.clone_from(&snap.chillers);
    state.edge_flows = snap.edges.iter().map(|e| e.0).collect();
    state.chilled_flow = snap.chilled_flow;
    state.condenser_flow = snap.condenser_flow;
    state.condenser_pump_freq = snap.condenser_pump_freq;
    state.fan_freq = snap.fan_freq;
    state.chilled_pump_power = snap.chilled_pump_power;
    state.condenser_pump_power = snap.condenser_pump_power;
    state.fan_power = snap.fan_power;
    state.hex_heat = snap.hex_heat;
    state.tower_heat = snap.tower_heat;
    state.building_load = load;
    state.distribution_pressure = snap.distribution_pressure;
}

/// Recomputes the algebraic part of `state` (flows, powers, component
/// outlets) for the given controls without advancing time.
pub fn probe(
    topology: &NetworkTopology,
    config: &PlantConfig,
    state: &SimState,
    controls: &PlantControls,
    boundary: &Boundary,
) -> Result<SimState, SimError> {
    let snap = evaluate(topology, config, state, controls, boundary)?;
    let mut next = state.clone();
    record(topology, &mut next, &snap, boundary.load);
    Ok(next)
}

fn substeps(topology: &NetworkTopology, config: &PlantConfig, controls: &PlantControls, dt: f64) -> usize {
    let n = counts(topology, config, controls);
    let cal = &config.calibration;
    let fmax = config.ratings.pump_max_freq;
    let max_flow = |params: &PumpFanParams, pumps: usize| {
        pumps as f64 * fmax * params.interaction(pumps, n.chillers).max(0.0)
    };
    let m_chw = max_flow(&cal.chilled, n.chilled_pumps);
    let m_cw = max_flow(&cal.condenser, n.condenser_pumps).max(controls.condenser_flow);
    let mut h = config.simulation.max_substep;
    for node in &topology.nodes {
        let m = match node.circuit {
            Loop::Chilled => m_chw,
            Loop::Condenser => m_cw,
        };
        if m > 0.0 {
            h = h.min(0.9 * node.volume * WATER_DENSITY / m);
        }
    }
    ((dt / h).ceil() as usize).max(1)
}

/// Relative size of a heat-content rounding error, used as the floor for
/// the energy-balance check.
const ROUNDOFF: f64 = 1e-10;

/// Advances the plant by `dt` seconds under fixed controls and boundary.
pub fn advance(
    topology: &NetworkTopology,
    config: &PlantConfig,
    state: &SimState,
    controls: &PlantControls,
    boundary: &Boundary,
    dt: f64,
) -> Result<SimState, SimError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::InvalidStep(dt));
    }
    let k = substeps(topology, config, controls, dt);
    let h = dt / k as f64;
    let g = gains(config);
    let n = counts(topology, config, controls);
    let ramp = config.simulation.step_seconds;
    let sim = &config.simulation;
    let mut s = state.clone();
    let mut balance = EnergyBalance::default();

    for _ in 0..k {
        let snap = evaluate(topology, config, &s, controls, boundary)?;

        // Well-mixed upwind energy balance per node.
        let mut inflow = vec![(0.0, 0.0); s.nodes.len()];
        let mut step_bal = [LoopBalance::default(); 2];
        for (e, (flow, t_out, heat)) in topology.edges.iter().zip(&snap.edges) {
            let acc = &mut inflow[e.to];
            acc.0 += flow;
            acc.1 += flow * t_out;
            let b = &mut step_bal[topology.nodes[e.from].circuit as usize];
            if *heat >= 0.0 {
                b.added += heat * h;
            } else {
                b.removed -= heat * h;
            }
        }
        for (i, node) in s.nodes.iter_mut().enumerate() {
            let (m, mt) = inflow[i];
            let mass = topology.nodes[i].volume * WATER_DENSITY;
            let old = node.temperature;
            node.temperature = old + h * (mt - m * old) / mass;
            let b = &mut step_bal[topology.nodes[i].circuit as usize];
            b.stored += mass * WATER_CP * (node.temperature - old);
            b.floor += ROUNDOFF * mass * WATER_CP * old.abs();
        }
        for b in &step_bal {
            balance.worst_substep = balance.worst_substep.max(b.relative());
        }
        balance.chilled.accumulate(&step_bal[0]);
        balance.condenser.accumulate(&step_bal[1]);
        s.clock += h;

        for (i, node) in s.nodes.iter().enumerate() {
            if !(node.temperature >= sim.temp_min && node.temperature <= sim.temp_max) {
                return Err(SimError::Instability {
                    node: topology.nodes[i].name.clone(),
                    temperature: node.temperature,
                    clock: s.clock,
                });
            }
        }

        // Supervisory loops tick on the updated probes.
        let dp_psi = pa_to_psi(snap.distribution_pressure);
        let (pid, freq) = pid_step(
            s.chilled_pump_pid,
            pa_to_psi(controls.diff_pressure),
            dp_psi,
            &g.chilled_pump,
            h,
        );
        s.chilled_pump_pid = pid;
        s.chilled_pump_freq = freq;

        if s.chillers.iter().any(|c| c.valve > 0.0) {
            // Reverse acting: a warm bank asks for more load.
            let t_bank = s.nodes[topology.ports.chw_bank].temperature;
            let (pid, demand) = pid_step(
                s.chiller_pid,
                -controls.chiller_leaving_temp,
                -t_bank,
                &g.chiller,
                h,
            );
            s.chiller_pid = pid;
            s.chiller_demand = demand;
        }
        for (i, c) in s.chillers.iter_mut().enumerate() {
            let target = if i < n.chillers { 1.0 } else { 0.0 };
            let step = h / ramp;
            let v = if c.valve < target {
                (c.valve + step).min(target)
            } else {
                (c.valve - step).max(target)
            };
            // Snap accumulated rounding so a closed valve is exactly closed.
            c.valve = if (v - target).abs() < 1e-9 { target } else { v };
        }
    }

    let snap = evaluate(topology, config, &s, controls, boundary)?;
    record(topology, &mut s, &snap, boundary.load);
    s.balance = balance;
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyOutcome {
    pub state: SimState,
    pub converged: bool,
    pub iterations: usize,
    /// Largest node temperature change over the final step, K.
    pub last_change: f64,
}

/// Repeats environment-length steps until no node moves by more than the
/// configured tolerance, or the step cap is hit.
pub fn solve_steady(
    topology: &NetworkTopology,
    config: &PlantConfig,
    state: &SimState,
    controls: &PlantControls,
    boundary: &Boundary,
) -> Result<SteadyOutcome, SimError> {
    let sim = &config.simulation;
    let mut s = state.clone();
    let mut last_change = f64::INFINITY;
    for iteration in 1..=sim.steady_max_steps {
        let next = advance(topology, config, &s, controls, boundary, sim.step_seconds)?;
        last_change = s
            .nodes
            .iter()
            .zip(&next.nodes)
            .map(|(a, b)| (a.temperature - b.temperature).abs())
            .fold(0.0, f64::max);
        s = next;
        if last_change < sim.steady_tolerance {
            return Ok(SteadyOutcome {
                state: s,
                converged: true,
                iterations: iteration,
                last_change,
            });
        }
    }
    Ok(SteadyOutcome {
        state: s,
        converged: false,
        iterations: sim.steady_max_steps,
        last_change,
    })
}
