//! Lumped-parameter model of a closed-loop hydrostatic transmission.
//!
//! A fixed-displacement pump running at constant speed feeds a supply node
//! protected by a relief valve. A proportional servo valve meters flow from
//! the supply node to the motor node, and the motor drives an inertia against
//! a load torque. The valve opening follows an integral speed controller
//! through a first-order lag.
//!
//! State: supply pressure `ps`, motor pressure `pm` (Pa), motor speed `omega`
//! (rad/s), valve opening `u` and the integrated normalised speed error.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output::write_float_csv;
use crate::search::{Evaluation, Objective};
use crate::space::SearchSpace;

const CC: f64 = 1e-6;
const RPM_PER_RAD_S: f64 = 60.0 / (2.0 * PI);
const LPM_PER_M3_S: f64 = 60_000.0;
const PA_PER_BAR: f64 = 1e5;

/// Objective value of a run that blew up.
pub const FAILURE_PENALTY: f64 = 1e12;
/// Time step at which the objective equals the plain per-step sum.
pub const REFERENCE_DT: f64 = 1e-3;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_DURATION: f64 = 4.0;

pub const DESIGN_COLUMNS: [&str; 3] = ["pump_size", "motor_size", "integral_gain"];

/// Speed demand in rpm: a one-second ramp to 300 rpm, then constant.
pub fn demand_speed(t: f64) -> f64 {
    if t < 1.0 {
        300.0 * t
    } else {
        300.0
    }
}

/// Load torque in N*m: 300 N*m from t = 2 s.
pub fn load_torque(t: f64) -> f64 {
    if t < 2.0 {
        0.0
    } else {
        300.0
    }
}

/// Pump and motor displacement (cc/rev) and controller integral gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmissionDesign {
    pub pump_size: f64,
    pub motor_size: f64,
    pub integral_gain: f64,
}

/// A well-tuned design: flow-balanced displacements, gain at its upper bound.
pub const REFERENCE_DESIGN: TransmissionDesign =
    TransmissionDesign { pump_size: 150.0, motor_size: 740.0, integral_gain: 50.0 };

impl TransmissionDesign {
    pub const PUMP_RANGE: (f64, f64) = (10.0, 500.0);
    pub const MOTOR_RANGE: (f64, f64) = (50.0, 800.0);
    pub const GAIN_RANGE: (f64, f64) = (0.01, 50.0);

    pub fn from_design(v: &[f64]) -> Result<Self> {
        match *v {
            [pump_size, motor_size, integral_gain] => Ok(Self { pump_size, motor_size, integral_gain }),
            _ => Err(Error::Dimension { expected: 3, got: v.len() }),
        }
    }

    pub fn to_design(&self) -> Vec<f64> {
        vec![self.pump_size, self.motor_size, self.integral_gain]
    }

    /// Descriptions of every bound the design violates.
    pub fn bound_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |name: &str, v: f64, (lo, hi): (f64, f64)| {
            if !(lo..=hi).contains(&v) {
                out.push(format!("{name} = {v} outside [{lo}, {hi}]"));
            }
        };
        check("pump_size", self.pump_size, Self::PUMP_RANGE);
        check("motor_size", self.motor_size, Self::MOTOR_RANGE);
        check("integral_gain", self.integral_gain, Self::GAIN_RANGE);
        out
    }
}

/// Physical parameters of the circuit, SI units unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    /// Pump shaft speed, rev/s.
    pub pump_speed: f64,
    pub bulk_modulus: f64,
    pub supply_volume: f64,
    pub motor_volume: f64,
    pub relief_pressure: f64,
    /// Relief flow per pascal above the cracking pressure, m^3/s/Pa.
    pub relief_gain: f64,
    /// Servo valve flow at full opening per sqrt(Pa), m^3/s/sqrt(Pa).
    pub valve_coefficient: f64,
    pub valve_time_constant: f64,
    pub inertia: f64,
    /// Viscous friction, N*m*s/rad.
    pub friction: f64,
    /// Motor leakage to drain, m^3/s/Pa.
    pub leakage: f64,
    /// Pressure width over which the relief and orifice laws are smoothed, Pa.
    pub smoothing_width: f64,
    /// Speed (rad/s) that normalises the error fed to the integrator.
    pub speed_scale: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        let max_pump_flow = TransmissionDesign::PUMP_RANGE.1 * CC * 25.0;
        Self {
            pump_speed: 25.0,
            bulk_modulus: 1.4e9,
            supply_volume: 5e-3,
            motor_volume: 1e-3,
            relief_pressure: 150.0 * PA_PER_BAR,
            // full pump flow at 50 bar over the cracking pressure
            relief_gain: max_pump_flow / (50.0 * PA_PER_BAR),
            // 1.2x full pump flow at a 10 bar drop
            valve_coefficient: 1.2 * max_pump_flow / (10.0 * PA_PER_BAR).sqrt(),
            valve_time_constant: 0.05,
            inertia: 2.0,
            friction: 0.5,
            // 2 % of full pump flow at the relief setting
            leakage: 0.02 * max_pump_flow / (150.0 * PA_PER_BAR),
            smoothing_width: 0.1 * PA_PER_BAR,
            speed_scale: 500.0,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("pump_speed", self.pump_speed),
            ("bulk_modulus", self.bulk_modulus),
            ("supply_volume", self.supply_volume),
            ("motor_volume", self.motor_volume),
            ("relief_pressure", self.relief_pressure),
            ("relief_gain", self.relief_gain),
            ("valve_coefficient", self.valve_coefficient),
            ("valve_time_constant", self.valve_time_constant),
            ("inertia", self.inertia),
            ("friction", self.friction),
            ("leakage", self.leakage),
            ("smoothing_width", self.smoothing_width),
            ("speed_scale", self.speed_scale),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("plant parameter {name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    /// Reads a JSON override file; absent fields keep their defaults.
    pub fn from_json_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let p: Self = serde_json::from_reader(std::fs::File::open(path)?)?;
        p.validate()?;
        Ok(p)
    }
}

/// Integrated state of the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State {
    pub ps: f64,
    pub pm: f64,
    pub omega: f64,
    pub u: f64,
    pub integral: f64,
}

impl State {
    fn axpy(&self, k: f64, d: &State) -> State {
        State {
            ps: self.ps + k * d.ps,
            pm: self.pm + k * d.pm,
            omega: self.omega + k * d.omega,
            u: self.u + k * d.u,
            integral: self.integral + k * d.integral,
        }
    }

    fn is_finite(&self) -> bool {
        [self.ps, self.pm, self.omega, self.u, self.integral].iter().all(|v| v.is_finite())
    }
}

/// Flows at one instant, m^3/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flows {
    pub pump: f64,
    pub valve: f64,
    pub relief: f64,
    pub motor: f64,
    pub leakage: f64,
}

/// Relief flow: zero below `p_set - w`, linear above `p_set + w`, with a
/// quadratic blend between.
pub fn relief_flow(p: f64, p_set: f64, gain: f64, w: f64) -> f64 {
    let x = p - p_set;
    if x <= -w {
        0.0
    } else if x >= w {
        gain * x
    } else {
        gain * (x + w) * (x + w) / (4.0 * w)
    }
}

/// Turbulent orifice law `sign(dp) * sqrt(|dp|)`, smoothed over `w`.
pub fn orifice_flow(dp: f64, coefficient: f64, opening: f64, w: f64) -> f64 {
    coefficient * opening * dp / (dp * dp + w * w).sqrt().sqrt()
}

/// Plant model for one design.
#[derive(Debug, Clone)]
pub struct Transmission {
    pub design: TransmissionDesign,
    pub plant: PlantParams,
    pump_flow: f64,
    /// Motor displacement per radian, m^3/rad.
    motor_disp: f64,
    windup: (f64, f64),
}

impl Transmission {
    pub fn new(design: TransmissionDesign, plant: PlantParams) -> Self {
        let ki = design.integral_gain;
        Self {
            pump_flow: design.pump_size * CC * plant.pump_speed,
            motor_disp: design.motor_size * CC / (2.0 * PI),
            windup: (-0.1 / ki, 1.1 / ki),
            design,
            plant,
        }
    }

    pub fn pump_flow(&self) -> f64 {
        self.pump_flow
    }

    pub fn flows(&self, s: &State) -> Flows {
        let p = &self.plant;
        Flows {
            pump: self.pump_flow,
            valve: orifice_flow(s.ps - s.pm, p.valve_coefficient, s.u, p.smoothing_width),
            relief: relief_flow(s.ps, p.relief_pressure, p.relief_gain, p.smoothing_width),
            motor: self.motor_disp * s.omega,
            leakage: p.leakage * s.pm,
        }
    }

    /// State rates at time `t`.
    pub fn derivatives(&self, s: &State, t: f64) -> State {
        let p = &self.plant;
        let q = self.flows(s);
        let ki = self.design.integral_gain;
        let command = (ki * s.integral).clamp(0.0, 1.0);
        let error = (demand_speed(t) / RPM_PER_RAD_S - s.omega) / p.speed_scale;
        let (lo, hi) = self.windup;
        let integral = if (s.integral >= hi && error > 0.0) || (s.integral <= lo && error < 0.0) { 0.0 } else { error };
        State {
            ps: p.bulk_modulus / p.supply_volume * (q.pump - q.valve - q.relief),
            pm: p.bulk_modulus / p.motor_volume * (q.valve - q.motor - q.leakage),
            omega: (self.motor_disp * s.pm - load_torque(t) - p.friction * s.omega) / p.inertia,
            u: (command - s.u) / p.valve_time_constant,
            integral,
        }
    }

    /// One classical fourth-order Runge-Kutta step.
    pub fn step(&self, s: &State, t: f64, dt: f64) -> State {
        let k1 = self.derivatives(s, t);
        let k2 = self.derivatives(&s.axpy(dt / 2.0, &k1), t + dt / 2.0);
        let k3 = self.derivatives(&s.axpy(dt / 2.0, &k2), t + dt / 2.0);
        let k4 = self.derivatives(&s.axpy(dt, &k3), t + dt);
        let mut next = State {
            ps: s.ps + dt / 6.0 * (k1.ps + 2.0 * k2.ps + 2.0 * k3.ps + k4.ps),
            pm: s.pm + dt / 6.0 * (k1.pm + 2.0 * k2.pm + 2.0 * k3.pm + k4.pm),
            omega: s.omega + dt / 6.0 * (k1.omega + 2.0 * k2.omega + 2.0 * k3.omega + k4.omega),
            u: s.u + dt / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
            integral: s.integral + dt / 6.0 * (k1.integral + 2.0 * k2.integral + 2.0 * k3.integral + k4.integral),
        };
        next.integral = next.integral.clamp(self.windup.0, self.windup.1);
        next.u = next.u.clamp(0.0, 1.0);
        next
    }

    fn sample(&self, s: &State, t: f64) -> Sample {
        let q = self.flows(s);
        let d = self.derivatives(s, t);
        Sample {
            t,
            omega_desired_rpm: demand_speed(t),
            omega_actual_rpm: s.omega * RPM_PER_RAD_S,
            pump_flow: q.pump,
            valve_flow: q.valve,
            relief_flow: q.relief,
            motor_flow: q.motor,
            supply_pressure: s.ps,
            motor_pressure: s.pm,
            valve_opening: s.u,
            supply_pressure_rate: d.ps,
        }
    }

    /// Integrates from rest over `[0, duration]`, calling `visit` on the
    /// state at every grid time `i * dt`, `i = 0..=n`. Stops with
    /// [`Error::Diverged`] if the state stops being finite.
    pub fn run(&self, dt: f64, duration: f64, mut visit: impl FnMut(&Sample)) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite() && duration > 0.0) {
            return Err(Error::Invalid(format!("bad time grid dt = {dt}, duration = {duration}")));
        }
        let n = (duration / dt).round() as usize;
        let mut s = State::default();
        for i in 0..=n {
            let t = i as f64 * dt;
            visit(&self.sample(&s, t));
            if i == n {
                break;
            }
            s = self.step(&s, t, dt);
            if !s.is_finite() || s.ps.abs() > 1e10 || s.pm.abs() > 1e10 {
                return Err(Error::Diverged { t: t + dt });
            }
        }
        Ok(())
    }
}

/// Recorded values at one time step. Flows in m^3/s, pressures in Pa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub omega_desired_rpm: f64,
    pub omega_actual_rpm: f64,
    pub pump_flow: f64,
    pub valve_flow: f64,
    pub relief_flow: f64,
    pub motor_flow: f64,
    pub supply_pressure: f64,
    pub motor_pressure: f64,
    pub valve_opening: f64,
    pub supply_pressure_rate: f64,
}

#[derive(Debug, Clone)]
pub struct SimTrajectory {
    pub dt: f64,
    pub samples: Vec<Sample>,
    /// Set when integration diverged; samples stop at the last finite state.
    pub failed_at: Option<f64>,
}

impl SimTrajectory {
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        write_float_csv(
            path,
            &["t", "omega_desired_rpm", "omega_actual_rpm", "Qp_lpm", "Qrv_lpm", "Ps_bar", "Pm_bar", "u"],
            self.samples.iter().map(|s| {
                vec![
                    s.t,
                    s.omega_desired_rpm,
                    s.omega_actual_rpm,
                    s.pump_flow * LPM_PER_M3_S,
                    s.relief_flow * LPM_PER_M3_S,
                    s.supply_pressure / PA_PER_BAR,
                    s.motor_pressure / PA_PER_BAR,
                    s.valve_opening,
                ]
            }),
        )
    }

    /// Objective of the recorded run (see [`speed_error_sum`]).
    pub fn objective(&self) -> f64 {
        if self.failed_at.is_some() {
            return FAILURE_PENALTY;
        }
        speed_error_sum(
            self.samples.iter().map(|s| (s.omega_desired_rpm - s.omega_actual_rpm, s.relief_flow / s.pump_flow)),
        ) * (self.dt / REFERENCE_DT)
    }
}

/// Simulates `design` from rest and records every step.
pub fn simulate(design: TransmissionDesign, plant: &PlantParams, dt: f64, duration: f64) -> Result<SimTrajectory> {
    plant.validate()?;
    let tx = Transmission::new(design, plant.clone());
    let mut samples = Vec::with_capacity((duration / dt).round() as usize + 1);
    let failed_at = match tx.run(dt, duration, |s| samples.push(*s)) {
        Ok(()) => None,
        Err(Error::Diverged { t }) => Some(t),
        Err(e) => return Err(e),
    };
    Ok(SimTrajectory { dt, samples, failed_at })
}

/// `sum (speed error)^2 * (1 + relief flow / pump flow)` over the given
/// `(speed error in rpm, relief-to-pump flow ratio)` pairs.
pub fn speed_error_sum(steps: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    steps.into_iter().map(|(e, ratio)| e * e * (1.0 + ratio)).sum()
}

/// Speed-tracking objective over `(pump_size, motor_size, integral_gain)`.
///
/// The per-step sum is scaled by `dt / 1 ms`, so at the default step it is
/// the plain sum and finer steps stay comparable.
#[derive(Debug, Clone)]
pub struct TransmissionObjective {
    pub plant: PlantParams,
    pub dt: f64,
    pub duration: f64,
}

impl Default for TransmissionObjective {
    fn default() -> Self {
        Self { plant: PlantParams::default(), dt: DEFAULT_DT, duration: DEFAULT_DURATION }
    }
}

impl TransmissionObjective {
    pub fn new(plant: PlantParams) -> Self {
        Self { plant, ..Default::default() }
    }

    /// Pump 10..500 and motor 50..800 cc/rev in steps of 5; gain 0.01..50 in steps of 0.01.
    pub fn space() -> SearchSpace {
        let (p, m, g) =
            (TransmissionDesign::PUMP_RANGE, TransmissionDesign::MOTOR_RANGE, TransmissionDesign::GAIN_RANGE);
        SearchSpace::from_bounds(&[(p.0, p.1, 5.0), (m.0, m.1, 5.0), (g.0, g.1, 0.01)]).expect("static bounds")
    }

    pub fn evaluate_design(&self, design: TransmissionDesign) -> Result<Evaluation> {
        self.plant.validate()?;
        let tx = Transmission::new(design, self.plant.clone());
        let qp = tx.pump_flow();
        if qp.is_nan() || qp <= 0.0 {
            return Err(Error::Invalid(format!("pump flow {qp} must be positive")));
        }
        let mut sum = 0.0;
        let outcome = tx.run(self.dt, self.duration, |s| {
            let e = s.omega_desired_rpm - s.omega_actual_rpm;
            sum += e * e * (1.0 + s.relief_flow / qp);
        });
        match outcome {
            Ok(()) if sum.is_finite() => Ok(Evaluation::feasible(sum * (self.dt / REFERENCE_DT))),
            Ok(()) | Err(Error::Diverged { .. }) => Ok(Evaluation::infeasible(FAILURE_PENALTY)),
            Err(e) => Err(e),
        }
    }
}

impl Objective for TransmissionObjective {
    fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        self.evaluate_design(TransmissionDesign::from_design(x)?)
    }
}
