//! Fixed-step simulation of the clutch-gearbox driveline with automatic
//! mode switching.
//!
//! The state advances with classical RK4 inside the active drive mode.
//! Mode changes are evaluated once per step, after integration:
//!
//! | from         | to           | when                                                         |
//! |--------------|--------------|--------------------------------------------------------------|
//! | FirstGear    | Slipping     | the one-way element torque turns negative                    |
//! | Slipping     | LockedSecond | slip within tolerance and hold torque within static capacity |
//! | LockedSecond | Slipping     | hold torque exceeds static capacity                          |
//! | Slipping     | FirstGear    | one-way speed condition reached and element torque ≥ 0       |
//!
//! Locking and one-way re-engagement are inelastic: speeds are merged with
//! conserved angular momentum and the kinetic energy lost in the merge is
//! booked as dissipation, so the energy ledger closes.

use std::io::Write;

use crate::clutch::{ClutchCurve, ClutchParams};
use crate::driveline::{
    one_way_element_torque, solve_first_gear, solve_locked, solve_second_gear_slipping,
    Configuration, DrivelineParams, TorqueSet,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DriveMode {
    FirstGear,
    Slipping,
    LockedSecond,
}

impl DriveMode {
    pub fn label(self) -> &'static str {
        match self {
            DriveMode::FirstGear => "FirstGear",
            DriveMode::Slipping => "Slipping",
            DriveMode::LockedSecond => "LockedSecond",
        }
    }
}

impl std::fmt::Display for DriveMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for DriveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "FirstGear" => Ok(DriveMode::FirstGear),
            "Slipping" => Ok(DriveMode::Slipping),
            "LockedSecond" => Ok(DriveMode::LockedSecond),
            other => Err(Error::Domain(format!("unknown drive mode {other:?}"))),
        }
    }
}

/// Piecewise-constant signal. Each segment `(start, value)` holds from its
/// start time until the next segment begins.
#[derive(Debug, Clone, PartialEq)]
pub struct TorqueProfile {
    segments: Vec<(f64, f64)>,
}

impl TorqueProfile {
    pub fn constant(value: f64) -> Self {
        Self {
            segments: vec![(0.0, value)],
        }
    }

    pub fn new(segments: Vec<(f64, f64)>) -> Result<Self> {
        let Some(first) = segments.first() else {
            return Err(Error::InvalidParams("torque profile has no segments".into()));
        };
        if first.0 != 0.0 {
            return Err(Error::InvalidParams(format!(
                "torque profile must start at t = 0, starts at {}",
                first.0
            )));
        }
        if segments.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidParams("torque profile contains non-finite values".into()));
        }
        if segments.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidParams(
                "torque profile start times must be strictly increasing".into(),
            ));
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[(f64, f64)] {
        &self.segments
    }

    pub fn at(&self, t: f64) -> f64 {
        let idx = self.segments.partition_point(|&(start, _)| start <= t);
        self.segments[idx.saturating_sub(1)].1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub input_torque: TorqueProfile,
    pub output_torque: TorqueProfile,
    pub initial_speed_input: f64,
    /// s; zero yields an empty trace.
    pub duration: f64,
}

impl Scenario {
    pub fn constant(input_torque: f64, output_torque: f64, duration: f64) -> Self {
        Self {
            input_torque: TorqueProfile::constant(input_torque),
            output_torque: TorqueProfile::constant(output_torque),
            initial_speed_input: 0.0,
            duration,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "duration must be >= 0, got {}",
                self.duration
            )));
        }
        if !self.initial_speed_input.is_finite() {
            return Err(Error::InvalidParams("initial speed must be finite".into()));
        }
        Ok(())
    }

    fn torques(&self, t: f64) -> (f64, f64) {
        (self.input_torque.at(t), self.output_torque.at(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// s
    pub time_step: f64,
    /// rad/s
    pub lock_slip_tolerance: f64,
    /// Steps after a transition during which no further transition may fire.
    pub mode_hold_steps: u32,
    /// rad/s; any faster shaft is treated as divergence.
    pub max_speed: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            time_step: 1e-4,
            lock_slip_tolerance: 0.5,
            mode_hold_steps: 10,
            max_speed: 1500.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.time_step > 0.0 && self.time_step.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "time_step must be > 0, got {}",
                self.time_step
            )));
        }
        if !(self.lock_slip_tolerance > 0.0) {
            return Err(Error::InvalidParams(format!(
                "lock_slip_tolerance must be > 0, got {}",
                self.lock_slip_tolerance
            )));
        }
        if self.mode_hold_steps < 1 {
            return Err(Error::InvalidParams("mode_hold_steps must be >= 1".into()));
        }
        if !(self.max_speed > 0.0) {
            return Err(Error::InvalidParams(format!(
                "max_speed must be > 0, got {}",
                self.max_speed
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub step_index: u64,
    pub t: f64,
    pub omega_input: f64,
    pub omega_driven: f64,
    pub mode: DriveMode,
    /// Remaining steps with transitions suppressed.
    pub hold_steps: u32,
    pub dissipated_energy: f64,
    pub input_work: f64,
    pub output_work: f64,
}

impl SimState {
    pub fn kinetic_energy(&self, drive: &DrivelineParams) -> f64 {
        0.5 * drive.inertia_input * self.omega_input.powi(2)
            + 0.5 * drive.inertia_second * self.omega_driven.powi(2)
    }
}

/// Accelerations and torques of a state in its current mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinetics {
    pub alpha_input: f64,
    pub alpha_driven: f64,
    /// Torque the centrifugal clutch delivers from the input shaft to the driven shaft.
    pub clutch_torque: f64,
    pub one_way_torque: f64,
    input_power: f64,
    output_power: f64,
    dissipated_power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub time: f64,
    pub from: DriveMode,
    pub to: DriveMode,
    pub omega_input: f64,
    pub omega_driven: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub omega_input: f64,
    pub omega_driven: f64,
    pub alpha_input: f64,
    pub alpha_driven: f64,
    pub clutch_torque: f64,
    pub one_way_torque: f64,
    pub mode: DriveMode,
    pub dissipated_energy: f64,
}

pub const TRACE_HEADER: &str =
    "t,omega_input,omega_driven,alpha_input,alpha_driven,T_centrifugal,T_one_way,mode,E_dissipated";

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub configuration: Configuration,
    pub rows: Vec<TraceRow>,
    pub transitions: Vec<Transition>,
    pub initial_kinetic_energy: f64,
    pub final_kinetic_energy: f64,
    pub input_work: f64,
    pub output_work: f64,
    pub dissipated_energy: f64,
}

impl SimTrace {
    /// `W_in − W_out − ΔKE − E_diss`.
    pub fn energy_imbalance(&self) -> f64 {
        self.input_work
            - self.output_work
            - (self.final_kinetic_energy - self.initial_kinetic_energy)
            - self.dissipated_energy
    }

    pub fn mode_sequence(&self) -> Vec<DriveMode> {
        let mut seq: Vec<DriveMode> = Vec::new();
        if let Some(first) = self.rows.first() {
            seq.push(self.transitions.first().map_or(first.mode, |t| t.from));
        }
        seq.extend(self.transitions.iter().map(|t| t.to));
        seq
    }

    pub fn peak_clutch_torque(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.clutch_torque.abs())
            .fold(0.0, f64::max)
    }

    /// Writes every `decimation`-th row; the final row is always kept.
    pub fn write_csv<W: Write>(&self, mut out: W, decimation: usize) -> std::io::Result<()> {
        let k = decimation.max(1);
        writeln!(out, "{TRACE_HEADER}")?;
        let n = self.rows.len();
        for (i, r) in self.rows.iter().enumerate() {
            if (i + 1) % k != 0 && i + 1 != n {
                continue;
            }
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.t,
                r.omega_input,
                r.omega_driven,
                r.alpha_input,
                r.alpha_driven,
                r.clutch_torque,
                r.one_way_torque,
                r.mode,
                r.dissipated_energy
            )?;
        }
        Ok(())
    }
}

/// Outcome of a full-engagement measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engagement {
    /// Input speed at the first lock-up, rad/s.
    Engaged(f64),
    NotEngaged,
}

impl Engagement {
    pub fn speed(self) -> Option<f64> {
        match self {
            Engagement::Engaged(w) => Some(w),
            Engagement::NotEngaged => None,
        }
    }
}

/// A validated clutch, driveline, scenario and step configuration.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    clutch: ClutchParams,
    curve: ClutchCurve,
    drive: DrivelineParams,
    scenario: &'a Scenario,
    cfg: SimConfig,
}

type Deriv = [f64; 5];

impl<'a> Simulator<'a> {
    pub fn new(
        clutch: &ClutchParams,
        drive: &DrivelineParams,
        scenario: &'a Scenario,
        cfg: &SimConfig,
    ) -> Result<Self> {
        clutch.validate()?;
        drive.validate()?;
        scenario.validate()?;
        cfg.validate()?;
        Ok(Self {
            clutch: *clutch,
            curve: ClutchCurve::new(clutch)?,
            drive: *drive,
            scenario,
            cfg: *cfg,
        })
    }

    pub fn clutch(&self) -> &ClutchParams {
        &self.clutch
    }

    pub fn initial_state(&self) -> SimState {
        let w1 = self.scenario.initial_speed_input;
        SimState {
            step_index: 0,
            t: 0.0,
            omega_input: w1,
            omega_driven: self.drive.step_ratio() * w1,
            mode: DriveMode::FirstGear,
            hold_steps: 0,
            dissipated_energy: 0.0,
            input_work: 0.0,
            output_work: 0.0,
        }
    }

    /// Number of steps needed to cover the scenario duration.
    pub fn step_count(&self) -> u64 {
        let n = self.scenario.duration / self.cfg.time_step;
        (n - 1e-9).ceil().max(0.0) as u64
    }

    /// Shaft speed that actuates the shoes: the carrier sits on the input
    /// shaft in configuration A and on the driven shaft in B.
    fn actuation_speed(&self, w1: f64, w2: f64) -> f64 {
        match self.drive.configuration {
            Configuration::A => w1,
            Configuration::B => w2,
        }
    }

    fn locked_hold(&self, tin: f64, tout: f64) -> Result<(f64, f64)> {
        let t = TorqueSet {
            input_torque: tin,
            output_torque: tout,
            centrifugal_torque: 0.0,
        };
        let l = solve_locked(&t, &self.drive)?;
        // physical torque onto the driven shaft
        Ok((l.alpha, self.drive.configuration.clutch_sign() * l.hold_torque))
    }

    /// Clutch torque onto the driven shaft while slipping; it opposes slip.
    /// At zero slip it takes the direction of the torque a lock would need.
    fn slip_torque(&self, t: f64, w1: f64, w2: f64) -> Result<f64> {
        let magnitude = self.curve.torque(self.actuation_speed(w1, w2));
        if magnitude == 0.0 {
            return Ok(0.0);
        }
        let slip = w1 - w2;
        let dir = if slip != 0.0 {
            slip.signum()
        } else {
            let (tin, tout) = self.scenario.torques(t);
            let (_, hold) = self.locked_hold(tin, tout)?;
            if hold == 0.0 {
                0.0
            } else {
                hold.signum()
            }
        };
        Ok(dir * magnitude)
    }

    pub fn kinetics(&self, t: f64, w1: f64, w2: f64, mode: DriveMode) -> Result<Kinetics> {
        let (tin, tout) = self.scenario.torques(t);
        let load = tout / self.drive.ratio_second;
        let sign = self.drive.configuration.clutch_sign();
        let (a1, a2, tau, one_way) = match mode {
            DriveMode::FirstGear | DriveMode::Slipping => {
                let tau = self.slip_torque(t, w1, w2)?;
                let set = TorqueSet {
                    input_torque: tin,
                    output_torque: tout,
                    centrifugal_torque: sign * tau,
                };
                let sol = if mode == DriveMode::FirstGear {
                    solve_first_gear(&set, &self.drive)?
                } else {
                    solve_second_gear_slipping(&set, &self.drive)?
                };
                (sol.alpha_input, sol.alpha_second, tau, sol.one_way_torque)
            }
            DriveMode::LockedSecond => {
                let (alpha, hold) = self.locked_hold(tin, tout)?;
                (alpha, alpha, hold, 0.0)
            }
        };
        let dissipated_power = if mode == DriveMode::LockedSecond {
            0.0
        } else {
            tau * (w1 - w2)
        };
        Ok(Kinetics {
            alpha_input: a1,
            alpha_driven: a2,
            clutch_torque: tau,
            one_way_torque: one_way,
            input_power: tin * w1,
            output_power: load * w2,
            dissipated_power,
        })
    }

    fn deriv(&self, t: f64, y: &Deriv, mode: DriveMode) -> Result<Deriv> {
        let k = self.kinetics(t, y[0], y[1], mode)?;
        Ok([
            k.alpha_input,
            k.alpha_driven,
            k.input_power,
            k.output_power,
            k.dissipated_power,
        ])
    }

    fn rk4(&self, t: f64, y: &Deriv, mode: DriveMode) -> Result<Deriv> {
        let h = self.cfg.time_step;
        let add = |a: &Deriv, k: &Deriv, s: f64| -> Deriv {
            let mut out = *a;
            for i in 0..5 {
                out[i] += s * k[i];
            }
            out
        };
        let k1 = self.deriv(t, y, mode)?;
        let k2 = self.deriv(t + 0.5 * h, &add(y, &k1, 0.5 * h), mode)?;
        let k3 = self.deriv(t + 0.5 * h, &add(y, &k2, 0.5 * h), mode)?;
        let k4 = self.deriv(t + h, &add(y, &k3, h), mode)?;
        let mut out = *y;
        for i in 0..5 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        Ok(out)
    }

    /// Advances one step without the divergence guard.
    fn advance(&self, state: &SimState) -> Result<(SimState, Option<Transition>)> {
        let y0 = [
            state.omega_input,
            state.omega_driven,
            state.input_work,
            state.output_work,
            state.dissipated_energy,
        ];
        let y = self.rk4(state.t, &y0, state.mode)?;
        let step_index = state.step_index + 1;
        let mut next = SimState {
            step_index,
            t: step_index as f64 * self.cfg.time_step,
            omega_input: y[0],
            omega_driven: y[1],
            mode: state.mode,
            hold_steps: state.hold_steps.saturating_sub(1),
            dissipated_energy: y[4],
            input_work: y[2],
            output_work: y[3],
        };
        match next.mode {
            DriveMode::FirstGear => next.omega_driven = self.drive.step_ratio() * next.omega_input,
            DriveMode::LockedSecond => next.omega_driven = next.omega_input,
            DriveMode::Slipping => {}
        }
        if next.omega_input.is_nan() || next.omega_driven.is_nan() {
            return Ok((next, None));
        }
        let transition = if state.hold_steps > 0 {
            None
        } else {
            self.apply_transitions(&mut next)?
        };
        Ok((next, transition))
    }

    fn apply_transitions(&self, s: &mut SimState) -> Result<Option<Transition>> {
        let (tin, tout) = self.scenario.torques(s.t);
        let d = &self.drive;
        let from = s.mode;
        let to = match s.mode {
            DriveMode::FirstGear => {
                let set = self.first_gear_set(s.t, s.omega_input, s.omega_driven)?;
                let sol = solve_first_gear(&set, d)?;
                (one_way_element_torque(&set, d, &sol) < 0.0).then_some(DriveMode::Slipping)
            }
            DriveMode::Slipping => {
                let rho = d.step_ratio();
                if (s.omega_input - s.omega_driven).abs() <= self.cfg.lock_slip_tolerance {
                    let merged = (d.inertia_input * s.omega_input + d.inertia_second * s.omega_driven)
                        / (d.inertia_input + d.inertia_second);
                    let (_, hold) = self.locked_hold(tin, tout)?;
                    if hold.abs() <= self.curve.capacity(merged) {
                        self.merge(s, merged, merged);
                        Some(DriveMode::LockedSecond)
                    } else {
                        None
                    }
                } else if rho * s.omega_input >= s.omega_driven {
                    let w1 = (d.inertia_input * s.omega_input + rho * d.inertia_second * s.omega_driven)
                        / (d.inertia_input + rho * rho * d.inertia_second);
                    let set = self.first_gear_set(s.t, w1, rho * w1)?;
                    let sol = solve_first_gear(&set, d)?;
                    if one_way_element_torque(&set, d, &sol) >= 0.0 {
                        self.merge(s, w1, rho * w1);
                        Some(DriveMode::FirstGear)
                    } else {
                        None
                    }
                } else {
                    None
                }
            }
            DriveMode::LockedSecond => {
                let (_, hold) = self.locked_hold(tin, tout)?;
                (hold.abs() > self.curve.capacity(s.omega_input)).then_some(DriveMode::Slipping)
            }
        };
        Ok(to.map(|to| {
            s.mode = to;
            s.hold_steps = self.cfg.mode_hold_steps;
            Transition {
                time: s.t,
                from,
                to,
                omega_input: s.omega_input,
                omega_driven: s.omega_driven,
            }
        }))
    }

    fn first_gear_set(&self, t: f64, w1: f64, w2: f64) -> Result<TorqueSet> {
        let (tin, tout) = self.scenario.torques(t);
        let tau = self.slip_torque(t, w1, w2)?;
        Ok(TorqueSet {
            input_torque: tin,
            output_torque: tout,
            centrifugal_torque: self.drive.configuration.clutch_sign() * tau,
        })
    }

    /// Inelastic speed merge; the lost kinetic energy goes to dissipation.
    fn merge(&self, s: &mut SimState, w1: f64, w2: f64) {
        let before = s.kinetic_energy(&self.drive);
        s.omega_input = w1;
        s.omega_driven = w2;
        s.dissipated_energy += (before - s.kinetic_energy(&self.drive)).max(0.0);
    }

    fn check(&self, s: &SimState) -> Result<()> {
        let finite = s.omega_input.is_finite()
            && s.omega_driven.is_finite()
            && s.dissipated_energy.is_finite()
            && s.input_work.is_finite()
            && s.output_work.is_finite();
        if !finite {
            return Err(Error::Integration {
                time: s.t,
                reason: "non-finite state".into(),
            });
        }
        let peak = s.omega_input.abs().max(s.omega_driven.abs());
        if peak > self.cfg.max_speed {
            return Err(Error::Integration {
                time: s.t,
                reason: format!(
                    "shaft speed {peak} rad/s exceeds max_speed {} rad/s",
                    self.cfg.max_speed
                ),
            });
        }
        Ok(())
    }

    /// One fixed step followed by the mode-transition rules.
    pub fn step(&self, state: &SimState) -> Result<(SimState, Option<Transition>)> {
        let (next, tr) = self.advance(state)?;
        self.check(&next)?;
        Ok((next, tr))
    }

    fn row(&self, s: &SimState) -> Result<TraceRow> {
        let k = self.kinetics(s.t, s.omega_input, s.omega_driven, s.mode)?;
        Ok(TraceRow {
            t: s.t,
            omega_input: s.omega_input,
            omega_driven: s.omega_driven,
            alpha_input: k.alpha_input,
            alpha_driven: k.alpha_driven,
            clutch_torque: k.clutch_torque,
            one_way_torque: k.one_way_torque,
            mode: s.mode,
            dissipated_energy: s.dissipated_energy,
        })
    }

    pub fn run(&self) -> Result<SimTrace> {
        let mut state = self.initial_state();
        let n = self.step_count();
        let initial_kinetic_energy = state.kinetic_energy(&self.drive);
        let mut rows = Vec::with_capacity(n as usize);
        let mut transitions = Vec::new();
        for _ in 0..n {
            let (next, tr) = self.step(&state)?;
            transitions.extend(tr);
            rows.push(self.row(&next)?);
            state = next;
        }
        Ok(SimTrace {
            configuration: self.drive.configuration,
            rows,
            transitions,
            initial_kinetic_energy,
            final_kinetic_energy: state.kinetic_energy(&self.drive),
            input_work: state.input_work,
            output_work: state.output_work,
            dissipated_energy: state.dissipated_energy,
        })
    }

    /// Input speed at the first Slipping→LockedSecond transition.
    pub fn full_engagement_speed(&self) -> Result<Engagement> {
        if self.curve.onset() > self.cfg.max_speed {
            return Ok(Engagement::NotEngaged);
        }
        let mut state = self.initial_state();
        for _ in 0..self.step_count() {
            let (next, tr) = self.advance(&state)?;
            if let Some(tr) = tr {
                if tr.from == DriveMode::Slipping && tr.to == DriveMode::LockedSecond {
                    return Ok(Engagement::Engaged(next.omega_input));
                }
            }
            if next.omega_input.abs().max(next.omega_driven.abs()) > self.cfg.max_speed {
                return Ok(Engagement::NotEngaged);
            }
            self.check(&next)?;
            state = next;
        }
        Ok(Engagement::NotEngaged)
    }
}

pub fn run_scenario(
    scenario: &Scenario,
    clutch: &ClutchParams,
    drive: &DrivelineParams,
    cfg: &SimConfig,
) -> Result<SimTrace> {
    Simulator::new(clutch, drive, scenario, cfg)?.run()
}

pub fn full_engagement_speed(
    clutch: &ClutchParams,
    drive: &DrivelineParams,
    scenario: &Scenario,
    cfg: &SimConfig,
) -> Result<Engagement> {
    Simulator::new(clutch, drive, scenario, cfg)?.full_engagement_speed()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn setup(c: Configuration) -> (ClutchParams, DrivelineParams, SimConfig) {
        let cfg = Config::default();
        (
            cfg.clutch_params(),
            cfg.driveline_params().with_configuration(c),
            cfg.sim_config(),
        )
    }

    #[test]
    fn zero_torque_from_rest_stays_at_rest() {
        let (clutch, drive, cfg) = setup(Configuration::A);
        let scn = Scenario::constant(0.0, 0.0, 0.5);
        let trace = run_scenario(&scn, &clutch, &drive, &cfg).unwrap();
        let last = trace.rows.last().unwrap();
        assert_eq!(last.omega_input, 0.0);
        assert_eq!(last.omega_driven, 0.0);
        assert_eq!(trace.dissipated_energy, 0.0);
        assert_eq!(trace.mode_sequence(), vec![DriveMode::FirstGear]);
    }

    #[test]
    fn zero_duration_gives_empty_trace() {
        let (clutch, drive, cfg) = setup(Configuration::A);
        let scn = Scenario::constant(40.0, 30.0, 0.0);
        let trace = run_scenario(&scn, &clutch, &drive, &cfg).unwrap();
        assert!(trace.rows.is_empty());
        let mut buf = Vec::new();
        trace.write_csv(&mut buf, 1).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{TRACE_HEADER}\n"));
    }

    #[test]
    fn first_gear_acceleration_matches_closed_form() {
        let (clutch, drive, cfg) = setup(Configuration::A);
        let scn = Scenario::constant(40.0, 30.0, 1.0);
        let trace = run_scenario(&scn, &clutch, &drive, &cfg).unwrap();
        let rho = drive.step_ratio();
        let alpha = (40.0 - 30.0 / drive.ratio_first)
            / (drive.inertia_input + rho * rho * drive.inertia_second);
        let w = trace.rows.last().unwrap().omega_input;
        assert!((w - alpha).abs() < 1e-9 * alpha, "{w} vs {alpha}");
    }

    #[test]
    fn shift_produces_lock_with_equal_speeds() {
        let cfg = Config::default();
        let (clutch, drive, sim) = setup(Configuration::A);
        let trace = run_scenario(&cfg.shift_scenario(), &clutch, &drive, &sim).unwrap();
        let seq = trace.mode_sequence();
        assert_eq!(&seq[..3], &[DriveMode::FirstGear, DriveMode::Slipping, DriveMode::LockedSecond]);
        for r in trace.rows.iter().filter(|r| r.mode == DriveMode::LockedSecond) {
            assert_eq!(r.omega_input, r.omega_driven);
        }
    }

    #[test]
    fn dissipation_is_monotone_and_energy_closes() {
        let cfg = Config::default();
        for c in [Configuration::A, Configuration::B] {
            let (clutch, drive, sim) = setup(c);
            let trace = run_scenario(&cfg.shift_scenario(), &clutch, &drive, &sim).unwrap();
            for w in trace.rows.windows(2) {
                assert!(w[1].dissipated_energy >= w[0].dissipated_energy);
            }
            assert!(trace.energy_imbalance().abs() <= 1e-6 * trace.input_work);
        }
    }

    #[test]
    fn hold_steps_block_immediate_reversal() {
        let cfg = Config::default();
        let (clutch, drive, sim) = setup(Configuration::A);
        let trace = run_scenario(&cfg.shift_scenario(), &clutch, &drive, &sim).unwrap();
        let min_gap = f64::from(sim.mode_hold_steps) * sim.time_step;
        for w in trace.transitions.windows(2) {
            assert!(w[1].time - w[0].time >= min_gap - 1e-12);
        }
    }

    #[test]
    fn identical_runs_are_identical() {
        let cfg = Config::default();
        let (clutch, drive, sim) = setup(Configuration::B);
        let a = run_scenario(&cfg.shift_scenario(), &clutch, &drive, &sim).unwrap();
        let b = run_scenario(&cfg.shift_scenario(), &clutch, &drive, &sim).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn halving_step_barely_moves_end_speeds() {
        let (clutch, drive, sim) = setup(Configuration::A);
        let scn = Scenario::constant(40.0, 30.0, 12.0);
        let coarse = run_scenario(&scn, &clutch, &drive, &sim).unwrap();
        let fine_cfg = SimConfig {
            time_step: sim.time_step / 2.0,
            mode_hold_steps: sim.mode_hold_steps * 2,
            ..sim
        };
        let fine = run_scenario(&scn, &clutch, &drive, &fine_cfg).unwrap();
        let (c, f) = (coarse.rows.last().unwrap(), fine.rows.last().unwrap());
        assert!((c.omega_input - f.omega_input).abs() < 1e-3 * f.omega_input.abs());
        assert!((c.omega_driven - f.omega_driven).abs() < 1e-3 * f.omega_driven.abs());
    }

    #[test]
    fn onset_above_max_speed_is_not_engaged() {
        let cfg = Config::default();
        let (clutch, drive, sim) = setup(Configuration::A);
        let heavy_spring = clutch.with_preload(1e6);
        let e = full_engagement_speed(&heavy_spring, &drive, &cfg.engagement_scenario(), &sim).unwrap();
        assert_eq!(e, Engagement::NotEngaged);
    }

    #[test]
    fn engagement_speed_is_above_onset() {
        let cfg = Config::default();
        let (clutch, drive, sim) = setup(Configuration::A);
        let e = full_engagement_speed(&clutch, &drive, &cfg.engagement_scenario(), &sim).unwrap();
        let w = e.speed().expect("default design engages");
        assert!(w > crate::clutch::onset_speed(&clutch).unwrap());
    }

    #[test]
    fn runaway_is_reported() {
        let (clutch, drive, _) = setup(Configuration::A);
        let sim = SimConfig {
            max_speed: 50.0,
            ..SimConfig::default()
        };
        let scn = Scenario::constant(40.0, 0.0, 10.0);
        let err = run_scenario(&scn, &clutch, &drive, &sim).unwrap_err();
        assert!(matches!(err, Error::Integration { .. }));
    }

    #[test]
    fn torque_profile_is_piecewise_constant() {
        let p = TorqueProfile::new(vec![(0.0, 1.0), (2.0, 5.0)]).unwrap();
        assert_eq!(p.at(0.0), 1.0);
        assert_eq!(p.at(1.999), 1.0);
        assert_eq!(p.at(2.0), 5.0);
        assert_eq!(p.at(100.0), 5.0);
    }
}
