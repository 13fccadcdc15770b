//! Rigid-body equations of the two-speed gearbox.
//!
//! Shaft 1 carries the engine input, shaft 2 drives the output through the
//! second-gear ratio. The one-way clutch links shaft 1 to shaft 2 through the
//! first-gear path (`ω_2 = ω_1·n_2/n_1` while it drives) and the centrifugal
//! clutch couples the two shafts directly.
//!
//! In configuration A the centrifugal torque enters as `−T_cf` on shaft 1 and
//! `+T_cf` on shaft 2; configuration B mounts the clutch the other way round
//! and the signs flip. All solvers take `T_cf` in the sign convention of the
//! selected configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Configuration {
    /// Forward pairing: shoe carrier on the input shaft, drum on the driven shaft.
    A,
    /// Reverse pairing: shoe carrier on the driven shaft, drum on the input shaft.
    B,
}

impl Configuration {
    /// Sign of `T_cf` on shaft 2 (and the opposite on shaft 1).
    pub fn clutch_sign(self) -> f64 {
        match self {
            Configuration::A => 1.0,
            Configuration::B => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Configuration::A => "A",
            Configuration::B => "B",
        }
    }
}

impl std::str::FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Configuration::A),
            "B" | "b" => Ok(Configuration::B),
            other => Err(Error::Domain(format!(
                "configuration must be A or B, got {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Configuration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivelineParams {
    pub ratio_first: f64,
    pub ratio_second: f64,
    /// kg·m²
    pub inertia_input: f64,
    /// kg·m²
    pub inertia_second: f64,
    pub configuration: Configuration,
}

impl DrivelineParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.ratio_first > self.ratio_second && self.ratio_second > 0.0)
            || !self.ratio_first.is_finite()
        {
            return Err(Error::InvalidParams(format!(
                "gear ratios must satisfy ratio_first > ratio_second > 0, got {} and {}",
                self.ratio_first, self.ratio_second
            )));
        }
        if !(self.inertia_input > 0.0 && self.inertia_input.is_finite()) {
            return Err(Error::Domain(format!(
                "inertia_input must be > 0, got {}",
                self.inertia_input
            )));
        }
        if !(self.inertia_second > 0.0 && self.inertia_second.is_finite()) {
            return Err(Error::Domain(format!(
                "inertia_second must be > 0, got {}",
                self.inertia_second
            )));
        }
        Ok(())
    }

    /// `n_2 / n_1`, the driven-to-input speed ratio in first gear.
    pub fn step_ratio(&self) -> f64 {
        self.ratio_second / self.ratio_first
    }

    pub fn with_configuration(mut self, configuration: Configuration) -> Self {
        self.configuration = configuration;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TorqueSet {
    pub input_torque: f64,
    pub output_torque: f64,
    pub centrifugal_torque: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSolution {
    pub alpha_input: f64,
    pub alpha_second: f64,
    /// `T_one-way` as it appears in the first-gear equations; zero when freewheeling.
    pub one_way_torque: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockedSolution {
    /// Common acceleration of both shafts.
    pub alpha: f64,
    /// Clutch torque (in the configuration's sign convention) that keeps the shafts locked.
    pub hold_torque: f64,
}

/// First gear, one-way clutch driving.
///
/// Substituting `α_2 = ρ·α_1` (`ρ = n_2/n_1`) into the shaft-2 equation and
/// eliminating `T_one-way` gives
/// `(I_1 + ρ²·I_2)·α_1 = T_in − T_out/n_1 − s·T_cf·(1 − ρ)`.
pub fn solve_first_gear(t: &TorqueSet, p: &DrivelineParams) -> Result<DriveSolution> {
    p.validate()?;
    let rho = p.step_ratio();
    let tcf = p.configuration.clutch_sign() * t.centrifugal_torque;
    let alpha_input = (t.input_torque - t.output_torque / p.ratio_first - tcf * (1.0 - rho))
        / (p.inertia_input + rho * rho * p.inertia_second);
    let alpha_second = alpha_input * rho;
    Ok(DriveSolution {
        alpha_input,
        alpha_second,
        one_way_torque: p.inertia_second * alpha_second - tcf,
    })
}

/// Second gear while the centrifugal clutch slips; the one-way clutch freewheels.
pub fn solve_second_gear_slipping(t: &TorqueSet, p: &DrivelineParams) -> Result<DriveSolution> {
    p.validate()?;
    let tcf = p.configuration.clutch_sign() * t.centrifugal_torque;
    Ok(DriveSolution {
        alpha_input: (t.input_torque - tcf) / p.inertia_input,
        alpha_second: (tcf - t.output_torque / p.ratio_second) / p.inertia_second,
        one_way_torque: 0.0,
    })
}

/// Second gear with the centrifugal clutch locked (`ω_1 = ω_2`).
///
/// `t.centrifugal_torque` is ignored; the clutch carries whatever torque the
/// lock requires.
pub fn solve_locked(t: &TorqueSet, p: &DrivelineParams) -> Result<LockedSolution> {
    p.validate()?;
    let load = t.output_torque / p.ratio_second;
    let alpha = (t.input_torque - load) / (p.inertia_input + p.inertia_second);
    Ok(LockedSolution {
        alpha,
        hold_torque: p.configuration.clutch_sign() * (p.inertia_second * alpha + load),
    })
}

/// Torque carried by the one-way element itself in first gear.
///
/// The `T_one-way` of the first-gear equations is the element torque net of
/// the output load reflected onto shaft 2 (`T_out/n_2`). The element can only
/// push, so it freewheels exactly when this value would turn negative.
pub fn one_way_element_torque(t: &TorqueSet, p: &DrivelineParams, first_gear: &DriveSolution) -> f64 {
    first_gear.one_way_torque + t.output_torque / p.ratio_second
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn table1(c: Configuration) -> DrivelineParams {
        Config::default().driveline_params().with_configuration(c)
    }

    fn ts(tin: f64, tout: f64, tcf: f64) -> TorqueSet {
        TorqueSet {
            input_torque: tin,
            output_torque: tout,
            centrifugal_torque: tcf,
        }
    }

    #[test]
    fn first_gear_reference_acceleration() {
        let p = table1(Configuration::A);
        let s = solve_first_gear(&ts(100.0, 200.0, 0.0), &p).unwrap();
        assert!((s.alpha_input - 72.2).abs() < 0.05, "{}", s.alpha_input);
        assert!((s.one_way_torque - p.inertia_second * s.alpha_second).abs() < 1e-12);
        assert_eq!(s.alpha_second, s.alpha_input * p.step_ratio());
    }

    #[test]
    fn first_gear_static_balance() {
        let p = table1(Configuration::A);
        let s = solve_first_gear(&ts(200.0 / p.ratio_first, 200.0, 0.0), &p).unwrap();
        assert!(s.alpha_input.abs() < 1e-12);
        assert!(s.alpha_second.abs() < 1e-12);
        assert!(s.one_way_torque.abs() < 1e-12);
    }

    #[test]
    fn first_gear_configurations_coincide_without_clutch_torque() {
        let a = solve_first_gear(&ts(100.0, 200.0, 0.0), &table1(Configuration::A)).unwrap();
        let b = solve_first_gear(&ts(100.0, 200.0, 0.0), &table1(Configuration::B)).unwrap();
        assert_eq!(a, b);
        let a = solve_first_gear(&ts(100.0, 200.0, 10.0), &table1(Configuration::A)).unwrap();
        let b = solve_first_gear(&ts(100.0, 200.0, 10.0), &table1(Configuration::B)).unwrap();
        assert!(a.alpha_input < b.alpha_input);
    }

    #[test]
    fn slipping_reference_values() {
        let p = table1(Configuration::A);
        let s = solve_second_gear_slipping(&ts(50.0, 200.0, 0.0), &p).unwrap();
        assert!((s.alpha_input - 106.8).abs() < 0.05);
        assert!((s.alpha_second + 200.0 / p.ratio_second / p.inertia_second).abs() < 1e-12);
        assert_eq!(s.one_way_torque, 0.0);

        let tcf = 200.0 / p.ratio_second;
        let s = solve_second_gear_slipping(&ts(tcf, 200.0, tcf), &p).unwrap();
        assert!(s.alpha_input.abs() < 1e-12 && s.alpha_second.abs() < 1e-12);

        let pb = table1(Configuration::B);
        let s = solve_second_gear_slipping(&ts(50.0, 200.0, 5.0), &pb).unwrap();
        assert!(s.alpha_input > 50.0 / pb.inertia_input);
    }

    #[test]
    fn locked_reference_values() {
        let p = table1(Configuration::A);
        let l = solve_locked(&ts(100.0, 200.0, 0.0), &p).unwrap();
        assert!((l.alpha - 46.4).abs() < 0.05, "{}", l.alpha);
        let l = solve_locked(&ts(200.0 / p.ratio_second, 200.0, 0.0), &p).unwrap();
        assert!(l.alpha.abs() < 1e-12);
        let la = solve_locked(&ts(100.0, 200.0, 3.0), &table1(Configuration::A)).unwrap();
        let lb = solve_locked(&ts(100.0, 200.0, -7.0), &table1(Configuration::B)).unwrap();
        assert_eq!(la.alpha, lb.alpha);
        assert_eq!(la.hold_torque, -lb.hold_torque);
    }

    #[test]
    fn locked_is_slipping_at_hold_torque() {
        for c in [Configuration::A, Configuration::B] {
            let p = table1(c);
            let l = solve_locked(&ts(80.0, 120.0, 0.0), &p).unwrap();
            let s = solve_second_gear_slipping(&ts(80.0, 120.0, l.hold_torque), &p).unwrap();
            assert!((s.alpha_input - l.alpha).abs() < 1e-12);
            assert!((s.alpha_second - l.alpha).abs() < 1e-12);
        }
    }

    #[test]
    fn one_way_element_torque_marks_freewheel() {
        // Element torque turns negative exactly when the slipping equations
        // would carry shaft 2 ahead of the first-gear constraint.
        let p = table1(Configuration::A);
        let rho = p.step_ratio();
        for tcf in [0.0, 5.0, 10.0, 20.0, 22.0, 23.0, 30.0, 40.0] {
            let t = ts(40.0, 30.0, tcf);
            let fg = solve_first_gear(&t, &p).unwrap();
            let slip = solve_second_gear_slipping(&t, &p).unwrap();
            let elem = one_way_element_torque(&t, &p, &fg);
            let ahead = slip.alpha_second - rho * slip.alpha_input;
            assert_eq!(elem < 0.0, ahead > 0.0, "tcf = {tcf}: {elem} vs {ahead}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut p = table1(Configuration::A);
        p.inertia_second = 0.0;
        assert!(matches!(solve_first_gear(&TorqueSet::default(), &p), Err(Error::Domain(_))));
        let mut p = table1(Configuration::A);
        p.ratio_second = p.ratio_first;
        assert!(solve_locked(&TorqueSet::default(), &p).is_err());
    }
}
