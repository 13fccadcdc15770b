//! Three-shoe centrifugal clutch: shoe kinematics, engagement onset, drum
//! contact pressure and transmitted torque.
//!
//! Each shoe is a pivoted drum shoe. The lining pressure follows the
//! pivoted-shoe law `p(θ) = P_a · sin θ / sin θ_a` with `θ_a = min(θ_2, π/2)`,
//! and the peak pressure `P_a` comes from the moment balance about the pin:
//!
//! ```text
//! m·r_cm·ω²·c − F_spring·r_s1 = M_n ∓ M_f
//! ```
//!
//! The upper sign applies to a self-reinforcing shoe, where friction helps
//! press the lining onto the drum.
//!
//! All functions are pure; parameter structs are plain values.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry of one shoe and the drum. Lengths in metres, angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClutchGeometry {
    pub shoe_count: u32,
    pub shoe_width: f64,
    /// Angular position of the lining start, measured from the pin.
    pub theta1: f64,
    /// Angular position of the lining end.
    pub theta2: f64,
    pub drum_radius: f64,
    pub pin_to_center: f64,
    pub shoe_cm_radius: f64,
    /// Moment arm of the centrifugal force about the pin.
    pub centrifugal_arm: f64,
    /// Moment arm of the drum normal resultant about the pin.
    pub reaction_arm: f64,
    pub spring_arm_primary: f64,
    pub spring_arm_secondary: f64,
}

impl ClutchGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.shoe_count < 1 {
            return Err(Error::InvalidParams("shoe_count must be >= 1".into()));
        }
        let lengths = [
            ("shoe_width", self.shoe_width),
            ("drum_radius", self.drum_radius),
            ("pin_to_center", self.pin_to_center),
            ("shoe_cm_radius", self.shoe_cm_radius),
            ("centrifugal_arm", self.centrifugal_arm),
            ("reaction_arm", self.reaction_arm),
            ("spring_arm_primary", self.spring_arm_primary),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.spring_arm_secondary.is_finite() && self.spring_arm_secondary >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "spring_arm_secondary must be >= 0, got {}",
                self.spring_arm_secondary
            )));
        }
        if !(0.0 < self.theta1 && self.theta1 < self.theta2 && self.theta2 < PI) {
            return Err(Error::InvalidParams(format!(
                "lining angles must satisfy 0 < theta1 < theta2 < pi, got {} and {}",
                self.theta1, self.theta2
            )));
        }
        if self.shoe_cm_radius >= self.drum_radius {
            return Err(Error::InvalidParams(format!(
                "shoe_cm_radius ({}) must be smaller than drum_radius ({})",
                self.shoe_cm_radius, self.drum_radius
            )));
        }
        Ok(())
    }

    /// Angle of maximum lining pressure.
    pub fn theta_max_pressure(&self) -> f64 {
        self.theta2.min(FRAC_PI_2)
    }

    /// `∫ sin²θ dθ` over the lining arc.
    fn normal_integral(&self) -> f64 {
        let f = |t: f64| 0.5 * t - 0.25 * (2.0 * t).sin();
        f(self.theta2) - f(self.theta1)
    }

    /// `∫ sinθ·(r − d·cosθ) dθ` over the lining arc.
    fn friction_integral(&self) -> f64 {
        let (r, d) = (self.drum_radius, self.reaction_arm);
        let (s1, s2) = (self.theta1.sin(), self.theta2.sin());
        r * (self.theta1.cos() - self.theta2.cos()) - 0.5 * d * (s2 * s2 - s1 * s1)
    }

    /// Normal moment about the pin per unit peak pressure.
    pub fn normal_moment_per_pressure(&self) -> f64 {
        self.shoe_width * self.drum_radius * self.reaction_arm * self.normal_integral()
            / self.theta_max_pressure().sin()
    }

    /// Friction moment about the pin per unit peak pressure and unit friction coefficient.
    pub fn friction_moment_per_pressure(&self) -> f64 {
        self.shoe_width * self.drum_radius * self.friction_integral()
            / self.theta_max_pressure().sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrictionMode {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrictionSpec {
    pub mu_static: f64,
    pub mu_dynamic: f64,
    pub mode: FrictionMode,
}

impl FrictionSpec {
    /// Coefficient selected by `mode`.
    pub fn active(&self) -> f64 {
        match self.mode {
            FrictionMode::Static => self.mu_static,
            FrictionMode::Dynamic => self.mu_dynamic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.mu_dynamic && self.mu_dynamic <= self.mu_static && self.mu_static < 2.0) {
            return Err(Error::InvalidParams(format!(
                "friction must satisfy 0 < mu_dynamic <= mu_static < 2, got mu_dynamic = {}, mu_static = {}",
                self.mu_dynamic, self.mu_static
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpringSpec {
    /// N
    pub preload: f64,
    /// N/m
    pub stiffness: f64,
    /// Radial gap the lining travels before it touches the drum, m.
    pub shoe_clearance: f64,
}

impl SpringSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("preload", self.preload),
            ("stiffness", self.stiffness),
            ("shoe_clearance", self.shoe_clearance),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngagementMode {
    /// Friction moment adds to the centrifugal moment (leading shoe).
    SelfReinforcing,
    /// Friction moment opposes the centrifugal moment (trailing shoe).
    SelfReducing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClutchParams {
    pub geometry: ClutchGeometry,
    pub friction: FrictionSpec,
    pub spring: SpringSpec,
    /// kg
    pub shoe_mass: f64,
    pub engagement_mode: EngagementMode,
}

impl ClutchParams {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.friction.validate()?;
        self.spring.validate()?;
        if !(self.shoe_mass.is_finite() && self.shoe_mass > 0.0) {
            return Err(Error::Domain(format!(
                "shoe_mass must be > 0, got {}",
                self.shoe_mass
            )));
        }
        contact_swing_angle(self)?;
        Ok(())
    }

    pub fn with_shoe_mass(mut self, shoe_mass: f64) -> Self {
        self.shoe_mass = shoe_mass;
        self
    }

    pub fn with_preload(mut self, preload: f64) -> Self {
        self.spring.preload = preload;
        self
    }

    /// Centrifugal moment about the pin per unit ω², `m·r_cm·c`.
    fn centrifugal_moment_coef(&self) -> f64 {
        self.shoe_mass * self.geometry.shoe_cm_radius * self.geometry.centrifugal_arm
    }

    /// Spring restraining moment about the pin once the lining touches the drum.
    fn restraining_moment(&self) -> Result<f64> {
        Ok(contact_spring_force(self)? * self.geometry.spring_arm_primary)
    }
}

/// Spring elongation when the shoe swings about its pin by `swing_angle`.
///
/// Arc-length model: the primary spring anchor travels `r_s1·φ`.
pub fn spring_elongation(swing_angle: f64, geometry: &ClutchGeometry) -> Result<f64> {
    if !(0.0..FRAC_PI_4).contains(&swing_angle) {
        return Err(Error::Domain(format!(
            "swing angle must lie in [0, pi/4), got {swing_angle}"
        )));
    }
    Ok(geometry.spring_arm_primary * swing_angle)
}

/// Pin swing needed to close the shoe clearance.
pub fn contact_swing_angle(params: &ClutchParams) -> Result<f64> {
    let phi = params.spring.shoe_clearance / params.geometry.reaction_arm;
    if phi >= FRAC_PI_4 {
        return Err(Error::Domain(format!(
            "shoe clearance {} m needs a swing of {phi} rad, beyond pi/4",
            params.spring.shoe_clearance
        )));
    }
    Ok(phi)
}

/// Spring force with the lining in contact with the drum.
pub fn contact_spring_force(params: &ClutchParams) -> Result<f64> {
    let delta = spring_elongation(contact_swing_angle(params)?, &params.geometry)?;
    Ok(params.spring.preload + params.spring.stiffness * delta)
}

/// Rotor speed at which the centrifugal moment first balances the spring.
pub fn onset_speed(params: &ClutchParams) -> Result<f64> {
    params.validate()?;
    Ok((params.restraining_moment()? / params.centrifugal_moment_coef()).sqrt())
}

/// Pressure denominator `M_n ∓ μ·M_f` per unit peak pressure.
fn pressure_denominator(params: &ClutchParams, mu: f64) -> Result<f64> {
    let normal = params.geometry.normal_moment_per_pressure();
    let friction = mu * params.geometry.friction_moment_per_pressure();
    match params.engagement_mode {
        EngagementMode::SelfReducing => Ok(normal + friction),
        EngagementMode::SelfReinforcing => {
            if friction >= normal {
                Err(Error::SelfLocking {
                    mu,
                    normal_moment: normal,
                    friction_moment: friction,
                })
            } else {
                Ok(normal - friction)
            }
        }
    }
}

fn actuating_moment(omega: f64, params: &ClutchParams) -> Result<f64> {
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(Error::Domain(format!("rotor speed must be >= 0, got {omega}")));
    }
    let onset = onset_speed(params)?;
    if omega < onset {
        return Err(Error::Domain(format!(
            "rotor speed {omega} rad/s is below the onset speed {onset} rad/s"
        )));
    }
    let m = params.centrifugal_moment_coef() * omega * omega - params.restraining_moment()?;
    // Rounding can leave a tiny negative residue exactly at onset.
    Ok(m.max(0.0))
}

fn peak_pressure_with(omega: f64, params: &ClutchParams, mu: f64) -> Result<f64> {
    let m_act = actuating_moment(omega, params)?;
    Ok(m_act / pressure_denominator(params, mu)?)
}

/// Peak lining pressure `P_a` at rotor speed `omega`, using the friction
/// coefficient selected by the friction mode.
pub fn peak_pressure(omega: f64, params: &ClutchParams) -> Result<f64> {
    peak_pressure_with(omega, params, params.friction.active())
}

/// Drum torque for a given peak pressure and friction coefficient:
/// `T = n·μ·r²·b·P_a / sin θ_a · (cos θ_1 − cos θ_2)`.
pub fn drum_torque(peak_pressure: f64, mu: f64, geometry: &ClutchGeometry) -> f64 {
    let g = geometry;
    f64::from(g.shoe_count) * mu * g.drum_radius * g.drum_radius * g.shoe_width * peak_pressure
        / g.theta_max_pressure().sin()
        * (g.theta1.cos() - g.theta2.cos())
}

fn torque_with(omega: f64, params: &ClutchParams, mu: f64) -> Result<f64> {
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(Error::Domain(format!("rotor speed must be >= 0, got {omega}")));
    }
    if omega < onset_speed(params)? {
        return Ok(0.0);
    }
    let pa = peak_pressure_with(omega, params, mu)?;
    Ok(drum_torque(pa, mu, &params.geometry))
}

/// Torque transmitted by all shoes at rotor speed `omega`; zero below onset.
pub fn transmitted_torque(omega: f64, params: &ClutchParams) -> Result<f64> {
    torque_with(omega, params, params.friction.active())
}

/// Largest torque the engaged clutch holds without slipping (static friction).
pub fn torque_capacity(omega: f64, params: &ClutchParams) -> Result<f64> {
    torque_with(omega, params, params.friction.mu_static)
}

/// Precomputed torque-speed characteristic for the inner integration loop.
///
/// Above onset the torque is affine in ω²: `T = k·(m·r_cm·c·ω² − F·r_s1)`,
/// so a handful of constants replaces the full evaluation chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClutchCurve {
    onset: f64,
    moment_coef: f64,
    restraint: f64,
    dynamic_gain: f64,
    static_gain: f64,
}

impl ClutchCurve {
    pub fn new(params: &ClutchParams) -> Result<Self> {
        let onset = onset_speed(params)?;
        let gain = |mu: f64| -> Result<f64> {
            Ok(drum_torque(1.0, mu, &params.geometry) / pressure_denominator(params, mu)?)
        };
        Ok(Self {
            onset,
            moment_coef: params.centrifugal_moment_coef(),
            restraint: params.restraining_moment()?,
            dynamic_gain: gain(params.friction.active())?,
            static_gain: gain(params.friction.mu_static)?,
        })
    }

    pub fn onset(&self) -> f64 {
        self.onset
    }

    fn eval(&self, omega: f64, gain: f64) -> f64 {
        let w = omega.abs();
        if w < self.onset {
            0.0
        } else {
            gain * (self.moment_coef * w * w - self.restraint).max(0.0)
        }
    }

    /// Same as [`transmitted_torque`], taking `|omega|`.
    pub fn torque(&self, omega: f64) -> f64 {
        self.eval(omega, self.dynamic_gain)
    }

    /// Same as [`torque_capacity`], taking `|omega|`.
    pub fn capacity(&self, omega: f64) -> f64 {
        self.eval(omega, self.static_gain)
    }
}
