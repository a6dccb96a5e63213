//! Collisional coherence-time estimate and its comparison against the time
//! of flight. The estimate tells whether environmental scattering can matter
//! at all; the ratio test is what justifies treating the flight as unitary.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{AIR_MOLECULE_MASS, BOLTZMANN};
use crate::error::{Error, Result};

/// Residual-gas environment around the beam path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentConfig {
    /// Pressure, Pa.
    pub pressure: f64,
    /// Temperature, K.
    pub temperature: f64,
    /// Total scattering cross section, m^2.
    pub cross_section: f64,
    /// Mass of a gas molecule, kg.
    pub gas_mass: f64,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        Self {
            pressure: crate::constants::ATMOSPHERE,
            temperature: 293.15,
            cross_section: 1e-27,
            gas_mass: AIR_MOLECULE_MASS,
        }
    }
}

impl EnvironmentConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pressure", self.pressure),
            ("temperature", self.temperature),
            ("cross_section", self.cross_section),
            ("gas_mass", self.gas_mass),
        ] {
            if !(v > 0.0) {
                return Err(Error::invalid(format!(
                    "environment {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Coherence-time report: the literal formula value next to the commonly
/// quoted reference figure for these conditions, plus a dimensional audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoherenceReport {
    /// Literal evaluation of tau = 1/(P sigma) sqrt(8 / (pi k_B T m_gas)), s.
    pub literal_value_s: f64,
    /// Commonly quoted literature estimate at 1 atm, room temperature and
    /// sigma = 1e-27 m^2. Reported for side-by-side comparison, not asserted.
    pub reference_value_s: f64,
    /// True when the literal value is within an order of magnitude of the
    /// reference value.
    pub consistent_with_reference: bool,
    /// Kinetic-theory collision-time reading of the same inputs,
    /// tau = k_B T / (P sigma) * sqrt(pi m_gas / (8 k_B T)), s.
    pub kinetic_collision_time_s: f64,
    /// Dimensional-analysis note on the literal formula.
    pub audit: String,
}

/// Reference coherence time commonly quoted for 1 atm, room temperature and
/// a total cross section of 1e-27 m^2.
pub const REFERENCE_COHERENCE_TIME_S: f64 = 140.0;

/// Literal evaluation of the coherence-time formula
/// `tau = 1/(P sigma_tot) * sqrt(8 / (pi k_B T m_gas))`.
pub fn coherence_time(env: &EnvironmentConfig) -> Result<f64> {
    env.validate()?;
    Ok(1.0 / (env.pressure * env.cross_section)
        * (8.0 / (PI * BOLTZMANN * env.temperature * env.gas_mass)).sqrt())
}

/// Full report: literal value, reference figure, and a dimensional audit.
pub fn coherence_report(env: &EnvironmentConfig) -> Result<CoherenceReport> {
    let literal = coherence_time(env)?;
    // Mean gas speed sqrt(8 k_B T / (pi m)); collision time 1/(n sigma v)
    // with number density n = P / (k_B T).
    let mean_speed = (8.0 * BOLTZMANN * env.temperature / (PI * env.gas_mass)).sqrt();
    let density = env.pressure / (BOLTZMANN * env.temperature);
    let kinetic = 1.0 / (density * env.cross_section * mean_speed);
    let ratio = literal / REFERENCE_COHERENCE_TIME_S;
    Ok(CoherenceReport {
        literal_value_s: literal,
        reference_value_s: REFERENCE_COHERENCE_TIME_S,
        consistent_with_reference: ratio > 0.1 && ratio < 10.0,
        kinetic_collision_time_s: kinetic,
        audit: format!(
            "literal formula units are 1/(Pa m^2) * 1/sqrt(J kg) = s^3 kg^-2 m^-2, \
             not seconds; the kinetic collision-time reading 1/(n sigma v_mean) of the \
             same inputs gives {kinetic:.3e} s"
        ),
    })
}

/// Classical traversal time over `length` at the de Broglie forward speed:
/// T = m L lambda / (2 pi hbar).
pub fn time_of_flight(length: f64, lambda: f64, mass: f64) -> Result<f64> {
    for (name, v) in [("length", length), ("wavelength", lambda), ("mass", mass)] {
        if !(v > 0.0) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(mass * length * lambda / (2.0 * PI * crate::constants::HBAR))
}

/// Verdict of the coherence-margin comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Negligible,
    PotentiallyRelevant,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Negligible => "decoherence negligible",
            Verdict::PotentiallyRelevant => "decoherence potentially relevant",
        }
    }
}

/// Margin report: ratio of coherence time to time of flight plus verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoherenceMargin {
    pub coherence_time_s: f64,
    pub time_of_flight_s: f64,
    pub ratio: f64,
    pub verdict: Verdict,
}

/// Compare the (literal) coherence time against the time of flight over
/// `length` at wavelength `lambda`. Ratio >= 100 counts as negligible.
pub fn coherence_margin(
    env: &EnvironmentConfig,
    length: f64,
    lambda: f64,
    mass: f64,
) -> Result<CoherenceMargin> {
    let tau = coherence_time(env)?;
    let tof = time_of_flight(length, lambda, mass)?;
    let ratio = tau / tof;
    Ok(CoherenceMargin {
        coherence_time_s: tau,
        time_of_flight_s: tof,
        ratio,
        verdict: if ratio >= 100.0 {
            Verdict::Negligible
        } else {
            Verdict::PotentiallyRelevant
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::NEUTRON_MASS;

    #[test]
    fn scaling_laws_are_exact() {
        let env = EnvironmentConfig::default();
        let tau = coherence_time(&env).unwrap();

        let mut doubled_p = env;
        doubled_p.pressure *= 2.0;
        assert!(
            (coherence_time(&doubled_p).unwrap() - tau / 2.0).abs() <= 1e-12 * tau
        );

        let mut quadrupled_t = env;
        quadrupled_t.temperature *= 4.0;
        assert!(
            (coherence_time(&quadrupled_t).unwrap() - tau / 2.0).abs() <= 1e-12 * tau
        );

        let mut scaled_sigma = env;
        scaled_sigma.cross_section *= 10.0;
        assert!(
            (coherence_time(&scaled_sigma).unwrap() - tau / 10.0).abs() <= 1e-12 * tau
        );

        let mut scaled_mass = env;
        scaled_mass.gas_mass *= 4.0;
        assert!(
            (coherence_time(&scaled_mass).unwrap() - tau / 2.0).abs() <= 1e-12 * tau
        );
    }

    #[test]
    fn report_carries_reference_side_by_side() {
        let report = coherence_report(&EnvironmentConfig::default()).unwrap();
        assert_eq!(report.reference_value_s, 140.0);
        assert!(report.literal_value_s > 0.0);
        assert!(report.kinetic_collision_time_s > 0.0);
        // Kinetic reading at 1 atm / room temperature is a fraction of a second.
        assert!(report.kinetic_collision_time_s > 0.01);
        assert!(report.kinetic_collision_time_s < 1.0);
        assert!(!report.audit.is_empty());
    }

    #[test]
    fn time_of_flight_proportionalities() {
        let t = time_of_flight(5.0, 2e-9, NEUTRON_MASS).unwrap();
        let t2 = time_of_flight(5.0, 4e-9, NEUTRON_MASS).unwrap();
        assert!((t2 - 2.0 * t).abs() < 1e-15);
        let t3 = time_of_flight(10.0, 2e-9, NEUTRON_MASS).unwrap();
        assert!((t3 - 2.0 * t).abs() < 1e-15);
        // 5 m at ~2 nm is a few tens of milliseconds.
        assert!(t > 0.02 && t < 0.03, "T = {t}");
    }

    #[test]
    fn flight_time_matches_forward_speed() {
        // L = v T with v = 2 pi hbar / (m lambda) = 214 m/s for lambda ~ 18.5 A.
        let lambda = crate::constants::de_broglie_wavelength(NEUTRON_MASS, 214.0);
        let t = time_of_flight(4.9, lambda, NEUTRON_MASS).unwrap();
        // hbar is rounded independently of h, so allow a 1e-10 slack.
        assert!((214.0 * t - 4.9).abs() < 1e-8);
        assert!((t - 0.023).abs() < 0.001, "T = {t}");
    }

    #[test]
    fn margin_verdict_and_invariance() {
        let env = EnvironmentConfig::default();
        let margin = coherence_margin(&env, 4.9, 1.85e-9, NEUTRON_MASS).unwrap();
        assert_eq!(margin.verdict, Verdict::Negligible);
        assert!(margin.ratio >= 100.0);

        // Scaling lambda -> c lambda, L -> L/c leaves T and the ratio unchanged.
        let other = coherence_margin(&env, 4.9 / 3.0, 3.0 * 1.85e-9, NEUTRON_MASS).unwrap();
        assert!((other.ratio - margin.ratio).abs() <= 1e-12 * margin.ratio);

        // A large enough cross section flips the verdict.
        let mut heavy = env;
        heavy.cross_section *= margin.ratio / 50.0;
        let flipped = coherence_margin(&heavy, 4.9, 1.85e-9, NEUTRON_MASS).unwrap();
        assert_eq!(flipped.verdict, Verdict::PotentiallyRelevant);
        assert!(flipped.ratio < 100.0);
    }

    #[test]
    fn rejects_nonpositive_inputs() {
        let mut env = EnvironmentConfig::default();
        env.pressure = 0.0;
        assert!(coherence_time(&env).is_err());
        assert!(time_of_flight(-1.0, 2e-9, NEUTRON_MASS).is_err());
    }
}
