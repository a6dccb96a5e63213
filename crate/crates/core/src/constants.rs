//! Physical constants (SI) used throughout the crate.

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Planck constant, J s (exact, 2019 SI).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Boltzmann constant, J/K (exact, 2019 SI).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Neutron mass, kg (CODATA 2018).
pub const NEUTRON_MASS: f64 = 1.674_927_498_04e-27;

/// Standard atmosphere, Pa.
pub const ATMOSPHERE: f64 = 101_325.0;

/// Mean mass of an air molecule, kg.
pub const AIR_MOLECULE_MASS: f64 = 4.8e-26;

/// De Broglie wavelength of a particle of mass `mass` moving at `speed`.
pub fn de_broglie_wavelength(mass: f64, speed: f64) -> f64 {
    PLANCK / (mass * speed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cold_neutron_wavelength_matches_forward_speed() {
        // 214 m/s forward speed corresponds to roughly 18.5 A.
        let lambda = de_broglie_wavelength(NEUTRON_MASS, 214.0);
        assert!((lambda - 1.85e-9).abs() < 0.02e-9, "lambda = {lambda}");
    }
}
