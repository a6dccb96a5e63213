//! Source model: the incoming wave packet for a given wave number and
//! wavelength, and quadrature rules for the incoherent averages over both.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::de_broglie_wavelength;
use crate::error::{Error, Result};
use crate::packet::ChirpedGaussianPacket;
use crate::quadrature::{gauss_hermite, gauss_legendre};

/// Width of the truncation window for the parametric wavelength spectrum,
/// in standard deviations either side of the mean.
const LAMBDA_TRUNCATION_SIGMAS: f64 = 5.0;

/// Wavelength spectrum of the beam: either a truncated Gaussian or a
/// tabulated density. Normalized to unit integral on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WavelengthSpec {
    /// Gaussian of the given mean and std, truncated at +-5 sigma.
    TruncatedGaussian { mean: f64, std: f64 },
    /// Tabulated (wavelength, relative weight) pairs on the table's own grid.
    Tabulated { pairs: Vec<(f64, f64)> },
}

impl WavelengthSpec {
    pub fn truncated_gaussian(mean: f64, std: f64) -> Result<Self> {
        if !(mean > 0.0) {
            return Err(Error::invalid(format!(
                "wavelength mean must be positive, got {mean}"
            )));
        }
        if !(std >= 0.0) {
            return Err(Error::invalid(format!(
                "wavelength std must be nonnegative, got {std}"
            )));
        }
        if mean - LAMBDA_TRUNCATION_SIGMAS * std <= 0.0 {
            return Err(Error::invalid(
                "wavelength spectrum extends to nonpositive wavelengths; reduce std",
            ));
        }
        Ok(WavelengthSpec::TruncatedGaussian { mean, std })
    }

    /// Build from tabulated pairs; weights are renormalized so the trapezoid
    /// integral of the density over the table grid is 1.
    pub fn tabulated(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::invalid("wavelength table must not be empty"));
        }
        for (i, &(lambda, f)) in pairs.iter().enumerate() {
            if !(lambda > 0.0) {
                return Err(Error::invalid(format!(
                    "wavelength table row {i}: wavelength must be positive, got {lambda}"
                )));
            }
            if !(f >= 0.0) {
                return Err(Error::invalid(format!(
                    "wavelength table row {i}: weight must be nonnegative, got {f}"
                )));
            }
        }
        for w in pairs.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::invalid(
                    "wavelength table must have strictly increasing wavelengths",
                ));
            }
        }
        if pairs.iter().all(|&(_, f)| f == 0.0) {
            return Err(Error::invalid("wavelength table has no positive weight"));
        }
        Ok(WavelengthSpec::Tabulated { pairs })
    }

    /// Mean wavelength of the spectrum.
    pub fn mean(&self) -> f64 {
        match self {
            WavelengthSpec::TruncatedGaussian { mean, .. } => *mean,
            WavelengthSpec::Tabulated { pairs } => {
                let nodes = tabulated_nodes(pairs);
                nodes.iter().map(|(l, w)| l * w).sum()
            }
        }
    }
}

/// Quadrature nodes/weights for the tabulated density: trapezoid rule on the
/// table's own grid, normalized to unit total weight.
fn tabulated_nodes(pairs: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if pairs.len() == 1 {
        return vec![(pairs[0].0, 1.0)];
    }
    let n = pairs.len();
    let mut weights = vec![0.0; n];
    for i in 0..n - 1 {
        let h = pairs[i + 1].0 - pairs[i].0;
        weights[i] += 0.5 * h * pairs[i].1;
        weights[i + 1] += 0.5 * h * pairs[i + 1].1;
    }
    let total: f64 = weights.iter().sum();
    pairs
        .iter()
        .zip(weights)
        .map(|(&(l, _), w)| (l, w / total))
        .collect()
}

/// Source parameters: entrance slit, flight distance to the grating, and the
/// statistical spreads that drive the incoherent averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    /// Entrance slit width A, m.
    pub entrance_slit_width: f64,
    /// Source-to-grating distance L0, m.
    pub source_to_grating: f64,
    /// Std of the Gaussian wave-number distribution, 1/m.
    pub wave_number_spread: f64,
    /// Wavelength spectrum f(lambda).
    pub wavelength: WavelengthSpec,
    /// Optional mean forward speed, m/s; used only as a consistency check
    /// against the mean wavelength.
    pub mean_forward_speed: Option<f64>,
}

impl BeamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.entrance_slit_width > 0.0) {
            return Err(Error::invalid("entrance slit width must be positive"));
        }
        if !(self.source_to_grating > 0.0) {
            return Err(Error::invalid("source-to-grating distance must be positive"));
        }
        if !(self.wave_number_spread >= 0.0) {
            return Err(Error::invalid("wave-number spread must be nonnegative"));
        }
        Ok(())
    }

    /// Source packet width s0 = A / sqrt(12), the std of the uniform
    /// distribution over the entrance slit.
    pub fn source_width(&self) -> f64 {
        self.entrance_slit_width / 12.0f64.sqrt()
    }

    /// Chirp parameter gamma = lambda L0 / (4 pi s0^2) accumulated over the
    /// flight to the grating.
    pub fn chirp(&self, lambda: f64) -> f64 {
        let s0 = self.source_width();
        lambda * self.source_to_grating / (4.0 * PI * s0 * s0)
    }

    /// Packet width at the grating, s = s0 sqrt(1 + gamma^2).
    pub fn width_at_grating(&self, lambda: f64) -> f64 {
        let gamma = self.chirp(lambda);
        self.source_width() * (1.0 + gamma * gamma).sqrt()
    }

    /// Transverse displacement delta(k) = L0 lambda k / (2 pi) accumulated by
    /// a packet of wave number k.
    pub fn displacement(&self, k: f64, lambda: f64) -> f64 {
        self.source_to_grating * lambda * k / (2.0 * PI)
    }

    /// If a forward speed is configured, compare its implied wavelength with
    /// the spectrum mean and return a warning on > 5% discrepancy.
    pub fn consistency_warnings(&self, particle_mass: f64) -> Vec<String> {
        let mut warnings = Vec::new();
        if let Some(v) = self.mean_forward_speed {
            let implied = de_broglie_wavelength(particle_mass, v);
            let mean = self.wavelength.mean();
            let rel = (implied - mean).abs() / mean;
            if rel > 0.05 {
                warnings.push(format!(
                    "beam.mean_forward_speed {v} m/s implies wavelength {:.4e} m, \
                     {:.1}% away from the spectrum mean {:.4e} m",
                    implied,
                    rel * 100.0,
                    mean
                ));
            }
        }
        warnings
    }
}

/// Normalized packet just before the grating for wave number `k` and
/// wavelength `lambda`: center delta(k), alpha = 1/(2 s^2), beta = gamma/(2 s^2),
/// wave number k.
pub fn incoming_packet(config: &BeamConfig, k: f64, lambda: f64) -> Result<ChirpedGaussianPacket> {
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!(
            "wavelength must be positive, got {lambda}"
        )));
    }
    config.validate()?;
    let gamma = config.chirp(lambda);
    let s = config.width_at_grating(lambda);
    let alpha = 1.0 / (2.0 * s * s);
    let packet = ChirpedGaussianPacket::new(
        num_complex::Complex64::new(1.0, 0.0),
        config.displacement(k, lambda),
        alpha,
        gamma * alpha,
        k,
    )?;
    Ok(packet.normalized())
}

/// Nodes and weights integrating smooth functions against the Gaussian
/// wave-number density of std `sigma_k`. Weights are nonnegative and sum to 1;
/// `sigma_k = 0` collapses to the single node k = 0.
pub fn k_quadrature(sigma_k: f64, order: usize) -> Result<Vec<(f64, f64)>> {
    if !(sigma_k >= 0.0) {
        return Err(Error::invalid(format!(
            "wave-number spread must be nonnegative, got {sigma_k}"
        )));
    }
    if order < 1 {
        return Err(Error::invalid("quadrature order must be >= 1"));
    }
    if sigma_k == 0.0 {
        return Ok(vec![(0.0, 1.0)]);
    }
    let (t, w) = gauss_hermite(order);
    let total: f64 = w.iter().sum();
    Ok(t.iter()
        .zip(&w)
        .map(|(ti, wi)| (2.0f64.sqrt() * sigma_k * ti, wi / total))
        .collect())
}

/// Nodes and weights for the wavelength average. The truncated Gaussian uses
/// `order` Gauss-Legendre nodes over the truncation window; a tabulated
/// spectrum is integrated by the trapezoid rule on its own grid and ignores
/// `order`. Degenerate spectra collapse to a single node.
pub fn lambda_quadrature(spec: &WavelengthSpec, order: usize) -> Result<Vec<(f64, f64)>> {
    if order < 1 {
        return Err(Error::invalid("quadrature order must be >= 1"));
    }
    match spec {
        WavelengthSpec::TruncatedGaussian { mean, std } => {
            if *std == 0.0 {
                return Ok(vec![(*mean, 1.0)]);
            }
            let lo = mean - LAMBDA_TRUNCATION_SIGMAS * std;
            let hi = mean + LAMBDA_TRUNCATION_SIGMAS * std;
            let (t, w) = gauss_legendre(order);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            let mut nodes: Vec<(f64, f64)> = t
                .iter()
                .zip(&w)
                .map(|(ti, wi)| {
                    let lambda = mid + half * ti;
                    let z = (lambda - mean) / std;
                    (lambda, wi * half * (-0.5 * z * z).exp())
                })
                .collect();
            let total: f64 = nodes.iter().map(|(_, w)| w).sum();
            for node in &mut nodes {
                node.1 /= total;
            }
            Ok(nodes)
        }
        WavelengthSpec::Tabulated { pairs } => Ok(tabulated_nodes(pairs)),
    }
}
