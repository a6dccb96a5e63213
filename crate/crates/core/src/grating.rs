//! Passage through the double slit: a Gaussian transmission function that
//! stays inside the packet algebra, and a two-packet model with fitted
//! transverse momenta.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::packet::{ChirpedGaussianPacket, PacketSuperposition};

/// Double-slit geometry: apertures a1, a2 and the gap d between them.
/// Slit centers sit at x_j = (-1)^j (a_j + d)/2, so slit 1 is at x < 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GratingGeometry {
    /// Aperture of slit 1, m.
    pub aperture_1: f64,
    /// Aperture of slit 2, m.
    pub aperture_2: f64,
    /// Gap between the two slit openings, m.
    pub gap: f64,
}

impl GratingGeometry {
    pub fn new(aperture_1: f64, aperture_2: f64, gap: f64) -> Result<Self> {
        let geom = Self {
            aperture_1,
            aperture_2,
            gap,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.aperture_1 > 0.0 && self.aperture_2 > 0.0 && self.gap > 0.0) {
            return Err(Error::invalid(
                "slit apertures and gap must all be positive",
            ));
        }
        Ok(())
    }

    pub fn aperture(&self, slit: usize) -> f64 {
        match slit {
            1 => self.aperture_1,
            2 => self.aperture_2,
            _ => panic!("slit index must be 1 or 2"),
        }
    }

    /// Center of slit j: x_1 = -(a_1 + d)/2, x_2 = +(a_2 + d)/2.
    pub fn slit_center(&self, slit: usize) -> f64 {
        let sign = if slit == 1 { -1.0 } else { 1.0 };
        sign * (self.aperture(slit) + self.gap) / 2.0
    }

    /// Gaussian width of slit j, sigma_j = a_j / sqrt(12).
    pub fn slit_sigma(&self, slit: usize) -> f64 {
        self.aperture(slit) / 12.0f64.sqrt()
    }

    /// Center-to-center slit distance, (a1 + a2)/2 + d; the interference
    /// baseline that sets the far-field fringe spacing.
    pub fn center_separation(&self) -> f64 {
        (self.aperture_1 + self.aperture_2) / 2.0 + self.gap
    }

    /// Sharp-aperture transmission: 1 inside either slit opening, 0 on the
    /// barrier. No closed form under the packet algebra; used on grids only.
    pub fn sharp_transmission(&self, x: f64) -> f64 {
        for slit in [1, 2] {
            let c = self.slit_center(slit);
            if (x - c).abs() <= self.aperture(slit) / 2.0 {
                return 1.0;
            }
        }
        0.0
    }

    /// Gaussian transmission sum (1/sigma_j) exp[-(x - x_j)^2 / (2 sigma_j^2)].
    pub fn gaussian_transmission(&self, x: f64) -> f64 {
        [1, 2]
            .iter()
            .map(|&slit| {
                let c = self.slit_center(slit);
                let s = self.slit_sigma(slit);
                (1.0 / s) * (-(x - c) * (x - c) / (2.0 * s * s)).exp()
            })
            .sum()
    }
}

/// Per-slit parameters extracted from the Gaussian-transmission product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlitPacketInfo {
    /// Quadratic width parameter alpha_j, 1/m^2.
    pub alpha: f64,
    /// Packet center xi_j, m.
    pub center: f64,
    /// Transverse momentum kick p_j = hbar (kappa_j - k), kg m/s.
    pub momentum: f64,
}

/// Decomposition of the Gaussian-transmission output into its two packets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelOneDecomposition {
    pub slit_1: SlitPacketInfo,
    pub slit_2: SlitPacketInfo,
}

impl ModelOneDecomposition {
    pub fn slit(&self, j: usize) -> &SlitPacketInfo {
        match j {
            1 => &self.slit_1,
            2 => &self.slit_2,
            _ => panic!("slit index must be 1 or 2"),
        }
    }
}

/// Fitted transverse momenta of the two-packet model, kg m/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelTwoParams {
    pub p1: f64,
    pub p2: f64,
}

impl ModelTwoParams {
    pub fn momentum(&self, slit: usize) -> f64 {
        match slit {
            1 => self.p1,
            2 => self.p2,
            _ => panic!("slit index must be 1 or 2"),
        }
    }
}

/// Apply the Gaussian transmission to the incoming packet. The result is the
/// exact pointwise product F * psi_in, one chirped Gaussian per slit, plus
/// the extracted per-slit (alpha_j, xi_j, p_j).
pub fn model_one_outgoing(
    psi_in: &ChirpedGaussianPacket,
    geom: &GratingGeometry,
) -> Result<(PacketSuperposition, ModelOneDecomposition)> {
    geom.validate()?;
    let k = psi_in.wave_number();
    let mut terms = Vec::with_capacity(2);
    let mut infos = Vec::with_capacity(2);
    for slit in [1, 2] {
        let packet =
            psi_in.multiply_by_real_gaussian(geom.slit_center(slit), geom.slit_sigma(slit), 1.0)?;
        infos.push(SlitPacketInfo {
            alpha: packet.alpha(),
            center: packet.center(),
            momentum: HBAR * (packet.wave_number() - k),
        });
        terms.push((Complex64::new(1.0, 0.0), packet));
    }
    Ok((
        PacketSuperposition::new(terms),
        ModelOneDecomposition {
            slit_1: infos[0],
            slit_2: infos[1],
        },
    ))
}

/// Two drifting packets: psi_out = c1 phi_1 + c2 phi_2 with phi_j the
/// normalized Gaussian of width sigma_j at x_j carrying wave number
/// k + p_j / hbar, and c_j = |psi_in(x_j)|. The superposition is
/// renormalized to unit L2 norm.
pub fn model_two_outgoing(
    psi_in: &ChirpedGaussianPacket,
    geom: &GratingGeometry,
    params: &ModelTwoParams,
) -> Result<PacketSuperposition> {
    geom.validate()?;
    let k = psi_in.wave_number();
    let mut terms = Vec::with_capacity(2);
    let mut total_weight = 0.0;
    for slit in [1, 2] {
        let x_j = geom.slit_center(slit);
        let weight = psi_in.evaluate(x_j).norm();
        total_weight += weight;
        let phi = ChirpedGaussianPacket::normalized_with_position_std(
            x_j,
            geom.slit_sigma(slit),
            k + params.momentum(slit) / HBAR,
        )?;
        terms.push((Complex64::new(weight, 0.0), phi));
    }
    if total_weight == 0.0 {
        return Err(Error::DegenerateTransmission);
    }
    Ok(PacketSuperposition::new(terms).normalized())
}
