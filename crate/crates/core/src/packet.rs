//! Exact algebra of chirped Gaussian wave packets.
//!
//! A packet is `A * exp[-(alpha - i*beta)(x - xi)^2 + i*kappa*x]` with
//! `alpha > 0`. Products with real Gaussian envelopes and free Schrodinger
//! evolution stay inside this family, so both are closed-form operations.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::constants::HBAR;
use crate::error::{Error, Result};

/// One complex Gaussian term; the carrier of every wave function in the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpedGaussianPacket {
    amplitude: Complex64,
    center: f64,
    alpha: f64,
    beta: f64,
    wave_number: f64,
}

impl ChirpedGaussianPacket {
    /// Build a packet, rejecting non-normalizable width parameters.
    pub fn new(
        amplitude: Complex64,
        center: f64,
        alpha: f64,
        beta: f64,
        wave_number: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::invalid(format!(
                "packet width parameter alpha must be positive and finite, got {alpha}"
            )));
        }
        if !center.is_finite() || !beta.is_finite() || !wave_number.is_finite() {
            return Err(Error::invalid("packet parameters must be finite"));
        }
        Ok(Self {
            amplitude,
            center,
            alpha,
            beta,
            wave_number,
        })
    }

    /// Unit-norm Gaussian whose position distribution |psi|^2 has standard
    /// deviation `sigma`: amplitude (2 pi sigma^2)^(-1/4), alpha = 1/(4 sigma^2).
    pub fn normalized_with_position_std(center: f64, sigma: f64, wave_number: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::invalid(format!(
                "packet width must be positive, got {sigma}"
            )));
        }
        let amplitude = Complex64::new((2.0 * PI * sigma * sigma).powf(-0.25), 0.0);
        Self::new(amplitude, center, 1.0 / (4.0 * sigma * sigma), 0.0, wave_number)
    }

    pub fn amplitude(&self) -> Complex64 {
        self.amplitude
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn wave_number(&self) -> f64 {
        self.wave_number
    }

    /// Complex quadratic coefficient `alpha - i*beta`.
    fn quadratic(&self) -> Complex64 {
        Complex64::new(self.alpha, -self.beta)
    }

    /// Standard deviation of the position distribution |psi|^2, i.e. 1/(2 sqrt(alpha)).
    pub fn position_std(&self) -> f64 {
        0.5 / self.alpha.sqrt()
    }

    /// Width `w` of the amplitude profile read as exp[-(x-xi)^2/(2 w^2)],
    /// i.e. 1/sqrt(2 alpha).
    pub fn envelope_width(&self) -> f64 {
        1.0 / (2.0 * self.alpha).sqrt()
    }

    /// Pointwise value `A exp[-(alpha - i beta)(x - xi)^2 + i kappa x]`.
    pub fn evaluate(&self, x: f64) -> Complex64 {
        let dx = x - self.center;
        let exponent = -self.quadratic() * dx * dx + Complex64::new(0.0, self.wave_number * x);
        self.amplitude * exponent.exp()
    }

    /// L2 norm squared, `|A|^2 sqrt(pi / (2 alpha))`. Independent of chirp.
    pub fn norm_squared(&self) -> f64 {
        self.amplitude.norm_sqr() * (PI / (2.0 * self.alpha)).sqrt()
    }

    /// Same packet rescaled to unit L2 norm.
    pub fn normalized(&self) -> Self {
        let mut out = *self;
        out.amplitude /= self.norm_squared().sqrt();
        out
    }

    /// Same packet with the amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = *self;
        out.amplitude *= factor;
        out
    }

    /// Multiply by the real envelope `(weight / sigma) exp[-(x - center)^2 / (2 sigma^2)]`,
    /// completing the square so the result is again a chirped Gaussian.
    pub fn multiply_by_real_gaussian(
        &self,
        envelope_center: f64,
        envelope_sigma: f64,
        envelope_weight: f64,
    ) -> Result<Self> {
        if !(envelope_sigma > 0.0) {
            return Err(Error::invalid(format!(
                "envelope sigma must be positive, got {envelope_sigma}"
            )));
        }
        let a = self.quadratic();
        let b = 1.0 / (2.0 * envelope_sigma * envelope_sigma);

        // Exponent in expanded form: -(a + b) x^2 + L x + c0.
        let linear = 2.0 * a * self.center
            + Complex64::new(2.0 * b * envelope_center, self.wave_number);
        let constant = -a * self.center * self.center - b * envelope_center * envelope_center;

        let alpha = self.alpha + b;
        let beta = self.beta;
        let center = linear.re / (2.0 * alpha);
        let wave_number = linear.im + 2.0 * beta * center;

        // Amplitude absorbs the envelope prefactor and the completed-square constant.
        let quad = Complex64::new(alpha, -beta);
        let amplitude = self.amplitude
            * (envelope_weight / envelope_sigma)
            * (constant + quad * center * center).exp();

        Self::new(amplitude, center, alpha, beta, wave_number)
    }

    /// Exact free Schrodinger evolution for `time >= 0` and particle `mass`.
    ///
    /// With eta = hbar t / (2 m) and a = alpha - i beta, the evolved packet has
    /// a_t = a / (1 + 4 i eta a), center shifted by the group velocity
    /// hbar kappa / m times t, unchanged kappa, and amplitude divided by
    /// sqrt(1 + 4 i eta a) (times the plane-wave phase). The L2 norm is
    /// preserved exactly.
    pub fn propagate_free(&self, time: f64, mass: f64) -> Result<Self> {
        if !(time >= 0.0) {
            return Err(Error::invalid(format!("time must be >= 0, got {time}")));
        }
        if !(mass > 0.0) {
            return Err(Error::invalid(format!("mass must be > 0, got {mass}")));
        }
        if time == 0.0 {
            return Ok(*self);
        }
        let eta = HBAR * time / (2.0 * mass);
        let a = self.quadratic();
        // 1 + 4 i eta a has positive imaginary part for t > 0, so the
        // principal square root is the branch continuous from 1 at t = 0.
        let denom = Complex64::new(1.0, 0.0) + Complex64::new(0.0, 4.0 * eta) * a;
        let a_t = a / denom;
        let kappa = self.wave_number;
        let phase = Complex64::new(0.0, -eta * kappa * kappa).exp();
        let amplitude = self.amplitude * phase / denom.sqrt();
        Self::new(
            amplitude,
            self.center + 2.0 * eta * kappa,
            a_t.re,
            -a_t.im,
            kappa,
        )
    }

    /// Complex inner product <self|other> in closed form.
    pub fn overlap(&self, other: &Self) -> Complex64 {
        let cp = Complex64::new(self.alpha, self.beta); // conjugated quadratic
        let cq = other.quadratic();
        let total = cp + cq;
        let linear = 2.0 * cp * self.center
            + 2.0 * cq * other.center
            + Complex64::new(0.0, other.wave_number - self.wave_number);
        let constant =
            -cp * self.center * self.center - cq * other.center * other.center;
        self.amplitude.conj()
            * other.amplitude
            * (PI / total).sqrt()
            * (linear * linear / (4.0 * total) + constant).exp()
    }
}

/// Weighted sum of chirped Gaussian packets.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketSuperposition {
    terms: Vec<(Complex64, ChirpedGaussianPacket)>,
}

impl PacketSuperposition {
    pub fn new(terms: Vec<(Complex64, ChirpedGaussianPacket)>) -> Self {
        Self { terms }
    }

    pub fn from_packet(packet: ChirpedGaussianPacket) -> Self {
        Self {
            terms: vec![(Complex64::new(1.0, 0.0), packet)],
        }
    }

    pub fn terms(&self) -> &[(Complex64, ChirpedGaussianPacket)] {
        &self.terms
    }

    /// Weighted sum of term values at `x`.
    pub fn evaluate(&self, x: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(w, p)| w * p.evaluate(x))
            .sum()
    }

    /// Exact L2 norm squared via pairwise overlaps.
    pub fn norm_squared(&self) -> f64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (wi, pi) in &self.terms {
            for (wj, pj) in &self.terms {
                total += wi.conj() * wj * pi.overlap(pj);
            }
        }
        total.re
    }

    /// Rescale weights so the superposition has unit L2 norm.
    pub fn normalized(&self) -> Self {
        let norm = self.norm_squared().sqrt();
        Self {
            terms: self
                .terms
                .iter()
                .map(|(w, p)| (w / norm, *p))
                .collect(),
        }
    }

    /// Termwise free evolution; weights are untouched (linearity).
    pub fn propagate_free(&self, time: f64, mass: f64) -> Result<Self> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (w, p) in &self.terms {
            terms.push((*w, p.propagate_free(time, mass)?));
        }
        Ok(Self { terms })
    }
}
