//! Observable intensity: screen pattern for a single (k, lambda), the
//! incoherent wave-number average, detector boxcar, wavelength integral and
//! fringe visibility.
//!
//! The k-averaged density matrix is never materialized: averaging over k
//! commutes with taking the diagonal, so only the screen intensity is summed.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam::{incoming_packet, k_quadrature, lambda_quadrature};
use crate::config::ExperimentConfig;
use crate::decoherence::time_of_flight;
use crate::error::{Error, Result};
use crate::grating::{model_one_outgoing, model_two_outgoing, GratingGeometry, ModelTwoParams};
use crate::packet::{ChirpedGaussianPacket, PacketSuperposition};

/// Screen geometry and response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Grating-to-screen distance L, m.
    pub screen_distance: f64,
    /// Flat-response window width x0, m; 0 disables the convolution.
    pub resolution: f64,
    /// Screen sample positions, strictly increasing, m.
    pub grid: Vec<f64>,
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.screen_distance > 0.0) {
            return Err(Error::invalid("screen distance must be positive"));
        }
        if !(self.resolution >= 0.0) {
            return Err(Error::invalid("detector resolution must be nonnegative"));
        }
        if self.grid.len() < 2 {
            return Err(Error::invalid("screen grid needs at least 2 points"));
        }
        for w in self.grid.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::invalid("screen grid must be strictly increasing"));
            }
        }
        Ok(())
    }

    /// Uniform symmetric grid of `points` samples spanning +-`half_span`.
    pub fn uniform_grid(half_span: f64, points: usize) -> Vec<f64> {
        let n = points.max(2);
        (0..n)
            .map(|i| -half_span + 2.0 * half_span * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// Default half-span: six central fringe spacings lambda L / separation.
    pub fn default_half_span(lambda_mean: f64, screen_distance: f64, separation: f64) -> f64 {
        6.0 * lambda_mean * screen_distance / separation
    }
}

/// Pattern provenance: which model produced it and with what parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PatternMeta {
    pub model: String,
    pub params: BTreeMap<String, f64>,
}

/// Sampled nonnegative screen intensity (arbitrary units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityPattern {
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
    pub metadata: PatternMeta,
}

impl IntensityPattern {
    /// Build a pattern, clamping the tiny negative floor produced by
    /// floating-point cancellation and rejecting anything worse.
    pub fn new(positions: Vec<f64>, values: Vec<f64>, metadata: PatternMeta) -> Result<Self> {
        if positions.len() != values.len() {
            return Err(Error::invalid("positions and values must have equal length"));
        }
        for w in positions.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::invalid("pattern positions must be strictly increasing"));
            }
        }
        let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let floor = -1e-14 * peak.max(f64::MIN_POSITIVE);
        let mut clamped = values;
        for v in &mut clamped {
            if *v < floor {
                return Err(Error::invalid(format!(
                    "intensity value {v} below the numerical floor"
                )));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(Self {
            positions,
            values: clamped,
            metadata,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v))
    }
}

/// Which grating model produces the outgoing wave function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelChoice {
    /// Gaussian transmission function applied to the incoming packet.
    One,
    /// Two weighted drifting packets with the given transverse momenta.
    Two(ModelTwoParams),
}

impl ModelChoice {
    pub fn id(&self) -> &'static str {
        match self {
            ModelChoice::One => "one",
            ModelChoice::Two(_) => "two",
        }
    }

    /// Outgoing wave function for this model.
    pub fn outgoing(
        &self,
        psi_in: &ChirpedGaussianPacket,
        geom: &GratingGeometry,
    ) -> Result<PacketSuperposition> {
        match self {
            ModelChoice::One => Ok(model_one_outgoing(psi_in, geom)?.0),
            ModelChoice::Two(params) => model_two_outgoing(psi_in, geom, params),
        }
    }

    fn meta_params(&self) -> BTreeMap<String, f64> {
        let mut params = BTreeMap::new();
        if let ModelChoice::Two(p) = self {
            params.insert("p1_kg_m_per_s".to_string(), p.p1);
            params.insert("p2_kg_m_per_s".to_string(), p.p2);
        }
        params
    }
}

/// Screen intensity of one outgoing state at a single wavelength: every term
/// flies for T = m L lambda / (2 pi hbar), then |sum of terms|^2 is sampled
/// on the detector grid.
pub fn intensity_single(
    psi_out: &PacketSuperposition,
    lambda: f64,
    det: &DetectorConfig,
    mass: f64,
) -> Result<IntensityPattern> {
    det.validate()?;
    let time = time_of_flight(det.screen_distance, lambda, mass)?;
    let at_screen = psi_out.propagate_free(time, mass)?;
    let values: Vec<f64> = det
        .grid
        .iter()
        .map(|&x| at_screen.evaluate(x).norm_sqr())
        .collect();
    let mut params = BTreeMap::new();
    params.insert("lambda_m".to_string(), lambda);
    params.insert("time_s".to_string(), time);
    IntensityPattern::new(
        det.grid.clone(),
        values,
        PatternMeta {
            model: "single".to_string(),
            params,
        },
    )
}

/// Single-wavelength intensity with the incoherent wave-number average:
/// I_lambda(x) = sum over k nodes of weight * intensity_single(psi_out(k)).
pub fn intensity_lambda(
    config: &ExperimentConfig,
    model: &ModelChoice,
    lambda: f64,
) -> Result<IntensityPattern> {
    config.validate()?;
    let nodes = k_quadrature(config.beam.wave_number_spread, config.quadrature.k_order)?;
    let partials: Vec<Result<IntensityPattern>> = nodes
        .par_iter()
        .map(|&(k, _)| {
            let psi_in = incoming_packet(&config.beam, k, lambda)?;
            let psi_out = model.outgoing(&psi_in, &config.grating)?;
            intensity_single(&psi_out, lambda, &config.detector, config.particle_mass)
        })
        .collect();

    let mut values = vec![0.0; config.detector.grid.len()];
    for ((_, weight), partial) in nodes.iter().zip(partials) {
        let partial = partial?;
        for (acc, v) in values.iter_mut().zip(&partial.values) {
            *acc += weight * v;
        }
    }
    let mut params = model.meta_params();
    params.insert("lambda_m".to_string(), lambda);
    params.insert("sigma_k_per_m".to_string(), config.beam.wave_number_spread);
    params.insert("k_order".to_string(), config.quadrature.k_order as f64);
    IntensityPattern::new(
        config.detector.grid.clone(),
        values,
        PatternMeta {
            model: model.id().to_string(),
            params,
        },
    )
}

/// Boxcar the pattern over a window of width `x0` around each grid point.
///
/// The sampled pattern is read as its piecewise-linear interpolant and the
/// window integral is evaluated exactly, so a constant stays constant and the
/// interior mass is preserved. Windows are clipped at the grid ends and
/// averaged over the covered width. `x0 = 0` is the identity.
pub fn detector_convolve(pattern: &IntensityPattern, x0: f64) -> Result<IntensityPattern> {
    if !(x0 >= 0.0) {
        return Err(Error::invalid("detector resolution must be nonnegative"));
    }
    if x0 == 0.0 {
        return Ok(pattern.clone());
    }
    let xs = &pattern.positions;
    let vs = &pattern.values;
    let n = xs.len();
    if n < 2 {
        return Err(Error::invalid("pattern needs at least 2 samples"));
    }
    let max_spacing = xs
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0f64, f64::max);
    if max_spacing > x0 / 4.0 {
        return Err(Error::GridTooCoarse {
            spacing_m: max_spacing,
            limit_m: x0 / 4.0,
        });
    }

    // Cumulative exact integral of the piecewise-linear interpolant.
    let mut cum = vec![0.0; n];
    for i in 1..n {
        cum[i] = cum[i - 1] + 0.5 * (vs[i] + vs[i - 1]) * (xs[i] - xs[i - 1]);
    }
    let integral_to = |q: f64| -> f64 {
        let j = xs.partition_point(|&x| x <= q).clamp(1, n - 1) - 1;
        let h = xs[j + 1] - xs[j];
        let t = q - xs[j];
        let vq = vs[j] + (vs[j + 1] - vs[j]) * t / h;
        cum[j] + 0.5 * (vs[j] + vq) * t
    };

    let values: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let a = (x - x0 / 2.0).max(xs[0]);
            let b = (x + x0 / 2.0).min(xs[n - 1]);
            (integral_to(b) - integral_to(a)) / (b - a)
        })
        .collect();
    let mut metadata = pattern.metadata.clone();
    metadata.params.insert("detector_x0_m".to_string(), x0);
    IntensityPattern::new(xs.clone(), values, metadata)
}

/// Full model prediction: wavelength average of the detector-convolved
/// single-wavelength intensities. Scale and background are left to the fit.
pub fn intensity_total(config: &ExperimentConfig, model: &ModelChoice) -> Result<IntensityPattern> {
    config.validate()?;
    let nodes = lambda_quadrature(&config.beam.wavelength, config.quadrature.lambda_order)?;
    let partials: Vec<Result<IntensityPattern>> = nodes
        .par_iter()
        .map(|&(lambda, _)| {
            let single = intensity_lambda(config, model, lambda)?;
            detector_convolve(&single, config.detector.resolution)
        })
        .collect();

    let mut values = vec![0.0; config.detector.grid.len()];
    for ((_, weight), partial) in nodes.iter().zip(partials) {
        let partial = partial?;
        for (acc, v) in values.iter_mut().zip(&partial.values) {
            *acc += weight * v;
        }
    }
    let mut params = model.meta_params();
    params.insert(
        "lambda_mean_m".to_string(),
        config.beam.wavelength.mean(),
    );
    params.insert("sigma_k_per_m".to_string(), config.beam.wave_number_spread);
    params.insert("k_order".to_string(), config.quadrature.k_order as f64);
    params.insert(
        "lambda_order".to_string(),
        config.quadrature.lambda_order as f64,
    );
    params.insert("detector_x0_m".to_string(), config.detector.resolution);
    IntensityPattern::new(
        config.detector.grid.clone(),
        values,
        PatternMeta {
            model: model.id().to_string(),
            params,
        },
    )
}

/// Fringe visibility (I_max - I_min) / (I_max + I_min) over the central
/// adjacent extrema inside `window`. The highest interior local maximum is
/// paired with the mean of its flanking local minima.
pub fn visibility(pattern: &IntensityPattern, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    if hi <= lo {
        return Err(Error::invalid("visibility window must have positive width"));
    }
    let idx: Vec<usize> = (0..pattern.len())
        .filter(|&i| pattern.positions[i] >= lo && pattern.positions[i] <= hi)
        .collect();
    if idx.len() < 3 {
        return Err(Error::NoFringes);
    }
    let v = &pattern.values;
    let mut maxima: Vec<usize> = Vec::new();
    let mut minima: Vec<usize> = Vec::new();
    for w in idx.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        if v[b] > v[a] && v[b] > v[c] {
            maxima.push(b);
        } else if v[b] < v[a] && v[b] < v[c] {
            minima.push(b);
        }
    }
    if minima.is_empty() || maxima.is_empty() {
        return Err(Error::NoFringes);
    }
    let central = *maxima
        .iter()
        .max_by(|&&a, &&b| v[a].partial_cmp(&v[b]).unwrap())
        .unwrap();
    let left = minima.iter().rev().find(|&&i| i < central);
    let right = minima.iter().find(|&&i| i > central);
    let i_min = match (left, right) {
        (Some(&l), Some(&r)) => 0.5 * (v[l] + v[r]),
        (Some(&l), None) => v[l],
        (None, Some(&r)) => v[r],
        (None, None) => return Err(Error::NoFringes),
    };
    let i_max = v[central];
    if i_max + i_min <= 0.0 {
        return Err(Error::NoFringes);
    }
    Ok((i_max - i_min) / (i_max + i_min))
}

/// Textbook far-field fringe spacing lambda L / separation; the independent
/// yardstick used by the tests.
pub fn fringe_spacing(lambda: f64, screen_distance: f64, separation: f64) -> f64 {
    lambda * screen_distance / separation
}

/// Time of arrival at the screen for wavelength `lambda`; re-exported here
/// for symmetry with `intensity_single`.
pub fn time_of_arrival(lambda: f64, screen_distance: f64, mass: f64) -> Result<f64> {
    time_of_flight(screen_distance, lambda, mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::{BeamConfig, WavelengthSpec};
    use crate::config::QuadratureOrders;
    use crate::constants::{HBAR, NEUTRON_MASS};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn test_config(sigma_k: f64, x0: f64, grid_points: usize) -> ExperimentConfig {
        let grating = GratingGeometry::new(22e-6, 22e-6, 104e-6).unwrap();
        let lambda_mean = 2e-9;
        let half = DetectorConfig::default_half_span(lambda_mean, 5.0, grating.center_separation());
        ExperimentConfig {
            beam: BeamConfig {
                entrance_slit_width: 20e-6,
                source_to_grating: 5.0,
                wave_number_spread: sigma_k,
                wavelength: WavelengthSpec::truncated_gaussian(lambda_mean, 0.0).unwrap(),
                mean_forward_speed: None,
            },
            grating,
            detector: DetectorConfig {
                screen_distance: 5.0,
                resolution: x0,
                grid: DetectorConfig::uniform_grid(half, grid_points),
            },
            environment: None,
            model_velocities: None,
            quadrature: QuadratureOrders::default(),
            particle_mass: NEUTRON_MASS,
        }
    }

    fn packet(center: f64, sigma: f64, kappa: f64) -> ChirpedGaussianPacket {
        ChirpedGaussianPacket::normalized_with_position_std(center, sigma, kappa).unwrap()
    }

    #[test]
    fn single_term_has_no_fringes() {
        let det = DetectorConfig {
            screen_distance: 5.0,
            resolution: 0.0,
            grid: DetectorConfig::uniform_grid(500e-6, 801),
        };
        let sup = PacketSuperposition::from_packet(packet(0.0, 10e-6, 0.0));
        let pattern = intensity_single(&sup, 2e-9, &det, NEUTRON_MASS).unwrap();
        assert!(pattern.values.iter().all(|&v| v >= 0.0));
        match visibility(&pattern, (-400e-6, 400e-6)) {
            Err(Error::NoFringes) => {}
            other => panic!("expected no fringes, got {other:?}"),
        }
    }

    #[test]
    fn symmetric_two_slit_fringe_spacing() {
        // The textbook spacing assumes an envelope much wider than one
        // fringe; narrow apertures relative to the separation keep the
        // envelope-gradient peak pull well under 1%.
        let mut config = test_config(0.0, 0.0, 2001);
        config.grating = GratingGeometry::new(3e-6, 3e-6, 47e-6).unwrap();
        let half = DetectorConfig::default_half_span(
            2e-9,
            5.0,
            config.grating.center_separation(),
        );
        config.detector.grid = DetectorConfig::uniform_grid(half, 2001);
        let pattern = intensity_lambda(
            &config,
            &ModelChoice::Two(ModelTwoParams { p1: 0.0, p2: 0.0 }),
            2e-9,
        )
        .unwrap();
        // Even about x = 0.
        let n = pattern.len();
        let peak = pattern.max_value();
        for i in 0..n {
            let mirrored = pattern.values[n - 1 - i];
            assert!((pattern.values[i] - mirrored).abs() <= 1e-9 * peak);
        }
        // Central maxima spacing matches lambda L / separation within 1%.
        let expect = fringe_spacing(2e-9, 5.0, config.grating.center_separation());
        let spacing = measured_central_spacing(&pattern);
        assert!(
            (spacing - expect).abs() / expect < 0.01,
            "spacing {spacing} vs {expect}"
        );
    }

    /// Peak positions via strict local maxima plus parabolic refinement.
    pub(crate) fn measured_central_spacing(pattern: &IntensityPattern) -> f64 {
        let v = &pattern.values;
        let x = &pattern.positions;
        let mut peaks: Vec<f64> = Vec::new();
        let floor = pattern.max_value() * 0.02;
        for i in 1..v.len() - 1 {
            if v[i] > v[i - 1] && v[i] > v[i + 1] && v[i] > floor {
                let denom = v[i - 1] - 2.0 * v[i] + v[i + 1];
                let shift = if denom != 0.0 {
                    0.5 * (v[i - 1] - v[i + 1]) / denom
                } else {
                    0.0
                };
                peaks.push(x[i] + shift * (x[i + 1] - x[i]));
            }
        }
        assert!(peaks.len() >= 3, "need at least 3 peaks, got {}", peaks.len());
        // Central peak = closest to 0; spacing = mean gap to its neighbors.
        let c = peaks
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap()
            .0;
        assert!(c > 0 && c + 1 < peaks.len(), "central peak at edge");
        0.5 * (peaks[c + 1] - peaks[c - 1])
    }

    #[test]
    fn sigma_k_zero_reduces_to_single() {
        let config = test_config(0.0, 0.0, 801);
        let model = ModelChoice::Two(ModelTwoParams { p1: 0.0, p2: 0.0 });
        let averaged = intensity_lambda(&config, &model, 2e-9).unwrap();
        let psi_in = incoming_packet(&config.beam, 0.0, 2e-9).unwrap();
        let psi_out = model.outgoing(&psi_in, &config.grating).unwrap();
        let single = intensity_single(&psi_out, 2e-9, &config.detector, NEUTRON_MASS).unwrap();
        for (a, b) in averaged.values.iter().zip(&single.values) {
            assert!((a - b).abs() <= 1e-12 * single.max_value());
        }
    }

    #[test]
    fn visibility_decreases_with_wave_number_spread() {
        let model = ModelChoice::Two(ModelTwoParams { p1: 0.0, p2: 0.0 });
        let window = 120e-6;
        let mut last = f64::INFINITY;
        for sigma_k in [0.0, 5000.0, 20000.0] {
            let config = test_config(sigma_k, 0.0, 1201);
            let pattern = intensity_lambda(&config, &model, 2e-9).unwrap();
            let vis = visibility(&pattern, (-window, window)).unwrap();
            assert!(
                vis <= last + 1e-12,
                "visibility must not increase: {vis} after {last} at sigma_k {sigma_k}"
            );
            assert!(sigma_k == 0.0 || vis < last, "strict decrease expected");
            last = vis;
        }
    }

    #[test]
    fn monte_carlo_cross_check_of_k_average() {
        use rand::{Rng, SeedableRng};
        let config = test_config(5000.0, 0.0, 201);
        let model = ModelChoice::Two(ModelTwoParams { p1: 0.0, p2: 0.0 });
        let quad = intensity_lambda(&config, &model, 2e-9).unwrap();

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let samples = 100_000;
        let mut mc = vec![0.0; config.detector.grid.len()];
        for _ in 0..samples {
            // Box-Muller standard normal.
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            let z = (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos();
            let k = 5000.0 * z;
            let psi_in = incoming_packet(&config.beam, k, 2e-9).unwrap();
            let psi_out = model.outgoing(&psi_in, &config.grating).unwrap();
            let single =
                intensity_single(&psi_out, 2e-9, &config.detector, NEUTRON_MASS).unwrap();
            for (acc, v) in mc.iter_mut().zip(&single.values) {
                *acc += v / samples as f64;
            }
        }
        let peak = quad.max_value();
        let rms = (mc
            .iter()
            .zip(&quad.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / mc.len() as f64)
            .sqrt();
        assert!(rms / peak < 0.005, "MC rms {:.4}% of peak", 100.0 * rms / peak);
    }

    #[test]
    fn convolve_identity_and_constant() {
        let grid = DetectorConfig::uniform_grid(100e-6, 401);
        let constant =
            IntensityPattern::new(grid.clone(), vec![3.5; 401], PatternMeta::default()).unwrap();
        let same = detector_convolve(&constant, 0.0).unwrap();
        assert_eq!(same.values, constant.values);
        let smoothed = detector_convolve(&constant, 20e-6).unwrap();
        for v in smoothed.values {
            assert!((v - 3.5).abs() < 1e-12);
        }
    }

    #[test]
    fn convolve_flattens_cosine_over_full_period() {
        // Period 80 um, grid step 0.4 um: window ends land on grid nodes.
        let period = 80e-6;
        let grid = DetectorConfig::uniform_grid(400e-6, 2001);
        let values: Vec<f64> = grid
            .iter()
            .map(|&x| 2.0 + (2.0 * PI * x / period).cos())
            .collect();
        let pattern = IntensityPattern::new(grid, values, PatternMeta::default()).unwrap();
        let flat = detector_convolve(&pattern, period).unwrap();
        for (x, v) in flat.positions.iter().zip(&flat.values) {
            if x.abs() <= 400e-6 - period {
                assert!((v - 2.0).abs() < 1e-6, "at {x}: {v}");
            }
        }
    }

    #[test]
    fn convolve_preserves_interior_mass() {
        let config = test_config(0.0, 0.0, 1601);
        let model = ModelChoice::One;
        let pattern = intensity_lambda(&config, &model, 2e-9).unwrap();
        let x0 = 40e-6;
        let smooth = detector_convolve(&pattern, x0).unwrap();
        // Compare integrals over a region a window clear of the ends.
        let (lo, hi) = (
            pattern.positions[0] + 2.0 * x0,
            pattern.positions[pattern.len() - 1] - 2.0 * x0,
        );
        let mass = |p: &IntensityPattern| -> f64 {
            p.positions
                .windows(2)
                .zip(p.values.windows(2))
                .filter(|(xw, _)| xw[0] >= lo && xw[1] <= hi)
                .map(|(xw, vw)| 0.5 * (vw[0] + vw[1]) * (xw[1] - xw[0]))
                .sum()
        };
        let (m0, m1) = (mass(&pattern), mass(&smooth));
        assert!((m0 - m1).abs() / m0 < 1e-3, "mass {m0} vs {m1}");
    }

    #[test]
    fn convolve_rejects_coarse_grid() {
        let grid = DetectorConfig::uniform_grid(100e-6, 11);
        let pattern = IntensityPattern::new(grid, vec![1.0; 11], PatternMeta::default()).unwrap();
        match detector_convolve(&pattern, 30e-6) {
            Err(Error::GridTooCoarse { .. }) => {}
            other => panic!("expected coarse-grid error, got {other:?}"),
        }
    }

    #[test]
    fn total_reduces_to_single_for_monochromatic_zero_x0() {
        let config = test_config(0.0, 0.0, 801);
        let model = ModelChoice::Two(ModelTwoParams { p1: -5e-30, p2: 4e-30 });
        let total = intensity_total(&config, &model).unwrap();
        let psi_in = incoming_packet(&config.beam, 0.0, 2e-9).unwrap();
        let psi_out = model.outgoing(&psi_in, &config.grating).unwrap();
        let single = intensity_single(&psi_out, 2e-9, &config.detector, NEUTRON_MASS).unwrap();
        let peak = single.max_value();
        for (a, b) in total.values.iter().zip(&single.values) {
            assert!((a - b).abs() <= 1e-9 * peak);
        }
    }

    #[test]
    fn two_line_spectrum_is_half_sum() {
        let mut config = test_config(2000.0, 0.0, 601);
        let (l1, l2) = (2e-9, 2.2e-9);
        config.beam.wavelength =
            WavelengthSpec::tabulated(vec![(l1, 1.0), (l2, 1.0)]).unwrap();
        let model = ModelChoice::One;
        let total = intensity_total(&config, &model).unwrap();
        let a = intensity_lambda(&config, &model, l1).unwrap();
        let b = intensity_lambda(&config, &model, l2).unwrap();
        let peak = total.max_value();
        for i in 0..total.len() {
            let expect = 0.5 * (a.values[i] + b.values[i]);
            assert!((total.values[i] - expect).abs() <= 1e-12 * peak);
        }
    }

    #[test]
    fn wavelength_spread_damps_high_order_fringes_more() {
        let model = ModelChoice::Two(ModelTwoParams { p1: 0.0, p2: 0.0 });
        let fringe = fringe_spacing(2e-9, 5.0, 126e-6);
        let vis = |rel_spread: f64, window: (f64, f64)| -> f64 {
            let mut config = test_config(0.0, 0.0, 2001);
            config.beam.wavelength =
                WavelengthSpec::truncated_gaussian(2e-9, rel_spread * 2e-9).unwrap();
            let pattern = intensity_total(&config, &model).unwrap();
            visibility(&pattern, window).unwrap()
        };
        let central = (-0.6 * fringe, 0.6 * fringe);
        let order3 = (2.4 * fringe, 3.6 * fringe);
        let damping_central = vis(0.05, central) / vis(0.0, central);
        let damping_order3 = vis(0.05, order3) / vis(0.0, order3);
        assert!(
            damping_order3 < damping_central,
            "order-3 damping {damping_order3} vs central {damping_central}"
        );
    }

    #[test]
    fn visibility_analytic_two_wave() {
        // Two fully overlapping packets with amplitude ratio r: V = 2r/(1+r^2).
        let sigma = 4000e-6;
        let dk = 2.0 * PI / 80e-6; // fringe period 80 um
        let p1 = packet(0.0, sigma, 0.0);
        let p2 = packet(0.0, sigma, dk);
        let grid = DetectorConfig::uniform_grid(120e-6, 10001);

        for (r, expect, tol) in [(1.0, 1.0, 1e-6), (0.5, 0.8, 5e-3)] {
            let sup = PacketSuperposition::new(vec![
                (Complex64::new(1.0, 0.0), p1),
                (Complex64::new(r, 0.0), p2),
            ]);
            let values: Vec<f64> = grid.iter().map(|&x| sup.evaluate(x).norm_sqr()).collect();
            let pattern =
                IntensityPattern::new(grid.clone(), values, PatternMeta::default()).unwrap();
            let vis = visibility(&pattern, (-120e-6, 120e-6)).unwrap();
            assert!((vis - expect).abs() < tol, "r={r}: vis {vis} vs {expect}");
        }
    }

    #[test]
    fn visibility_scale_invariant() {
        let config = test_config(0.0, 0.0, 1201);
        let model = ModelChoice::One;
        let pattern = intensity_lambda(&config, &model, 2e-9).unwrap();
        let scaled = IntensityPattern::new(
            pattern.positions.clone(),
            pattern.values.iter().map(|v| v * 123.4).collect(),
            pattern.metadata.clone(),
        )
        .unwrap();
        let a = visibility(&pattern, (-150e-6, 150e-6)).unwrap();
        let b = visibility(&scaled, (-150e-6, 150e-6)).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn quadrature_convergence_at_default_orders() {
        let make = |k_order: usize, lambda_order: usize| -> IntensityPattern {
            let mut config = test_config(4976.0, 0.0, 501);
            config.beam.wavelength =
                WavelengthSpec::truncated_gaussian(2e-9, 0.05e-9).unwrap();
            config.quadrature = QuadratureOrders { k_order, lambda_order };
            intensity_total(&config, &ModelChoice::One).unwrap()
        };
        let base = make(41, 21);
        let fine = make(82, 42);
        let peak = base.max_value();
        let max_diff = base
            .values
            .iter()
            .zip(&fine.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_diff / peak < 1e-6, "quadrature drift {}", max_diff / peak);
    }

    #[test]
    fn model_one_and_model_two_agree_when_matched() {
        // Feed model 2-style packets with the widths, centers, momenta and
        // weights extracted from model 1; central patterns agree within 5%.
        let config = test_config(0.0, 0.0, 1201);
        let psi_in = incoming_packet(&config.beam, 0.0, 2e-9).unwrap();
        let (out1, dec) = model_one_outgoing(&psi_in, &config.grating).unwrap();

        let mut terms = Vec::new();
        for (idx, slit) in [1usize, 2].iter().enumerate() {
            let info = dec.slit(*slit);
            let (w, p) = out1.terms()[idx];
            let norm = (w * p.amplitude()).norm() * (PI / (2.0 * info.alpha)).sqrt().sqrt();
            let phi = ChirpedGaussianPacket::new(
                Complex64::new((2.0 * info.alpha / PI).powf(0.25), 0.0),
                info.center,
                info.alpha,
                0.0,
                info.momentum / HBAR,
            )
            .unwrap();
            terms.push((Complex64::new(norm, 0.0), phi));
        }
        let matched = PacketSuperposition::new(terms);

        let pat1 = intensity_single(&out1, 2e-9, &config.detector, NEUTRON_MASS).unwrap();
        let pat2 = intensity_single(&matched, 2e-9, &config.detector, NEUTRON_MASS).unwrap();
        let scale = pat1.max_value() / pat2.max_value();
        let fringe = fringe_spacing(2e-9, 5.0, config.grating.center_separation());
        for i in 0..pat1.len() {
            let x = pat1.positions[i];
            if x.abs() <= fringe {
                let a = pat1.values[i];
                let b = pat2.values[i] * scale;
                assert!(
                    (a - b).abs() <= 0.05 * pat1.max_value(),
                    "at {x}: {a} vs {b}"
                );
            }
        }
    }
}
