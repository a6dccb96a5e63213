//! Least-squares estimation of the beam divergence (and, for the two-packet
//! model, the transverse momenta) from measured intensity data.
//!
//! Scale and background enter the objective linearly, so they are solved
//! exactly at every trial point (weighted linear least squares) while the
//! simplex explores only the nonlinear shape parameters.

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::grating::ModelTwoParams;
use crate::interp::CubicSpline;
use crate::optim::{nelder_mead, SimplexOptions};
use crate::pattern::{intensity_total, ModelChoice};

/// Measured intensity data: positions (m), counts, optional uncertainties.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub positions: Vec<f64>,
    pub counts: Vec<f64>,
    pub sigmas: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(positions: Vec<f64>, counts: Vec<f64>, sigmas: Option<Vec<f64>>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::invalid("dataset must not be empty"));
        }
        if counts.len() != positions.len() {
            return Err(Error::invalid("positions and counts must have equal length"));
        }
        for w in positions.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::invalid(
                    "dataset positions must be strictly increasing",
                ));
            }
        }
        if counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::invalid("counts must be finite and nonnegative"));
        }
        if let Some(s) = &sigmas {
            if s.len() != positions.len() {
                return Err(Error::invalid("sigmas must match positions in length"));
            }
            if s.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::invalid("count uncertainties must be positive"));
            }
        }
        Ok(Self {
            positions,
            counts,
            sigmas,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Least-squares weights: 1/sigma^2 when uncertainties are given, else 1.
    pub fn weights(&self) -> Vec<f64> {
        match &self.sigmas {
            Some(s) => s.iter().map(|v| 1.0 / (v * v)).collect(),
            None => vec![1.0; self.len()],
        }
    }
}

/// Full parameter point of the fit model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    /// p1/m, m/s; used by model two only.
    pub p1_over_m: f64,
    /// p2/m, m/s; used by model two only.
    pub p2_over_m: f64,
    /// Wave-number spread, 1/m.
    pub sigma_k: f64,
    /// Multiplicative intensity scale.
    pub scale: f64,
    /// Constant additive background.
    pub background: f64,
}

impl FitParams {
    fn model_choice(&self, model_id: &str, particle_mass: f64) -> Result<ModelChoice> {
        match model_id {
            "one" => Ok(ModelChoice::One),
            "two" => Ok(ModelChoice::Two(ModelTwoParams {
                p1: self.p1_over_m * particle_mass,
                p2: self.p2_over_m * particle_mass,
            })),
            other => Err(Error::invalid(format!("unknown model id '{other}'"))),
        }
    }
}

/// Box bounds on the nonlinear shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitBounds {
    pub sigma_k: (f64, f64),
    pub p_over_m: (f64, f64),
}

impl Default for FitBounds {
    fn default() -> Self {
        Self {
            sigma_k: (1e-2, 1e7),
            p_over_m: (-1.0, 1.0),
        }
    }
}

/// One fitted parameter with its unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedParameter {
    pub name: String,
    pub value: f64,
    pub unit: String,
}

/// Fit outcome. `converged` is authoritative: a false value means the
/// restart schedule was exhausted without meeting the simplex tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub parameters: Vec<FittedParameter>,
    pub residual_sum_of_squares: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub restarts: usize,
}

impl FitResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.parameters
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.value)
    }

    pub fn params(&self) -> FitParams {
        FitParams {
            p1_over_m: self.value("p1_over_m").unwrap_or(0.0),
            p2_over_m: self.value("p2_over_m").unwrap_or(0.0),
            sigma_k: self.value("sigma_k").unwrap_or(0.0),
            scale: self.value("scale").unwrap_or(1.0),
            background: self.value("background").unwrap_or(0.0),
        }
    }
}

/// Model intensity at the requested positions: scale * I(x) + background,
/// with I evaluated on the configured screen grid and interpolated onto the
/// positions by cubic spline.
pub fn predict(
    params: &FitParams,
    config: &ExperimentConfig,
    model_id: &str,
    positions: &[f64],
) -> Result<Vec<f64>> {
    let shape = predict_shape(params, config, model_id, positions)?;
    Ok(shape
        .iter()
        .map(|m| params.scale * m + params.background)
        .collect())
}

/// The unscaled model shape I(x) at the data positions.
fn predict_shape(
    params: &FitParams,
    config: &ExperimentConfig,
    model_id: &str,
    positions: &[f64],
) -> Result<Vec<f64>> {
    if !(params.sigma_k >= 0.0) {
        return Err(Error::invalid("sigma_k must be nonnegative"));
    }
    let mut working = config.clone();
    working.beam.wave_number_spread = params.sigma_k;
    let model = params.model_choice(model_id, config.particle_mass)?;
    let pattern = intensity_total(&working, &model)?;
    let spline = CubicSpline::new(&pattern.positions, &pattern.values)?;
    positions.iter().map(|&x| spline.eval(x)).collect()
}

/// Exact weighted linear least squares for (scale, background) given the
/// model shape. Scale is clamped nonnegative.
fn profile_linear(shape: &[f64], counts: &[f64], weights: &[f64]) -> (f64, f64) {
    let (mut sw, mut sm, mut smm, mut sy, mut smy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((m, y), w) in shape.iter().zip(counts).zip(weights) {
        sw += w;
        sm += w * m;
        smm += w * m * m;
        sy += w * y;
        smy += w * m * y;
    }
    let denom = sw * smm - sm * sm;
    if denom.abs() <= f64::EPSILON * sw * smm {
        return (0.0, sy / sw);
    }
    let mut scale = (sw * smy - sm * sy) / denom;
    if scale < 0.0 {
        scale = 0.0;
    }
    let background = (sy - scale * sm) / sw;
    (scale, background)
}

fn weighted_rss(shape: &[f64], counts: &[f64], weights: &[f64], scale: f64, bg: f64) -> f64 {
    shape
        .iter()
        .zip(counts)
        .zip(weights)
        .map(|((m, y), w)| {
            let r = y - (scale * m + bg);
            w * r * r
        })
        .sum()
}

const MAX_RESTARTS: usize = 3;

/// Weighted least-squares fit of the chosen model to the dataset.
///
/// The simplex explores [ln sigma_k] (model one) or [p1/m, p2/m, ln sigma_k]
/// (model two) inside `bounds`; scale and background are profiled out
/// exactly at every step. Restarts perturb the incumbent deterministically.
/// Exhausting the schedule without convergence is an explicit error.
pub fn fit_model(
    dataset: &Dataset,
    config: &ExperimentConfig,
    model_id: &str,
    init: &FitParams,
    bounds: &FitBounds,
) -> Result<FitResult> {
    if dataset.is_empty() {
        return Err(Error::invalid("dataset must not be empty"));
    }
    if !(bounds.sigma_k.0 > 0.0 && bounds.sigma_k.1 > bounds.sigma_k.0) {
        return Err(Error::invalid("sigma_k bounds must be positive and ordered"));
    }
    if !(bounds.p_over_m.1 > bounds.p_over_m.0) {
        return Err(Error::invalid("p/m bounds must be ordered"));
    }
    let is_two = match model_id {
        "one" => false,
        "two" => true,
        other => return Err(Error::invalid(format!("unknown model id '{other}'"))),
    };
    let sigma_init = init.sigma_k.clamp(bounds.sigma_k.0, bounds.sigma_k.1);
    if is_two {
        for (name, v) in [("p1_over_m", init.p1_over_m), ("p2_over_m", init.p2_over_m)] {
            if v < bounds.p_over_m.0 || v > bounds.p_over_m.1 {
                return Err(Error::invalid(format!(
                    "initial {name} = {v} outside bounds {:?}",
                    bounds.p_over_m
                )));
            }
        }
    }

    let weights = dataset.weights();
    let mut evaluations_total = 0usize;
    let mut iterations_total = 0usize;

    // Shape-parameter vector: model two prepends the two velocities.
    let pack = |p1: f64, p2: f64, sigma: f64| -> Vec<f64> {
        if is_two {
            vec![p1, p2, sigma.ln()]
        } else {
            vec![sigma.ln()]
        }
    };
    let unpack = |x: &[f64]| -> (f64, f64, f64) {
        if is_two {
            (x[0], x[1], x[2].exp())
        } else {
            (0.0, 0.0, x[0].exp())
        }
    };

    let mut objective = |x: &[f64]| -> f64 {
        let (p1, p2, sigma) = unpack(x);
        if sigma < bounds.sigma_k.0 || sigma > bounds.sigma_k.1 {
            return f64::INFINITY;
        }
        if is_two
            && (p1 < bounds.p_over_m.0
                || p1 > bounds.p_over_m.1
                || p2 < bounds.p_over_m.0
                || p2 > bounds.p_over_m.1)
        {
            return f64::INFINITY;
        }
        let params = FitParams {
            p1_over_m: p1,
            p2_over_m: p2,
            sigma_k: sigma,
            scale: 1.0,
            background: 0.0,
        };
        match predict_shape(&params, config, model_id, &dataset.positions) {
            Ok(shape) => {
                let (scale, bg) = profile_linear(&shape, &dataset.counts, &weights);
                weighted_rss(&shape, &dataset.counts, &weights, scale, bg)
            }
            Err(_) => f64::INFINITY,
        }
    };

    let x_init = pack(init.p1_over_m, init.p2_over_m, sigma_init);
    let f_init = objective(&x_init);
    if !f_init.is_finite() {
        return Err(Error::invalid(
            "objective is not finite at the initial parameters",
        ));
    }

    let step: Vec<f64> = if is_two {
        let p_step = (0.1 * (bounds.p_over_m.1 - bounds.p_over_m.0)).min(0.002);
        vec![p_step, p_step, 0.5]
    } else {
        vec![0.5]
    };
    let opts = SimplexOptions {
        max_iterations: 1600 * x_init.len(),
        f_tol: 1e-10,
        x_tol: 1e-8,
    };

    let mut best = nelder_mead(&mut objective, &x_init, &step, &opts);
    evaluations_total += best.evaluations;
    iterations_total += best.iterations;
    let mut restarts = 0usize;

    // Restart from deterministic perturbations of the incumbent. A restart
    // that converges without materially improving the incumbent confirms the
    // minimum; a materially better one becomes the new incumbent.
    while restarts < MAX_RESTARTS {
        restarts += 1;
        let perturbed: Vec<f64> = best
            .x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let sign = if (i + restarts) % 2 == 0 { 1.0 } else { -1.0 };
                v + sign * step[i] * 0.3 / restarts as f64
            })
            .collect();
        evaluations_total += 1;
        if !objective(&perturbed).is_finite() {
            continue;
        }
        let run = nelder_mead(&mut objective, &perturbed, &step, &opts);
        evaluations_total += run.evaluations;
        iterations_total += run.iterations;
        let improved = run.value < best.value - 1e-9 * best.value.abs();
        if run.value < best.value {
            best = run;
        }
        if best.converged && !improved {
            break;
        }
    }

    if !best.converged {
        return Err(Error::FitDidNotConverge {
            restarts,
            evaluations: evaluations_total,
        });
    }
    let converged = best.converged;

    let (p1, p2, sigma) = unpack(&best.x);
    let final_params = FitParams {
        p1_over_m: p1,
        p2_over_m: p2,
        sigma_k: sigma,
        scale: 1.0,
        background: 0.0,
    };
    let shape = predict_shape(&final_params, config, model_id, &dataset.positions)?;
    let (scale, background) = profile_linear(&shape, &dataset.counts, &weights);
    let rss = weighted_rss(&shape, &dataset.counts, &weights, scale, background);
    let scale = scale.max(f64::MIN_POSITIVE);

    let mut parameters = Vec::new();
    if is_two {
        parameters.push(FittedParameter {
            name: "p1_over_m".into(),
            value: p1,
            unit: "m/s".into(),
        });
        parameters.push(FittedParameter {
            name: "p2_over_m".into(),
            value: p2,
            unit: "m/s".into(),
        });
    }
    parameters.push(FittedParameter {
        name: "sigma_k".into(),
        value: sigma,
        unit: "1/m".into(),
    });
    parameters.push(FittedParameter {
        name: "scale".into(),
        value: scale,
        unit: "counts".into(),
    });
    parameters.push(FittedParameter {
        name: "background".into(),
        value: background,
        unit: "counts".into(),
    });

    Ok(FitResult {
        model: model_id.to_string(),
        parameters,
        residual_sum_of_squares: rss,
        converged,
        iterations: iterations_total,
        evaluations: evaluations_total,
        restarts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::{BeamConfig, WavelengthSpec};
    use crate::config::QuadratureOrders;
    use crate::constants::NEUTRON_MASS;
    use crate::grating::GratingGeometry;
    use crate::pattern::DetectorConfig;

    fn fit_config() -> ExperimentConfig {
        let grating = GratingGeometry::new(22e-6, 22e-6, 104e-6).unwrap();
        ExperimentConfig {
            beam: BeamConfig {
                entrance_slit_width: 20e-6,
                source_to_grating: 5.0,
                wave_number_spread: 4976.0,
                wavelength: WavelengthSpec::truncated_gaussian(2e-9, 0.0).unwrap(),
                mean_forward_speed: None,
            },
            grating,
            detector: DetectorConfig {
                screen_distance: 5.0,
                resolution: 0.0,
                grid: DetectorConfig::uniform_grid(500e-6, 301),
            },
            environment: None,
            model_velocities: None,
            quadrature: QuadratureOrders {
                k_order: 41,
                lambda_order: 21,
            },
            particle_mass: NEUTRON_MASS,
        }
    }

    fn truth() -> FitParams {
        FitParams {
            p1_over_m: -0.0034,
            p2_over_m: 0.0029,
            sigma_k: 4976.0,
            scale: 1000.0,
            background: 50.0,
        }
    }

    fn data_positions() -> Vec<f64> {
        (0..161)
            .map(|i| -480e-6 + 6e-6 * i as f64)
            .collect()
    }

    #[test]
    fn predict_identity_scaling() {
        let config = fit_config();
        let positions = data_positions();
        let raw = predict(
            &FitParams {
                scale: 1.0,
                background: 0.0,
                ..truth()
            },
            &config,
            "two",
            &positions,
        )
        .unwrap();
        let scaled = predict(
            &FitParams {
                scale: 3.0,
                background: 7.0,
                ..truth()
            },
            &config,
            "two",
            &positions,
        )
        .unwrap();
        for (r, s) in raw.iter().zip(&scaled) {
            assert!((s - (3.0 * r + 7.0)).abs() < 1e-9 * (1.0 + s.abs()));
        }
    }

    #[test]
    fn predict_at_grid_nodes_matches_direct_evaluation() {
        let config = fit_config();
        let params = truth();
        // Use grid nodes themselves as positions: spline must be exact there.
        let nodes: Vec<f64> = config.detector.grid.iter().copied().step_by(10).collect();
        let via_predict = predict(&params, &config, "two", &nodes).unwrap();

        let mut working = config.clone();
        working.beam.wave_number_spread = params.sigma_k;
        let model = ModelChoice::Two(ModelTwoParams {
            p1: params.p1_over_m * NEUTRON_MASS,
            p2: params.p2_over_m * NEUTRON_MASS,
        });
        let pattern = intensity_total(&working, &model).unwrap();
        let direct: Vec<f64> = pattern
            .positions
            .iter()
            .zip(&pattern.values)
            .filter(|(x, _)| nodes.iter().any(|n| n == *x))
            .map(|(_, v)| params.scale * v + params.background)
            .collect();
        assert_eq!(direct.len(), via_predict.len());
        let peak = via_predict.iter().cloned().fold(0.0f64, f64::max);
        for (a, b) in via_predict.iter().zip(&direct) {
            assert!((a - b).abs() <= 1e-8 * peak);
        }
    }

    #[test]
    fn predict_background_only() {
        let config = fit_config();
        let flat = predict(
            &FitParams {
                scale: 0.0,
                background: 42.0,
                ..truth()
            },
            &config,
            "two",
            &data_positions(),
        )
        .unwrap();
        for v in flat {
            assert!((v - 42.0).abs() < 1e-12);
        }
    }

    #[test]
    fn profile_linear_recovers_exact_coefficients() {
        let shape = vec![0.0, 1.0, 4.0, 2.0, 0.5];
        let counts: Vec<f64> = shape.iter().map(|m| 3.0 * m + 11.0).collect();
        let weights = vec![1.0; 5];
        let (scale, bg) = profile_linear(&shape, &counts, &weights);
        assert!((scale - 3.0).abs() < 1e-12);
        assert!((bg - 11.0).abs() < 1e-12);

        // Constant shape degenerates to background only.
        let flat = vec![2.0; 5];
        let (scale, bg) = profile_linear(&flat, &[5.0; 5], &weights);
        assert_eq!(scale, 0.0);
        assert!((bg - 5.0).abs() < 1e-12);
    }

    #[test]
    fn noise_free_round_trip_model_two() {
        let config = fit_config();
        let positions = data_positions();
        let data = predict(&truth(), &config, "two", &positions).unwrap();
        let dataset = Dataset::new(positions, data, None).unwrap();

        let init = FitParams {
            p1_over_m: -0.002,
            p2_over_m: 0.002,
            sigma_k: 3000.0,
            scale: 1.0,
            background: 0.0,
        };
        let result =
            fit_model(&dataset, &config, "two", &init, &FitBounds::default()).unwrap();
        assert!(result.converged);
        let t = truth();
        for (name, expect) in [
            ("p1_over_m", t.p1_over_m),
            ("p2_over_m", t.p2_over_m),
            ("sigma_k", t.sigma_k),
            ("scale", t.scale),
            ("background", t.background),
        ] {
            let got = result.value(name).unwrap();
            assert!(
                (got - expect).abs() / expect.abs() < 0.01,
                "{name}: {got} vs {expect}"
            );
        }
        // Noise-free residuals are tiny relative to the peak.
        let peak = dataset.counts.iter().cloned().fold(0.0f64, f64::max);
        let rms = (result.residual_sum_of_squares / dataset.len() as f64).sqrt();
        assert!(rms < 1e-6 * peak, "rms {rms} vs peak {peak}");
    }

    #[test]
    fn round_trip_model_one() {
        let mut config = fit_config();
        config.quadrature.k_order = 41;
        let positions = data_positions();
        let t = FitParams {
            p1_over_m: 0.0,
            p2_over_m: 0.0,
            sigma_k: 4976.0,
            scale: 500.0,
            background: 20.0,
        };
        let data = predict(&t, &config, "one", &positions).unwrap();
        let dataset = Dataset::new(positions, data, None).unwrap();
        let init = FitParams {
            sigma_k: 2000.0,
            scale: 1.0,
            background: 0.0,
            p1_over_m: 0.0,
            p2_over_m: 0.0,
        };
        let result =
            fit_model(&dataset, &config, "one", &init, &FitBounds::default()).unwrap();
        assert!(result.converged);
        let got = result.value("sigma_k").unwrap();
        assert!((got - t.sigma_k).abs() / t.sigma_k < 0.01, "sigma_k {got}");
        assert!(result.value("p1_over_m").is_none());
    }

    #[test]
    fn fit_invariant_under_count_rescaling() {
        let config = fit_config();
        let positions = data_positions();
        let data = predict(&truth(), &config, "two", &positions).unwrap();
        let scaled: Vec<f64> = data.iter().map(|v| 2.5 * v).collect();
        let init = FitParams {
            p1_over_m: -0.003,
            p2_over_m: 0.0025,
            sigma_k: 4000.0,
            scale: 1.0,
            background: 0.0,
        };
        let a = fit_model(
            &Dataset::new(positions.clone(), data, None).unwrap(),
            &config,
            "two",
            &init,
            &FitBounds::default(),
        )
        .unwrap();
        let b = fit_model(
            &Dataset::new(positions, scaled, None).unwrap(),
            &config,
            "two",
            &init,
            &FitBounds::default(),
        )
        .unwrap();
        for name in ["p1_over_m", "p2_over_m", "sigma_k"] {
            let (va, vb) = (a.value(name).unwrap(), b.value(name).unwrap());
            assert!(
                (va - vb).abs() <= 1e-6 * va.abs(),
                "{name}: {va} vs {vb}"
            );
        }
        let (sa, sb) = (a.value("scale").unwrap(), b.value("scale").unwrap());
        assert!((sb - 2.5 * sa).abs() / sb < 1e-6);
    }

    #[test]
    fn objective_never_worse_than_initial() {
        let config = fit_config();
        let positions = data_positions();
        let data = predict(&truth(), &config, "two", &positions).unwrap();
        let dataset = Dataset::new(positions.clone(), data, None).unwrap();
        let init = FitParams {
            p1_over_m: -0.001,
            p2_over_m: 0.001,
            sigma_k: 8000.0,
            scale: 900.0,
            background: 40.0,
        };
        let result =
            fit_model(&dataset, &config, "two", &init, &FitBounds::default()).unwrap();
        let initial_pred = predict(&init, &config, "two", &dataset.positions).unwrap();
        let weights = dataset.weights();
        let initial_obj: f64 = initial_pred
            .iter()
            .zip(&dataset.counts)
            .zip(&weights)
            .map(|((p, y), w)| w * (y - p) * (y - p))
            .sum();
        assert!(result.residual_sum_of_squares <= initial_obj);
    }

    #[test]
    fn rejects_bad_inputs() {
        let config = fit_config();
        assert!(Dataset::new(vec![], vec![], None).is_err());
        assert!(Dataset::new(vec![0.0, 0.0], vec![1.0, 1.0], None).is_err());
        assert!(Dataset::new(vec![0.0, 1.0], vec![1.0, -1.0], None).is_err());
        let dataset = Dataset::new(vec![0.0, 1e-6], vec![1.0, 2.0], None).unwrap();
        let init = FitParams {
            p1_over_m: 5.0, // outside default bounds
            p2_over_m: 0.0,
            sigma_k: 1000.0,
            scale: 1.0,
            background: 0.0,
        };
        assert!(fit_model(&dataset, &config, "two", &init, &FitBounds::default()).is_err());
        assert!(fit_model(&dataset, &config, "nine", &init, &FitBounds::default()).is_err());
    }
}
