//! Experiment configuration: a TOML file with mandatory unit suffixes on
//! every dimensional value ("20 um", "4976 1/m", "1 atm"). Bare numbers are
//! rejected so a misread unit can never slip through silently.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use toml::Value;

use crate::beam::{BeamConfig, WavelengthSpec};
use crate::constants::NEUTRON_MASS;
use crate::decoherence::EnvironmentConfig;
use crate::error::{Error, Result};
use crate::grating::{GratingGeometry, ModelTwoParams};
use crate::pattern::{DetectorConfig, ModelChoice};

/// Quadrature orders for the wave-number and wavelength averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureOrders {
    pub k_order: usize,
    pub lambda_order: usize,
}

impl Default for QuadratureOrders {
    fn default() -> Self {
        Self {
            k_order: 41,
            lambda_order: 21,
        }
    }
}

/// Default number of screen grid points.
pub const DEFAULT_GRID_POINTS: usize = 2001;

/// Everything a simulation or fit run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub beam: BeamConfig,
    pub grating: GratingGeometry,
    pub detector: DetectorConfig,
    pub environment: Option<EnvironmentConfig>,
    /// Transverse momenta of the two-packet model as velocities p_j / m, m/s.
    pub model_velocities: Option<(f64, f64)>,
    pub quadrature: QuadratureOrders,
    /// Mass of the diffracted particle, kg.
    pub particle_mass: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.beam.validate()?;
        self.grating.validate()?;
        self.detector.validate()?;
        if let Some(env) = &self.environment {
            env.validate()?;
        }
        if !(self.particle_mass > 0.0) {
            return Err(Error::invalid("particle mass must be positive"));
        }
        if self.quadrature.k_order < 1 || self.quadrature.lambda_order < 1 {
            return Err(Error::invalid("quadrature orders must be >= 1"));
        }
        Ok(())
    }

    /// Momenta of the two-packet model, scaled by the particle mass.
    pub fn model_two_params(&self) -> Option<ModelTwoParams> {
        self.model_velocities.map(|(v1, v2)| ModelTwoParams {
            p1: v1 * self.particle_mass,
            p2: v2 * self.particle_mass,
        })
    }

    /// Resolve a CLI model id against this configuration.
    pub fn model_choice(&self, id: &str) -> Result<ModelChoice> {
        match id {
            "one" => Ok(ModelChoice::One),
            "two" => self.model_two_params().map(ModelChoice::Two).ok_or_else(|| {
                Error::config(
                    "model",
                    "model two requires p1_over_m and p2_over_m in the [model] section",
                )
            }),
            other => Err(Error::invalid(format!(
                "unknown model id '{other}' (expected 'one' or 'two')"
            ))),
        }
    }

    /// Parse a configuration file; relative table paths resolve against the
    /// file's directory. Returns the config plus any consistency warnings.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, Vec<String>)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base)
    }

    /// Parse configuration text. `base_dir` anchors relative file references.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<(Self, Vec<String>)> {
        let root: Value = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<config>", e.to_string()))?;
        let root = root
            .as_table()
            .ok_or_else(|| Error::config("<config>", "top level must be a table"))?;

        let mut seen = BTreeSet::new();

        // [beam]
        let beam_tbl = require_table(root, "beam", &mut seen)?;
        let mut beam_seen = BTreeSet::new();
        let entrance_slit_width = quantity(
            beam_tbl,
            "beam",
            "entrance_slit_width",
            Dimension::Length,
            &mut beam_seen,
        )?;
        let source_to_grating = quantity(
            beam_tbl,
            "beam",
            "source_to_grating",
            Dimension::Length,
            &mut beam_seen,
        )?;
        let wave_number_spread = quantity(
            beam_tbl,
            "beam",
            "wave_number_spread",
            Dimension::InverseLength,
            &mut beam_seen,
        )?;
        let mean_forward_speed = quantity_opt(
            beam_tbl,
            "beam",
            "mean_forward_speed",
            Dimension::Speed,
            &mut beam_seen,
        )?;
        let wavelength = parse_wavelength(beam_tbl, base_dir, &mut beam_seen)?;
        reject_unknown(beam_tbl, "beam", &beam_seen)?;

        // [grating]
        let grating_tbl = require_table(root, "grating", &mut seen)?;
        let mut grating_seen = BTreeSet::new();
        let a1 = quantity(grating_tbl, "grating", "a1", Dimension::Length, &mut grating_seen)?;
        let a2 = quantity(grating_tbl, "grating", "a2", Dimension::Length, &mut grating_seen)?;
        let d = quantity(grating_tbl, "grating", "d", Dimension::Length, &mut grating_seen)?;
        reject_unknown(grating_tbl, "grating", &grating_seen)?;
        for (key, v) in [("a1", a1), ("a2", a2), ("d", d)] {
            if !(v > 0.0) {
                return Err(Error::config(
                    format!("grating.{key}"),
                    format!("must be positive, got {v}"),
                ));
            }
        }
        let grating = GratingGeometry::new(a1, a2, d)?;

        // [detector]
        let det_tbl = require_table(root, "detector", &mut seen)?;
        let mut det_seen = BTreeSet::new();
        let distance = quantity(det_tbl, "detector", "distance", Dimension::Length, &mut det_seen)?;
        let resolution = quantity(
            det_tbl,
            "detector",
            "resolution",
            Dimension::Length,
            &mut det_seen,
        )?;
        let grid_points = integer_opt(det_tbl, "detector", "grid_points", &mut det_seen)?
            .unwrap_or(DEFAULT_GRID_POINTS as i64);
        if grid_points < 2 {
            return Err(Error::config("detector.grid_points", "must be >= 2"));
        }
        let half_span = quantity_opt(
            det_tbl,
            "detector",
            "grid_half_span",
            Dimension::Length,
            &mut det_seen,
        )?;
        reject_unknown(det_tbl, "detector", &det_seen)?;

        // [quadrature] (optional)
        let quadrature = match optional_table(root, "quadrature", &mut seen)? {
            Some(tbl) => {
                let mut q_seen = BTreeSet::new();
                let k_order = integer_opt(tbl, "quadrature", "k_order", &mut q_seen)?
                    .unwrap_or(QuadratureOrders::default().k_order as i64);
                let lambda_order = integer_opt(tbl, "quadrature", "lambda_order", &mut q_seen)?
                    .unwrap_or(QuadratureOrders::default().lambda_order as i64);
                reject_unknown(tbl, "quadrature", &q_seen)?;
                if k_order < 1 || lambda_order < 1 {
                    return Err(Error::config("quadrature", "orders must be >= 1"));
                }
                QuadratureOrders {
                    k_order: k_order as usize,
                    lambda_order: lambda_order as usize,
                }
            }
            None => QuadratureOrders::default(),
        };

        // [particle] (optional)
        let particle_mass = match optional_table(root, "particle", &mut seen)? {
            Some(tbl) => {
                let mut p_seen = BTreeSet::new();
                let mass = quantity_opt(tbl, "particle", "mass", Dimension::Mass, &mut p_seen)?
                    .unwrap_or(NEUTRON_MASS);
                reject_unknown(tbl, "particle", &p_seen)?;
                mass
            }
            None => NEUTRON_MASS,
        };

        // [environment] (optional)
        let environment = match optional_table(root, "environment", &mut seen)? {
            Some(tbl) => {
                let mut e_seen = BTreeSet::new();
                let env = EnvironmentConfig {
                    pressure: quantity(
                        tbl,
                        "environment",
                        "pressure",
                        Dimension::Pressure,
                        &mut e_seen,
                    )?,
                    temperature: quantity(
                        tbl,
                        "environment",
                        "temperature",
                        Dimension::Temperature,
                        &mut e_seen,
                    )?,
                    cross_section: quantity(
                        tbl,
                        "environment",
                        "cross_section",
                        Dimension::Area,
                        &mut e_seen,
                    )?,
                    gas_mass: quantity_opt(
                        tbl,
                        "environment",
                        "gas_mass",
                        Dimension::Mass,
                        &mut e_seen,
                    )?
                    .unwrap_or(crate::constants::AIR_MOLECULE_MASS),
                };
                reject_unknown(tbl, "environment", &e_seen)?;
                env.validate()?;
                Some(env)
            }
            None => None,
        };

        // [model] (optional): transverse momenta given as velocities p/m.
        let model_velocities = match optional_table(root, "model", &mut seen)? {
            Some(tbl) => {
                let mut m_seen = BTreeSet::new();
                let v1 = quantity(tbl, "model", "p1_over_m", Dimension::Speed, &mut m_seen)?;
                let v2 = quantity(tbl, "model", "p2_over_m", Dimension::Speed, &mut m_seen)?;
                reject_unknown(tbl, "model", &m_seen)?;
                Some((v1, v2))
            }
            None => None,
        };

        reject_unknown_top(root, &seen)?;

        let beam = BeamConfig {
            entrance_slit_width,
            source_to_grating,
            wave_number_spread,
            wavelength,
            mean_forward_speed,
        };
        beam.validate()
            .map_err(|e| Error::config("beam", e.to_string()))?;

        let half_span = half_span.unwrap_or_else(|| {
            DetectorConfig::default_half_span(
                beam.wavelength.mean(),
                distance,
                grating.center_separation(),
            )
        });
        let detector = DetectorConfig {
            screen_distance: distance,
            resolution,
            grid: DetectorConfig::uniform_grid(half_span, grid_points as usize),
        };

        let config = ExperimentConfig {
            beam,
            grating,
            detector,
            environment,
            model_velocities,
            quadrature,
            particle_mass,
        };
        config.validate()?;
        let warnings = config.beam.consistency_warnings(config.particle_mass);
        Ok((config, warnings))
    }

    /// Canonical serialization in SI base units. Parsing the output yields a
    /// config equal to `self` (the screen grid is regenerated from its span).
    pub fn to_toml_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[beam]");
        let _ = writeln!(
            s,
            "entrance_slit_width = \"{:e} m\"",
            self.beam.entrance_slit_width
        );
        let _ = writeln!(s, "source_to_grating = \"{:e} m\"", self.beam.source_to_grating);
        let _ = writeln!(
            s,
            "wave_number_spread = \"{:e} 1/m\"",
            self.beam.wave_number_spread
        );
        if let Some(v) = self.beam.mean_forward_speed {
            let _ = writeln!(s, "mean_forward_speed = \"{v:e} m/s\"");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "[beam.wavelength]");
        match &self.beam.wavelength {
            WavelengthSpec::TruncatedGaussian { mean, std } => {
                let _ = writeln!(s, "mean = \"{mean:e} m\"");
                let _ = writeln!(s, "std = \"{std:e} m\"");
            }
            WavelengthSpec::Tabulated { pairs } => {
                let lambdas: Vec<String> =
                    pairs.iter().map(|(l, _)| format!("\"{l:e} m\"")).collect();
                let weights: Vec<String> = pairs.iter().map(|(_, w)| format!("{w:e}")).collect();
                let _ = writeln!(s, "lambdas = [{}]", lambdas.join(", "));
                let _ = writeln!(s, "weights = [{}]", weights.join(", "));
            }
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "[grating]");
        let _ = writeln!(s, "a1 = \"{:e} m\"", self.grating.aperture_1);
        let _ = writeln!(s, "a2 = \"{:e} m\"", self.grating.aperture_2);
        let _ = writeln!(s, "d = \"{:e} m\"", self.grating.gap);
        let _ = writeln!(s);
        let _ = writeln!(s, "[detector]");
        let _ = writeln!(s, "distance = \"{:e} m\"", self.detector.screen_distance);
        let _ = writeln!(s, "resolution = \"{:e} m\"", self.detector.resolution);
        let _ = writeln!(s, "grid_points = {}", self.detector.grid.len());
        let half_span = self
            .detector
            .grid
            .last()
            .copied()
            .unwrap_or(0.0)
            .max(-self.detector.grid.first().copied().unwrap_or(0.0));
        let _ = writeln!(s, "grid_half_span = \"{half_span:e} m\"");
        if let Some(env) = &self.environment {
            let _ = writeln!(s);
            let _ = writeln!(s, "[environment]");
            let _ = writeln!(s, "pressure = \"{:e} Pa\"", env.pressure);
            let _ = writeln!(s, "temperature = \"{:e} K\"", env.temperature);
            let _ = writeln!(s, "cross_section = \"{:e} m^2\"", env.cross_section);
            let _ = writeln!(s, "gas_mass = \"{:e} kg\"", env.gas_mass);
        }
        if let Some((v1, v2)) = self.model_velocities {
            let _ = writeln!(s);
            let _ = writeln!(s, "[model]");
            let _ = writeln!(s, "p1_over_m = \"{v1:e} m/s\"");
            let _ = writeln!(s, "p2_over_m = \"{v2:e} m/s\"");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "[quadrature]");
        let _ = writeln!(s, "k_order = {}", self.quadrature.k_order);
        let _ = writeln!(s, "lambda_order = {}", self.quadrature.lambda_order);
        let _ = writeln!(s);
        let _ = writeln!(s, "[particle]");
        let _ = writeln!(s, "mass = \"{:e} kg\"", self.particle_mass);
        s
    }
}

/// Physical dimension a config value must carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    InverseLength,
    Speed,
    Pressure,
    Temperature,
    Area,
    Mass,
}

impl Dimension {
    fn name(&self) -> &'static str {
        match self {
            Dimension::Length => "length",
            Dimension::InverseLength => "inverse length",
            Dimension::Speed => "speed",
            Dimension::Pressure => "pressure",
            Dimension::Temperature => "temperature",
            Dimension::Area => "area",
            Dimension::Mass => "mass",
        }
    }

    fn factor(&self, unit: &str) -> Option<f64> {
        let table: &[(&str, f64)] = match self {
            Dimension::Length => &[
                ("m", 1.0),
                ("cm", 1e-2),
                ("mm", 1e-3),
                ("um", 1e-6),
                ("\u{b5}m", 1e-6),
                ("nm", 1e-9),
                ("pm", 1e-12),
                ("angstrom", 1e-10),
            ],
            Dimension::InverseLength => &[
                ("1/m", 1.0),
                ("1/cm", 1e2),
                ("1/mm", 1e3),
                ("1/um", 1e6),
                ("1/nm", 1e9),
            ],
            Dimension::Speed => &[
                ("m/s", 1.0),
                ("mm/s", 1e-3),
                ("um/s", 1e-6),
                ("km/s", 1e3),
            ],
            Dimension::Pressure => &[
                ("Pa", 1.0),
                ("mPa", 1e-3),
                ("hPa", 1e2),
                ("kPa", 1e3),
                ("bar", 1e5),
                ("mbar", 1e2),
                ("atm", crate::constants::ATMOSPHERE),
                ("torr", crate::constants::ATMOSPHERE / 760.0),
            ],
            Dimension::Temperature => &[("K", 1.0), ("mK", 1e-3)],
            Dimension::Area => &[
                ("m^2", 1.0),
                ("cm^2", 1e-4),
                ("mm^2", 1e-6),
                ("um^2", 1e-12),
                ("nm^2", 1e-18),
                ("barn", 1e-28),
            ],
            Dimension::Mass => &[
                ("kg", 1.0),
                ("g", 1e-3),
                ("mg", 1e-6),
                ("u", 1.660_539_066_60e-27),
                ("amu", 1.660_539_066_60e-27),
                ("Da", 1.660_539_066_60e-27),
            ],
        };
        table
            .iter()
            .find(|(name, _)| *name == unit)
            .map(|(_, f)| *f)
    }
}

/// Parse a `"<value> <unit>"` string into SI. `key` names the config path
/// for diagnostics.
pub fn parse_quantity(raw: &str, dim: Dimension, key: &str) -> Result<f64> {
    let parts: Vec<&str> = raw.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(Error::config(
            key,
            format!("expected \"<value> <unit>\", got \"{raw}\""),
        ));
    }
    let value: f64 = parts[0].parse().map_err(|_| {
        Error::config(key, format!("cannot parse number from \"{}\"", parts[0]))
    })?;
    let factor = dim.factor(parts[1]).ok_or_else(|| {
        Error::config(
            key,
            format!("unknown {} unit \"{}\"", dim.name(), parts[1]),
        )
    })?;
    Ok(value * factor)
}

type Table = toml::map::Map<String, Value>;

fn require_table<'a>(
    root: &'a Table,
    name: &str,
    seen: &mut BTreeSet<String>,
) -> Result<&'a Table> {
    seen.insert(name.to_string());
    root.get(name)
        .ok_or_else(|| Error::config(name, "required section missing"))?
        .as_table()
        .ok_or_else(|| Error::config(name, "must be a table"))
}

fn optional_table<'a>(
    root: &'a Table,
    name: &str,
    seen: &mut BTreeSet<String>,
) -> Result<Option<&'a Table>> {
    seen.insert(name.to_string());
    match root.get(name) {
        None => Ok(None),
        Some(v) => v
            .as_table()
            .map(Some)
            .ok_or_else(|| Error::config(name, "must be a table")),
    }
}

fn string_value<'a>(tbl: &'a Table, section: &str, key: &str) -> Result<&'a str> {
    let v = tbl
        .get(key)
        .ok_or_else(|| Error::config(format!("{section}.{key}"), "required key missing"))?;
    v.as_str().ok_or_else(|| {
        Error::config(
            format!("{section}.{key}"),
            "dimensional values must be strings with units, e.g. \"20 um\"",
        )
    })
}

fn quantity(
    tbl: &Table,
    section: &str,
    key: &str,
    dim: Dimension,
    seen: &mut BTreeSet<String>,
) -> Result<f64> {
    seen.insert(key.to_string());
    parse_quantity(
        string_value(tbl, section, key)?,
        dim,
        &format!("{section}.{key}"),
    )
}

fn quantity_opt(
    tbl: &Table,
    section: &str,
    key: &str,
    dim: Dimension,
    seen: &mut BTreeSet<String>,
) -> Result<Option<f64>> {
    seen.insert(key.to_string());
    if !tbl.contains_key(key) {
        return Ok(None);
    }
    Ok(Some(quantity(tbl, section, key, dim, seen)?))
}

fn integer_opt(
    tbl: &Table,
    section: &str,
    key: &str,
    seen: &mut BTreeSet<String>,
) -> Result<Option<i64>> {
    seen.insert(key.to_string());
    match tbl.get(key) {
        None => Ok(None),
        Some(v) => v.as_integer().map(Some).ok_or_else(|| {
            Error::config(format!("{section}.{key}"), "must be an integer")
        }),
    }
}

fn reject_unknown(tbl: &Table, section: &str, seen: &BTreeSet<String>) -> Result<()> {
    for key in tbl.keys() {
        if !seen.contains(key) {
            return Err(Error::config(
                format!("{section}.{key}"),
                "unknown key",
            ));
        }
    }
    Ok(())
}

fn reject_unknown_top(root: &Table, seen: &BTreeSet<String>) -> Result<()> {
    for key in root.keys() {
        if !seen.contains(key) {
            return Err(Error::config(key, "unknown section"));
        }
    }
    Ok(())
}

fn parse_wavelength(
    beam_tbl: &Table,
    base_dir: &Path,
    beam_seen: &mut BTreeSet<String>,
) -> Result<WavelengthSpec> {
    beam_seen.insert("wavelength".to_string());
    let tbl = beam_tbl
        .get("wavelength")
        .ok_or_else(|| Error::config("beam.wavelength", "required section missing"))?
        .as_table()
        .ok_or_else(|| Error::config("beam.wavelength", "must be a table"))?;

    let mut seen = BTreeSet::new();
    let has_mean = tbl.contains_key("mean");
    let has_file = tbl.contains_key("table_file");
    let has_inline = tbl.contains_key("lambdas") || tbl.contains_key("weights");
    match (has_mean, has_file, has_inline) {
        (true, false, false) => {
            let mean = quantity(tbl, "beam.wavelength", "mean", Dimension::Length, &mut seen)?;
            let std = quantity_opt(tbl, "beam.wavelength", "std", Dimension::Length, &mut seen)?
                .unwrap_or(0.0);
            reject_unknown(tbl, "beam.wavelength", &seen)?;
            WavelengthSpec::truncated_gaussian(mean, std)
                .map_err(|e| Error::config("beam.wavelength", e.to_string()))
        }
        (false, true, false) => {
            seen.insert("table_file".to_string());
            let rel = string_value(tbl, "beam.wavelength", "table_file")?;
            reject_unknown(tbl, "beam.wavelength", &seen)?;
            let path: PathBuf = base_dir.join(rel);
            if !path.exists() {
                return Err(Error::config(
                    "beam.wavelength.table_file",
                    format!("referenced file {} does not exist", path.display()),
                ));
            }
            crate::io::load_wavelength_table(&path)
        }
        (false, false, true) => {
            seen.insert("lambdas".to_string());
            seen.insert("weights".to_string());
            let lambdas = tbl
                .get("lambdas")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::config("beam.wavelength.lambdas", "must be an array"))?;
            let weights = tbl
                .get("weights")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::config("beam.wavelength.weights", "must be an array"))?;
            reject_unknown(tbl, "beam.wavelength", &seen)?;
            if lambdas.len() != weights.len() {
                return Err(Error::config(
                    "beam.wavelength",
                    "lambdas and weights must have equal length",
                ));
            }
            let mut pairs = Vec::with_capacity(lambdas.len());
            for (i, (l, w)) in lambdas.iter().zip(weights).enumerate() {
                let l = l.as_str().ok_or_else(|| {
                    Error::config(
                        format!("beam.wavelength.lambdas[{i}]"),
                        "must be a string with a unit",
                    )
                })?;
                let l = parse_quantity(
                    l,
                    Dimension::Length,
                    &format!("beam.wavelength.lambdas[{i}]"),
                )?;
                let w = w.as_float().or_else(|| w.as_integer().map(|v| v as f64));
                let w = w.ok_or_else(|| {
                    Error::config(
                        format!("beam.wavelength.weights[{i}]"),
                        "must be a number",
                    )
                })?;
                pairs.push((l, w));
            }
            WavelengthSpec::tabulated(pairs)
                .map_err(|e| Error::config("beam.wavelength", e.to_string()))
        }
        _ => Err(Error::config(
            "beam.wavelength",
            "give exactly one of: mean [+ std], table_file, or lambdas + weights",
        )),
    }
}
