//! Double-slit matter-wave diffraction toolkit.
//!
//! The beam is a chirped Gaussian wave packet whose parameters follow from
//! the source geometry; the grating turns it into two packets (either by an
//! exact Gaussian-transmission product or as two weighted drifting
//! Gaussians); the screen intensity is the incoherent average over the wave
//! number and wavelength spreads of the source, convolved with the detector
//! response. A split-step Fourier solver provides an independent numerical
//! check of the closed forms and of the transverse momentum kicks, and a
//! derivative-free fitter estimates the model parameters from measured data.

pub mod beam;
pub mod config;
pub mod constants;
pub mod decoherence;
pub mod error;
pub mod fit;
pub mod grating;
pub mod interp;
pub mod io;
pub mod optim;
pub mod packet;
pub mod pattern;
pub mod quadrature;
pub mod solver;

pub use beam::{incoming_packet, k_quadrature, lambda_quadrature, BeamConfig, WavelengthSpec};
pub use config::{ExperimentConfig, QuadratureOrders};
pub use decoherence::{
    coherence_margin, coherence_report, coherence_time, time_of_flight, CoherenceMargin,
    CoherenceReport, EnvironmentConfig, Verdict,
};
pub use error::{Error, Result};
pub use fit::{fit_model, predict, Dataset, FitBounds, FitParams, FitResult};
pub use grating::{
    model_one_outgoing, model_two_outgoing, GratingGeometry, ModelOneDecomposition,
    ModelTwoParams, SlitPacketInfo,
};
pub use packet::{ChirpedGaussianPacket, PacketSuperposition};
pub use pattern::{
    detector_convolve, fringe_spacing, intensity_lambda, intensity_single, intensity_total,
    visibility, DetectorConfig, IntensityPattern, ModelChoice, PatternMeta,
};
pub use solver::{evolve_free, lobe_momenta, pass_grating, BarrierSpec, GridState};
