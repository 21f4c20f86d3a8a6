//! Discrete-time quantum walks on a square lattice of evanescently coupled
//! waveguides, with synthetic Abelian (magnetic) and non-Abelian (Rashba)
//! gauge fields and static phase disorder.
//!
//! Everything is generic over the real scalar type ([`Real`]); the aliases
//! below fix it to `f64` (working precision) or `f32`.

pub mod disorder;
pub mod error;
pub mod lattice;
pub mod num;
pub mod operators;
pub mod single_photon;
pub mod spectrum;
pub mod two_photon;

pub use disorder::{derive_seed, dress, sample_disorder, DisorderConfig, DisorderRealization, SAMPLER_ID};
pub use error::{Error, Result};
pub use lattice::{is_edge, site_coord, site_index, LatticeSpec, SiteCoord};
pub use num::{Complex, Real};
pub use operators::{
    beam_splitter_x, beam_splitter_y, build_step, build_step_nonabelian, plaquette_holonomy, unitarity_deviation,
    wilson_loop, CouplerBlock, Layer, Mode, StepOperator,
};
pub use single_photon::{
    apply_step, edge_probability, ensemble_run, evolve, transport_efficiency, variance, Absorber, AbsorberModel,
    EnsembleSeries, ObservableSeries, PhotonState, RunSettings,
};
pub use spectrum::{butterfly_sweep, quasienergies, QuasienergySpectrum};
pub use two_photon::{
    both_edge_probability, correlation_matrix, evolve_pair, init_pair, mean_distance, CorrelationMatrix, Metric,
    Symmetry, TwoPhotonState,
};

pub type C64 = Complex<f64>;
pub type C32 = Complex<f32>;

pub type LatticeSpec64 = LatticeSpec<f64>;
pub type StepOperator64 = StepOperator<f64>;
pub type PhotonState64 = PhotonState<f64>;
pub type TwoPhotonState64 = TwoPhotonState<f64>;
pub type ObservableSeries64 = ObservableSeries<f64>;
pub type DisorderRealization64 = DisorderRealization<f64>;
pub type QuasienergySpectrum64 = QuasienergySpectrum<f64>;

pub type LatticeSpec32 = LatticeSpec<f32>;
pub type StepOperator32 = StepOperator<f32>;
pub type PhotonState32 = PhotonState<f32>;
pub type TwoPhotonState32 = TwoPhotonState<f32>;
