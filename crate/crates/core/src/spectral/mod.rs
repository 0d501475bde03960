//! Transfer matrices, quasienergy spectra, edge modes and phase classification.

pub mod dispersion;
pub mod edge;
pub mod kicks;
pub mod metric;
pub mod phase;
pub mod transfer;

pub use dispersion::{
    allowed_momenta, analytic_quasienergies, count_real_modes, dispersion_continuous, floquet_dispersion,
    DispersionPoint, ModeClass, RealModeCensus,
};
pub use edge::{detect_edge_modes, EdgeKind, EdgeModeRecord, EdgeOptions, EdgeScan};
pub use kicks::{build_kick_forms, FloquetKicks, Kick, QuadraticForm};
pub use metric::{pseudo_hermiticity_certificate, MetricFamily, MetricOperator, MetricTarget};
pub use phase::{classify_params, classify_phase_from_spectrum, PhaseDiagnostics, PhaseThresholds};
pub use transfer::{
    build_transfer_matrix, qe_distance, quasienergies_from_transfer, quasienergy, SpectrumReport, TransferMatrix,
};
