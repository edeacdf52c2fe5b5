//! Genuinely multipartite entangled states with bilocal structure.
//!
//! A two-qudit seed with a local hidden-variable model is pushed through a
//! pair of isometric channels `V_M|i⟩ = |i⟩^{⊗M}`. The lifted `N`-party state
//! inherits a bilocal model across the induced cut, and because both sides of
//! the cut live in symmetric subspaces, entanglement of the seed becomes
//! genuine multipartite entanglement of the lift.
//!
//! The crate builds the states ([`states`]), the channels and dual maps
//! ([`channels`]), measurements ([`measurements`]) and checks every verifiable
//! step numerically ([`locality`], [`entanglement`]).

pub mod channels;
pub mod entanglement;
pub mod error;
pub mod linalg;
pub mod locality;
pub mod matrix;
pub mod measurements;
pub mod partition;
pub mod random;
pub mod report;
pub mod shape;
pub mod states;

pub use channels::{
    channel_from_isometry, check_left_invertible, embed_channel, isometry_embed, lift_bipartite, lift_kpartite,
    Isometry, QuantumChannel,
};
pub use entanglement::{
    certify_gme_bipartite, certify_gme_klift, is_npt, swap_invariance_check, symmetric_support_check, CutEvidence,
    GmeStatus, GmeVerdict, GroupSupport,
};
pub use error::{Error, Result};
pub use linalg::{min_eigenvalue, partial_trace, partial_transpose, permutation_operator, sym_projector};
pub use locality::{
    certify_bilocal, entanglement_threshold, local_threshold, verify_lifting_identity, BilocalCertificate,
    BilocalStatus, IdentityConfig, IdentityReport, ThresholdRecord,
};
pub use matrix::{ComplexMatrix, C64};
pub use measurements::{
    born_table, check_no_signalling, dual_povm_product, projective_basis_povm, random_povm, Povm, ProbTable,
    SettingsTable,
};
pub use partition::KPartition;
pub use report::CertReport;
pub use shape::SubsystemShape;
pub use states::{
    colored_noise_projector, ghz, isotropic, max_entangled, sigma_ghz, sigma_werner, werner, DensityMatrix, Family,
    NoiseParameter,
};
