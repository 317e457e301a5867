//! Spectrum coexistence between a GEO and a LEO multibeam downlink, with a
//! LEO precoder that adds a super-common rate-splitting stream decodable by
//! every terminal of both systems.
//!
//! The crate is organised bottom-up:
//!
//! - [`antenna`] and [`channel`]: snapshot geometry, radiation patterns and
//!   noise-normalised channel realisations with imperfect CSI.
//! - [`signal`]: SINR and achievable-rate algebra for the super-common,
//!   common and private streams, plus interference leakage towards GEO users.
//! - [`conic`]: a solver-agnostic conic program (linear, exponential-cone and
//!   one Hermitian PSD variable) backed by Clarabel.
//! - [`optimizer`]: the lifted quadratic forms, the convex-concave iteration,
//!   Gaussian randomization with feasibility rescaling, and rate-portion
//!   recovery.
//! - [`baselines`]: the proposed scheme and six comparison schemes.
//! - [`scenario`]: configuration, Monte-Carlo experiments and CSV output.

// Linked for the BLAS/LAPACK symbols the PSD cone needs.
extern crate openblas_src;

pub mod antenna;
pub mod baselines;
pub mod channel;
pub mod conic;
pub mod linalg;
pub mod optimizer;
pub mod scenario;
pub mod signal;

pub use baselines::{SchemeId, SchemeSolution};
pub use channel::ChannelSet;
pub use scenario::{ExperimentRecord, ScenarioConfig};
pub use signal::{PrecoderSolution, RateBreakdown};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
