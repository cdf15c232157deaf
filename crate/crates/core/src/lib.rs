//! Exact triangulation of simplicial lattice cones.
//!
//! The crate triangulates a simplicial cone `C ⊂ R^d` by stellar
//! subdivision, first into cones whose multiplicities only have prime
//! factors below `e^(τd)` (the bounded-prime-factors triangulation), and then
//! into unimodular cones, either by a direct desingularizer or by
//! transferring unimodular triangulations of prime-multiplicity cones. Every
//! vector-length bound along the way is audited with exact arithmetic.

pub mod bench;
pub mod bpft;
pub mod cone;
pub mod error;
pub mod format;
pub mod generators;
pub mod lattice;
pub mod linalg;
pub mod numtheory;
pub mod precise;
pub mod provenance;
pub mod unimodular;
pub mod verify;

pub use cone::{make_cone, Containment, DilationFactor, HilbertBasis, SimplicialCone};
pub use error::{Error, Result};
pub use lattice::{build_quotient, ParElement, QuotientGroup};
pub use linalg::{determinant, smith_normal_form, solve_rational, IntMatrix, RationalVector, SNFDecomposition};
pub use precise::Real;
pub use bpft::{find_avoiding, run_bpft, LabeledCone, TriangulationState};
pub use provenance::{Origin, ProvenanceTree};
pub use unimodular::{desingularize_baseline, pipeline_finres, prime_transfer, Strategy, TransferCertificate, UnimodularTriangulation};
pub use verify::{audit_bpft_bounds, audit_unimodular_bounds, check_f_triangulation, check_partition, BoundReport, ValidityReport};
pub use generators::{prime_example, random_cone, two_dim_prime, ConeKind, ConeSpec};
pub use format::{ConeFile, TriangulationFile};
