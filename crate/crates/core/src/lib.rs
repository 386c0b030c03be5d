//! Symmetry-based characterization of multipartite entanglement for pure
//! states on finite tensor products.
//!
//! The central object is the stabilizer algebra of a state under a chosen
//! partition of its factors: the block-local Hermitian generators whose
//! embedded sum fixes the state up to phase.  From it the crate derives
//! subset entanglement dimensions, no-sharing certificates, discrete
//! stabilizer components, and a partition-indexed fingerprint for
//! comparing entanglement types.  Supporting modules cover Schmidt
//! decompositions, finite-group gluing (subdirect products via their
//! quotient data), the operator algebra generated by reduced density
//! matrices, and statevector demonstrations of entanglement-powered
//! protocols.
//!
//! Conventions used throughout: factors are numbered from 1 in text form
//! and indexed from 0 in code; basis indices are row-major with factor 1
//! most significant; partitions are written like "1,2|3".

pub mod classify;
pub mod dmalgebra;
pub mod goursat;
pub mod linalg;
pub mod protocols;
pub mod schmidt;
pub mod stabilizer;
pub mod state;

pub use classify::{
    enumerate_partitions, fingerprint, fingerprint_json, fingerprint_with,
    maximal_entanglement_report, same_entanglement_type, EntclassError, Fingerprint,
    PartitionRecord, RestrictionReport, SubsetRecord,
};
pub use dmalgebra::{
    centralizer_in_local, dm_generators, dm_report, lie_closure, CentralizerReport, DmError,
    OperatorSpan,
};
pub use goursat::{
    are_isomorphic, closure, goursat_check, load_spec, product_subgroup, quotient,
    reconstruct_from_pair, slice_subgroup, FiniteGroupSpec, GoursatError, GoursatMode,
    GoursatReport, MultTable, ProductGroup, QuotientStructure, SubgroupElements,
};
pub use linalg::{CMat, CVec, RMat, RVec};
pub use protocols::{
    chsh_value, cnot_equivalence_check, entanglement_swap, gf2_nullspace, simon_run,
    simon_stabilizer_check, superdense_encode, superdense_gram, superdense_success, teleport,
    teleport_outcomes, CnotEquivalence, MeasurementRecord, SimonInstance, SimonRun,
    SimonStabilizerReport, SwapReport, TaskError, TeleportResult,
};
pub use schmidt::{
    bipartite_group_name, bipartite_signature, group_degeneracies, schmidt_decompose,
    BipartiteGroupSignature, DegeneracyProfile, GroupFactor, SchmidtData, SchmidtError,
};
pub use stabilizer::{
    check_no_sharing, entanglement_dim, full_entanglement_dim, isomorphism_dims, search_discrete,
    stabilizer_algebra, subspace_sum, verify_discrete, ComponentCertificate, DiscreteStabilizer,
    LocalHermitianTuple, NoSharingReport, ParamLayout, SearchOptions, StabilizerAlgebra,
    StabilizerError, SupportMask, DEFAULT_TOL,
};
pub use state::{
    apply_local, coarse_grain, gates, named_state, named_state_defaults, random_state,
    read_state_json, write_state_json, Partition, PureState, StateError,
};
