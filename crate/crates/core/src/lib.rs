//! Computational universal algebra for finite algebras: congruence
//! lattices, higher-dimensional congruences over direction sets, the two
//! term-condition commutators they induce, and the term sequences
//! (Mal'cev, Day, and cube completion terms) that witness how congruences
//! permute.

pub mod algebra;
pub mod congruence;
pub mod corpus;
pub mod cube;
pub mod commutator;
pub mod day;
pub mod error;
pub mod kiss;
pub mod polymorphism;
pub mod relation;
pub mod term;

pub use algebra::{colex_cmp, make_derived_algebra, DerivedAlgebra, Element, FiniteAlgebra, OperationTable};
pub use commutator::{centrality_closure, commutator_membership, has_centrality, hypercommutator, tc_commutator, CentralityReport};
pub use congruence::{all_congruences, cg, Congruence};
pub use cube::{Cube, CubeShape, Line};
pub use day::{find_day_terms, find_malcev_term, shifting_lemma_check, DaySequence, ShiftingReport};
pub use error::{Error, Result};
pub use kiss::{
    delta_membership, delta_shift, find_kiss2, rect, Kiss2, KissSearchOptions, KissTower,
    MembershipReport, ShiftOutcome,
};
pub use polymorphism::{
    check_shared_delta, greatest_clone_slice, polymorphisms, preserves, CloneSliceReport,
    PolymorphismSet, PreservationReport, SharedDeltaReport,
};
pub use relation::{
    delta, delta_via_split, directional_compose, generate_m, promote_almost_congruence,
    transitive_closure, Budget, CubeRelation,
};
pub use term::{check_identity, enumerate_term_operations, eval_term, term_table, TermEnumeration, TermTree};
