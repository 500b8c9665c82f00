//! Tree-structured meaning representations for task-oriented response
//! generation, with constrained beam-search decoding that guarantees the
//! generated annotated response realizes exactly the content of its MR.
//!
//! The pipeline pieces:
//!
//! * [`ontology`], [`mr`], [`token`]: the data model and its linearized
//!   bracket format.
//! * [`constraint`]: the incremental acceptance automaton.
//! * [`scorer`] and [`beam`]: next-token distributions and decoding.
//! * [`delex`], [`preprocess`]: value placeholders and reference filtering.
//! * [`metrics`]: tree accuracy, BLEU-4 and diversity.
//! * [`weather`]: a synthetic weather corpus generator.
//! * [`corpus`]: the JSONL corpus format.

pub mod beam;
pub mod constraint;
pub mod corpus;
pub mod delex;
pub mod metrics;
pub mod mr;
pub mod ontology;
pub mod preprocess;
pub mod random;
pub mod scorer;
pub mod token;
pub mod weather;

pub use constraint::{build_constraints, check_tree, ConstraintTracker};
pub use mr::{AnnotatedTree, MrNode, MrTree};
pub use ontology::{NodeKind, Ontology};
pub use token::Token;
