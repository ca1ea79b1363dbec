//! Random probabilistic relational model (PRM) benchmark generation.
//!
//! The pipeline has three steps:
//!
//! 1. generate a PRM: a connected relational schema ([`schema`]), an
//!    attribute-level dependency structure with slot chains ([`deps`],
//!    [`chain`]) and conditional probability tables ([`cpd`]);
//! 2. instantiate it: a scale-free relational skeleton ([`skeleton`]) and the
//!    ground Bayesian network over it ([`ground`]);
//! 3. populate a database instance by forward sampling.
//!
//! [`metrics`] scores structures against data and [`io`] handles the model
//! document, SQL and CSV output. [`pipeline`] wires everything together.
//!
//! Every random step takes an explicit random stream; given the same seed the
//! whole pipeline is bit-for-bit reproducible.

pub mod chain;
pub mod cpd;
pub mod dag;
pub mod deps;
mod error;
pub mod ground;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod schema;
pub mod skeleton;

pub use chain::{Slot, SlotChain};
pub use cpd::{Cpd, Prm};
pub use dag::{Dag, DagPolicy};
pub use deps::{Aggregator, AttributeNode, Dependency, DependencyStructure};
pub use error::{Error, Result};
pub use ground::{Dataset, GroundBayesianNetwork};
pub use report::{Finding, ValidationReport};
pub use schema::{AttributeDef, ClassDef, GenerationPolicy, ReferenceSlot, RelationalSchema, SlotId};
pub use skeleton::{CrpConfig, Link, ObjectRef, RelationalSkeleton};
