//! Model documents and database emission.

pub mod csv;
pub mod sql;
pub mod xml;

pub use self::csv::{emit_csv, read_csv};
pub use self::sql::emit_sql;
pub use self::xml::{parse_prm, serialize_prm, ParseError};

use crate::dag;
use crate::schema::RelationalSchema;

/// Classes ordered so that referenced classes precede the classes
/// referencing them; ties by index.
pub fn creation_order(schema: &RelationalSchema) -> Vec<usize> {
    dag::topo_sort(schema.class_count(), schema.class_dag.edges().map(|(owner, target)| (target, owner)))
        .expect("class graph is acyclic")
}
