use std::fmt::Write as _;

use super::creation_order;
use crate::ground::Dataset;
use crate::schema::RelationalSchema;

fn quote(label: &str) -> String {
    format!("'{}'", label.replace('\'', "''"))
}

/// DDL for every class followed by one INSERT per row, both in creation
/// order. Foreign keys are named after their slot and attribute values are
/// written as state labels.
pub fn emit_sql(schema: &RelationalSchema, dataset: &Dataset) -> String {
    let order = creation_order(schema);
    let mut out = String::new();
    for &c in &order {
        let class = &schema.classes[c];
        let mut columns = vec![format!("{} INTEGER PRIMARY KEY", class.primary_key)];
        for &id in &class.reference_slots {
            let slot = schema.slot(id);
            let target = &schema.classes[slot.target];
            columns.push(format!(
                "{} INTEGER NOT NULL REFERENCES {}({})",
                slot.name, target.name, target.primary_key
            ));
        }
        for attr in &class.attributes {
            let width = attr.states.iter().map(String::len).max().unwrap_or(1);
            columns.push(format!("{} VARCHAR({width}) NOT NULL", attr.name));
        }
        let _ = writeln!(out, "CREATE TABLE {} ({});", class.name, columns.join(", "));
    }
    for &c in &order {
        let class = &schema.classes[c];
        let mut names = vec![class.primary_key.as_str()];
        names.extend(class.reference_slots.iter().map(|&id| schema.slot(id).name.as_str()));
        names.extend(class.attributes.iter().map(|a| a.name.as_str()));
        let head = format!("INSERT INTO {} ({}) VALUES (", class.name, names.join(", "));
        for row in 0..dataset.counts[c] {
            let mut values = vec![row.to_string()];
            values.extend(class.reference_slots.iter().map(|id| dataset.foreign_keys[id.0][row].to_string()));
            values.extend(
                class
                    .attributes
                    .iter()
                    .enumerate()
                    .map(|(a, attr)| quote(&attr.states[dataset.values[c][a][row]])),
            );
            let _ = writeln!(out, "{head}{});", values.join(", "));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{AttributeDef, ClassDef, ReferenceSlot};

    fn pair() -> RelationalSchema {
        let class = |name: &str| ClassDef {
            name: name.into(),
            primary_key: format!("{name}id"),
            attributes: vec![AttributeDef {
                name: "att0".into(),
                states: vec!["v0".into(), "it's".into()],
            }],
            reference_slots: vec![],
        };
        RelationalSchema::new(
            vec![class("clazz2"), class("clazz1")],
            vec![ReferenceSlot {
                name: "clazz1fkatt12".into(),
                owner: 0,
                target: 1,
            }],
        )
        .unwrap()
    }

    #[test]
    fn empty_dataset_is_ddl_only() {
        let schema = pair();
        let sql = emit_sql(&schema, &Dataset::empty(&schema));
        assert_eq!(sql.lines().count(), 2);
        assert!(!sql.contains("INSERT"));
    }

    #[test]
    fn referenced_table_comes_first() {
        let schema = pair();
        let sql = emit_sql(&schema, &Dataset::empty(&schema));
        let first = sql.find("CREATE TABLE clazz1 (clazz1id INTEGER PRIMARY KEY").unwrap();
        let second = sql.find("CREATE TABLE clazz2").unwrap();
        assert!(first < second);
        assert!(sql.contains("clazz1fkatt12 INTEGER NOT NULL REFERENCES clazz1(clazz1id)"));
    }

    #[test]
    fn labels_are_escaped() {
        let schema = pair();
        let mut data = Dataset::empty(&schema);
        data.counts = vec![1, 1];
        data.foreign_keys = vec![vec![0]];
        data.values = vec![vec![vec![1]], vec![vec![0]]];
        let sql = emit_sql(&schema, &data);
        assert!(sql.contains("VALUES (0, 0, 'it''s');"), "{sql}");
    }
}
