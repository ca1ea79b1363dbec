use std::collections::HashMap;
use std::path::{Path, PathBuf};

use csv::{ReaderBuilder, Terminator, WriterBuilder};

use crate::ground::Dataset;
use crate::schema::RelationalSchema;
use crate::{Error, Result};

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `<class>.csv` for every class and returns the paths in class
/// order. Columns are the primary key, the foreign keys, then the attributes.
pub fn emit_csv(schema: &RelationalSchema, dataset: &Dataset, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::with_capacity(schema.class_count());
    for (c, class) in schema.classes.iter().enumerate() {
        let path = dir.join(format!("{}.csv", class.name));
        let mut w = WriterBuilder::new()
            .terminator(Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(|e| csv_err(&path, e))?;
        let mut header = vec![class.primary_key.as_str()];
        header.extend(class.reference_slots.iter().map(|&id| schema.slot(id).name.as_str()));
        header.extend(class.attributes.iter().map(|a| a.name.as_str()));
        w.write_record(&header).map_err(|e| csv_err(&path, e))?;
        let mut record = Vec::with_capacity(header.len());
        for row in 0..dataset.counts[c] {
            record.clear();
            record.push(row.to_string());
            record.extend(class.reference_slots.iter().map(|id| dataset.foreign_keys[id.0][row].to_string()));
            record.extend(
                class
                    .attributes
                    .iter()
                    .enumerate()
                    .map(|(a, attr)| attr.states[dataset.values[c][a][row]].clone()),
            );
            w.write_record(&record).map_err(|e| csv_err(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Reads back the files written by [`emit_csv`].
pub fn read_csv(schema: &RelationalSchema, dir: &Path) -> Result<Dataset> {
    let mut data = Dataset::empty(schema);
    for (c, class) in schema.classes.iter().enumerate() {
        let path = dir.join(format!("{}.csv", class.name));
        let mut r = ReaderBuilder::new().from_path(&path).map_err(|e| csv_err(&path, e))?;
        let mut expected = vec![class.primary_key.clone()];
        expected.extend(class.reference_slots.iter().map(|&id| schema.slot(id).name.clone()));
        expected.extend(class.attributes.iter().map(|a| a.name.clone()));
        let header: Vec<String> = r.headers().map_err(|e| csv_err(&path, e))?.iter().map(str::to_string).collect();
        if header != expected {
            return Err(Error::SchemaMismatch(format!("{}: unexpected header {header:?}", path.display())));
        }
        let lookups: Vec<HashMap<&str, usize>> = class
            .attributes
            .iter()
            .map(|a| a.states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect())
            .collect();
        let slot_count = class.reference_slots.len();
        for (line, record) in r.records().enumerate() {
            let record = record.map_err(|e| csv_err(&path, e))?;
            let bad = |what: &str| Error::SchemaMismatch(format!("{} row {}: {what}", path.display(), line + 1));
            let pk: usize = record[0].parse().map_err(|_| bad("primary key is not an integer"))?;
            if pk != data.counts[c] {
                return Err(bad("primary keys are not consecutive"));
            }
            for (k, &id) in class.reference_slots.iter().enumerate() {
                let fk: usize = record[1 + k].parse().map_err(|_| bad("foreign key is not an integer"))?;
                data.foreign_keys[id.0].push(fk);
            }
            for (a, lookup) in lookups.iter().enumerate() {
                let label = &record[1 + slot_count + a];
                let &v = lookup.get(label).ok_or_else(|| bad(&format!("unknown state {label}")))?;
                data.values[c][a].push(v);
            }
            data.counts[c] += 1;
        }
    }
    Ok(data)
}
