use ndarray::Array2;
use std::io::{Read, Write};
use std::path::Path;

use super::{label_name, DataError, Dataset, Schema, ASD, TD};

/// Diagnosis column used as the target.
pub const TARGET_COLUMN: &str = "DSM5 gold standard diagnosis";
/// Row identifier column; kept as opaque ids, never as a feature.
pub const ID_COLUMN: &str = "Patient ID";
/// Columns removed on ingestion: the identifier and the two AMI tool results.
pub const DROPPED_COLUMNS: [&str; 3] = [ID_COLUMN, "New final tool ASD", "New final Summary ASD"];

fn same_header(a: &str, b: &str) -> bool {
    let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ").to_ascii_lowercase();
    norm(a) == norm(b)
}

pub fn load_csv(path: &Path, schema: &Schema) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::Io(format!("{}: {e}", path.display())))?;
    read_csv(file, schema)
}

/// Reads a labelled export. Row numbers in errors are 1-based data rows.
pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| DataError::Io(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let target = headers
        .iter()
        .position(|h| same_header(h, TARGET_COLUMN))
        .ok_or_else(|| DataError::MissingTarget(TARGET_COLUMN.to_string()))?;
    let id_col = headers.iter().position(|h| same_header(h, ID_COLUMN));

    let mut feature_cols = vec![None; schema.len()];
    let mut unknown = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if i == target || DROPPED_COLUMNS.iter().any(|d| same_header(h, d)) {
            continue;
        }
        match schema.index_of(h) {
            Some(j) if feature_cols[j].is_none() => feature_cols[j] = Some(i),
            Some(_) => return Err(DataError::Schema(format!("duplicate column `{h}`"))),
            None => unknown.push(h.clone()),
        }
    }
    if !unknown.is_empty() {
        return Err(DataError::UnknownColumns(unknown));
    }
    let missing: Vec<String> = schema
        .features
        .iter()
        .zip(&feature_cols)
        .filter(|(_, c)| c.is_none())
        .map(|(f, _)| f.code.clone())
        .collect();
    if !missing.is_empty() {
        return Err(DataError::MissingColumns(missing));
    }
    let feature_cols: Vec<usize> = feature_cols.into_iter().map(Option::unwrap).collect();

    let mut values = Vec::new();
    let mut y = Vec::new();
    let mut ids = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| DataError::Io(e.to_string()))?;
        let cell = |i: usize| record.get(i).unwrap_or("").trim();
        let label = cell(target);
        y.push(match label.to_ascii_uppercase().as_str() {
            "ASD" => ASD,
            "TD" => TD,
            "" => return Err(DataError::MissingCell { row, column: TARGET_COLUMN.into() }),
            _ => return Err(DataError::BadLabel { row, value: label.to_string() }),
        });
        for (spec, &c) in schema.features.iter().zip(&feature_cols) {
            let raw = cell(c);
            if raw.is_empty() {
                return Err(DataError::MissingCell { row, column: spec.code.clone() });
            }
            let v = spec
                .encode(raw)
                .map_err(|message| DataError::Parse { row, column: spec.code.clone(), message })?;
            values.push(v);
        }
        ids.push(match id_col {
            Some(i) => cell(i).to_string(),
            None => row.to_string(),
        });
    }
    let x = Array2::from_shape_vec((y.len(), schema.len()), values).expect("row-major buffer matches shape");
    Dataset::new(schema.clone(), x, y, id_col.map(|_| ids))
}

/// Writes a dataset in the ingestion layout (ids, features, diagnosis) with
/// answers decoded through the schema vocabulary.
pub fn write_csv<W: Write>(writer: W, data: &Dataset) -> Result<(), DataError> {
    let io = |e: csv::Error| DataError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![ID_COLUMN.to_string()];
    header.extend(data.schema().codes());
    header.push(TARGET_COLUMN.to_string());
    w.write_record(&header).map_err(io)?;
    for (r, row) in data.x().rows().into_iter().enumerate() {
        let mut rec = vec![data.ids().map_or_else(|| (r + 1).to_string(), |ids| ids[r].clone())];
        rec.extend(data.schema().features.iter().zip(row.iter()).map(|(f, &v)| f.decode(v)));
        rec.push(label_name(data.y()[r]).to_string());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| DataError::Io(e.to_string()))
}

/// Encodes a table of raw answers (rows × schema columns).
pub fn encode_responses(raw: &[Vec<String>], schema: &Schema) -> Result<Array2<f64>, DataError> {
    let mut values = Vec::with_capacity(raw.len() * schema.len());
    for (r, row) in raw.iter().enumerate() {
        if row.len() != schema.len() {
            return Err(DataError::Invalid(format!("row {} has {} cells, schema has {}", r + 1, row.len(), schema.len())));
        }
        for (spec, cell) in schema.features.iter().zip(row) {
            let v = spec
                .encode(cell)
                .map_err(|message| DataError::Parse { row: r + 1, column: spec.code.clone(), message })?;
            values.push(v);
        }
    }
    Ok(Array2::from_shape_vec((raw.len(), schema.len()), values).expect("shape"))
}

pub fn decode_responses(x: &Array2<f64>, schema: &Schema) -> Vec<Vec<String>> {
    x.rows()
        .into_iter()
        .map(|row| schema.features.iter().zip(row.iter()).map(|(f, &v)| f.decode(v)).collect())
        .collect()
}
