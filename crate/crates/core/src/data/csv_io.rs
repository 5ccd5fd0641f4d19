use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ClassId, LabeledDataset, LabeledExample};

/// Reads a headered CSV file. Every column except `label_column` must be
/// numeric; labels are mapped to dense ids in order of first appearance.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_csv(file, label_column).map_err(|e| match e {
        Error::EmptyInput => Error::EmptyFile(path.to_path_buf()),
        other => other,
    })
}

pub fn read_csv<R: Read>(reader: R, label_column: &str) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.iter().all(String::is_empty) {
        return Err(Error::EmptyInput);
    }
    let label_pos = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::ParseError {
            row: 0,
            column: label_column.to_string(),
            message: "label column not found in header".into(),
        })?;

    let mut ids: HashMap<String, ClassId> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    let mut examples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let mut features = Vec::with_capacity(headers.len().saturating_sub(1));
        let mut label = None;
        for (col, name) in headers.iter().enumerate() {
            let cell = record.get(col).map(str::trim).unwrap_or("");
            if cell.is_empty() {
                return Err(Error::ParseError {
                    row,
                    column: name.clone(),
                    message: "missing value".into(),
                });
            }
            if col == label_pos {
                let next = ClassId(names.len() as u32);
                let id = *ids.entry(cell.to_string()).or_insert_with(|| {
                    names.push(cell.to_string());
                    next
                });
                label = Some(id);
            } else {
                let value: f64 = cell.parse().map_err(|_| Error::NonNumericFeature {
                    row,
                    column: name.clone(),
                    value: cell.to_string(),
                })?;
                if !value.is_finite() {
                    return Err(Error::NonNumericFeature {
                        row,
                        column: name.clone(),
                        value: cell.to_string(),
                    });
                }
                features.push(value);
            }
        }
        if record.len() > headers.len() {
            return Err(Error::ParseError {
                row,
                column: format!("#{}", headers.len() + 1),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        examples.push(LabeledExample {
            features,
            label: label.expect("label column is always visited"),
        });
    }
    if examples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if headers.len() < 2 {
        return Err(Error::ParseError {
            row: 0,
            column: label_column.into(),
            message: "no feature columns".into(),
        });
    }
    LabeledDataset::new(examples, names)
}

/// Feature rows and, when present, raw label strings.
pub type FeatureRows = (Vec<Vec<f64>>, Option<Vec<String>>);

/// Feature rows of a headered CSV plus the raw label strings when
/// `label_column` is present in the header.
pub fn read_features_csv<R: Read>(reader: R, label_column: &str) -> Result<FeatureRows> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_pos = headers.iter().position(|h| h == label_column);
    let mut rows = Vec::new();
    let mut labels = label_pos.map(|_| Vec::new());
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let mut features = Vec::with_capacity(headers.len());
        for (col, name) in headers.iter().enumerate() {
            let cell = record.get(col).map(str::trim).unwrap_or("");
            if Some(col) == label_pos {
                labels
                    .as_mut()
                    .expect("label column present")
                    .push(cell.to_string());
                continue;
            }
            let value: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::NonNumericFeature {
                    row,
                    column: name.clone(),
                    value: cell.to_string(),
                })?;
            features.push(value);
        }
        rows.push(features);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok((rows, labels))
}

/// Writes `x0, x1, ..., label` with the original label strings.
pub fn write_csv<W: Write>(dataset: &LabeledDataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..dataset.dim()).map(|k| format!("x{k}")).collect();
    header.push("label".into());
    wtr.write_record(&header)?;
    for e in dataset.examples() {
        let mut rec: Vec<String> = e.features.iter().map(|v| v.to_string()).collect();
        rec.push(dataset.label_name(e.label).to_string());
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_features_and_label() {
        let text = "a,b,label\n1.0,2.0,x\n3,4,y\n5,6,x\n";
        let ds = read_csv(text.as_bytes(), "label").unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.examples()[1].features, vec![3.0, 4.0]);
    }

    #[test]
    fn missing_cell_names_row_and_column() {
        let text = "a,b,label\n1.0,2.0,x\n3,,y\n";
        match read_csv(text.as_bytes(), "label") {
            Err(Error::ParseError { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
        let short = "a,b,label\n1.0,2.0\n";
        assert!(matches!(
            read_csv(short.as_bytes(), "label"),
            Err(Error::ParseError { row: 1, .. })
        ));
    }

    #[test]
    fn dense_label_mapping() {
        let text = "f,rel\n0.1,sur\n0.2,sous\n0.3,sur\n";
        let ds = read_csv(text.as_bytes(), "rel").unwrap();
        let sizes: Vec<usize> = ds.class_index().values().map(Vec::len).collect();
        assert_eq!(sizes, vec![2, 1]);
        assert_eq!(ds.label_name(ClassId(1)), "sous");
    }

    #[test]
    fn rejects_non_numeric_and_empty() {
        let text = "a,label\nfoo,x\n";
        assert!(matches!(
            read_csv(text.as_bytes(), "label"),
            Err(Error::NonNumericFeature { row: 1, .. })
        ));
        assert!(matches!(
            read_csv("a,label\n".as_bytes(), "label"),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(
            read_csv("".as_bytes(), "label"),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn features_without_label_column() {
        let (rows, labels) = read_features_csv("a,b\n1,2\n3,4\n".as_bytes(), "label").unwrap();
        assert_eq!(rows, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert!(labels.is_none());
        let (rows, labels) = read_features_csv("label,a\nx,1\n".as_bytes(), "label").unwrap();
        assert_eq!(rows, vec![vec![1.0]]);
        assert_eq!(labels.unwrap(), vec!["x"]);
    }

    #[test]
    fn written_csv_reads_back() {
        let ds = read_csv("a,b,label\n0.125,-3,p\n1e-3,7.5,q\n".as_bytes(), "label").unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), "label").unwrap();
        assert_eq!(back, ds);
    }
}
