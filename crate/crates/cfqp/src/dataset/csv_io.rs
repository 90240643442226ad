//! CSV ingestion and emission. UTF-8, header row required, decimal point
//! only; the delimiter is configurable.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError, Observation};

/// Column roles for [`load_csv`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvSchema {
    /// Name of the sensitive-group column.
    pub group_column: String,
    /// Name of the response column.
    pub response_column: String,
    /// Feature columns, in order. `None` means every remaining column.
    pub feature_columns: Option<Vec<String>>,
    /// Field delimiter, comma by default.
    pub delimiter: u8,
    /// Expected number of distinct groups, if known ahead of time.
    pub expected_groups: Option<usize>,
}

impl CsvSchema {
    pub fn new(group_column: impl Into<String>, response_column: impl Into<String>) -> Self {
        CsvSchema {
            group_column: group_column.into(),
            response_column: response_column.into(),
            feature_columns: None,
            delimiter: b',',
            expected_groups: None,
        }
    }
}

/// Result of [`load_csv`]: the parsed dataset plus the original group labels
/// in dense re-encoding order (`group_labels[g]` is the raw label of group `g`).
#[derive(Debug, Clone)]
pub struct LoadedCsv {
    pub dataset: Dataset,
    pub group_labels: Vec<String>,
}

/// Reads a dataset from a CSV file. Group labels are densely re-encoded to
/// `0..K` in order of first appearance and the mapping is returned.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<LoadedCsv, DatasetError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    if !path.exists() {
        return Err(DatasetError::MissingFile { path: display });
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .from_path(path)
        .map_err(|e| io_error(&display, e))?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| io_error(&display, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let column_index = |name: &str| -> Result<usize, DatasetError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::MissingColumn {
                column: name.to_string(),
            })
    };
    let group_idx = column_index(&schema.group_column)?;
    let response_idx = column_index(&schema.response_column)?;
    let feature_idx: Vec<(usize, String)> = match &schema.feature_columns {
        Some(names) => names
            .iter()
            .map(|name| column_index(name).map(|i| (i, name.clone())))
            .collect::<Result<_, _>>()?,
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != group_idx && *i != response_idx)
            .map(|(i, name)| (i, name.clone()))
            .collect(),
    };

    let mut label_map: HashMap<String, usize> = HashMap::new();
    let mut group_labels: Vec<String> = Vec::new();
    let mut observations = Vec::new();
    for (row_number, record) in reader.records().enumerate() {
        // 1-based data row for error messages, header excluded
        let row = row_number + 1;
        let record = record.map_err(|e| io_error(&display, e))?;
        let cell = |idx: usize, column: &str| -> Result<&str, DatasetError> {
            record
                .get(idx)
                .map(str::trim)
                .ok_or_else(|| DatasetError::UnparsableCell {
                    row,
                    column: column.to_string(),
                    value: String::new(),
                })
        };
        let parse = |idx: usize, column: &str| -> Result<f64, DatasetError> {
            let raw = cell(idx, column)?;
            raw.parse::<f64>()
                .map_err(|_| DatasetError::UnparsableCell {
                    row,
                    column: column.to_string(),
                    value: raw.to_string(),
                })
        };
        let raw_group = cell(group_idx, &schema.group_column)?.to_string();
        let next = label_map.len();
        let group = *label_map.entry(raw_group.clone()).or_insert_with(|| {
            group_labels.push(raw_group);
            next
        });
        let response = parse(response_idx, &schema.response_column)?;
        let features = feature_idx
            .iter()
            .map(|(idx, name)| parse(*idx, name))
            .collect::<Result<Vec<_>, _>>()?;
        observations.push(Observation::new(features, group, response));
    }
    if observations.is_empty() {
        return Err(DatasetError::EmptyFile { path: display });
    }
    // integer labels already forming a dense 0..K range are kept verbatim,
    // so writing and re-reading a dataset is the identity
    let parsed: Option<Vec<usize>> = group_labels
        .iter()
        .map(|label| label.parse::<usize>().ok())
        .collect();
    if let Some(parsed) = parsed {
        let k = parsed.len();
        let mut seen = vec![false; k];
        let dense = parsed.iter().all(|&value| {
            if value < k && !seen[value] {
                seen[value] = true;
                true
            } else {
                false
            }
        });
        if dense {
            for obs in &mut observations {
                obs.group = parsed[obs.group];
            }
            group_labels = (0..k).map(|g| g.to_string()).collect();
        }
    }
    if let Some(declared) = schema.expected_groups {
        if group_labels.len() != declared {
            return Err(DatasetError::GroupCountMismatch {
                declared,
                found: group_labels.len(),
            });
        }
    }
    let dataset = Dataset::new(observations, group_labels.len())?;
    Ok(LoadedCsv {
        dataset,
        group_labels,
    })
}

/// Writes a dataset as CSV with columns `x1..xp, group, y`. When
/// `group_labels` is given, groups are written with their original labels.
pub fn write_csv(
    dataset: &Dataset,
    path: impl AsRef<Path>,
    group_labels: Option<&[String]>,
) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut writer = csv::WriterBuilder::new()
        .from_path(path)
        .map_err(|e| io_error(&display, e))?;
    let p = dataset.feature_dim();
    let mut header: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
    header.push("group".to_string());
    header.push("y".to_string());
    writer
        .write_record(&header)
        .map_err(|e| io_error(&display, e))?;
    for obs in dataset.observations() {
        let mut record: Vec<String> = obs.features.iter().map(|v| format!("{v}")).collect();
        match group_labels {
            Some(labels) => record.push(labels[obs.group].clone()),
            None => record.push(obs.group.to_string()),
        }
        record.push(format!("{}", obs.response));
        writer
            .write_record(&record)
            .map_err(|e| io_error(&display, e))?;
    }
    writer.flush().map_err(|e| DatasetError::Io {
        path: display,
        source: e,
    })?;
    Ok(())
}

fn io_error(path: &str, e: csv::Error) -> DatasetError {
    DatasetError::Io {
        path: path.to_string(),
        source: std::io::Error::other(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(contents.as_bytes()).unwrap();
        file
    }

    #[test]
    fn loads_three_rows() {
        let file = write_temp("x1,s,y\n0.5,0,1.0\n1.5,1,2.0\n2.5,0,3.0\n");
        let loaded = load_csv(file.path(), &CsvSchema::new("s", "y")).unwrap();
        assert_eq!(loaded.dataset.len(), 3);
        assert_eq!(loaded.dataset.feature_dim(), 1);
        assert_eq!(loaded.dataset.group_count(), 2);
    }

    #[test]
    fn non_numeric_response_names_the_cell() {
        let file = write_temp("x1,s,y\n0.5,0,1.0\n1.5,1,oops\n");
        let err = load_csv(file.path(), &CsvSchema::new("s", "y")).unwrap_err();
        match err {
            DatasetError::UnparsableCell { row, column, value } => {
                assert_eq!(row, 2);
                assert_eq!(column, "y");
                assert_eq!(value, "oops");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn string_labels_densely_reencoded() {
        // 4-row fixture re-encoded by hand: first appearance order is a, b
        let file = write_temp("x1,s,y\n1,a,1\n2,b,2\n3,a,3\n4,b,4\n");
        let loaded = load_csv(file.path(), &CsvSchema::new("s", "y")).unwrap();
        assert_eq!(loaded.group_labels, vec!["a", "b"]);
        assert_eq!(loaded.dataset.groups(), vec![0, 1, 0, 1]);
    }

    #[test]
    fn missing_file_is_reported() {
        let err = load_csv("/nonexistent/data.csv", &CsvSchema::new("s", "y")).unwrap_err();
        assert!(matches!(err, DatasetError::MissingFile { .. }));
    }

    #[test]
    fn header_only_file_is_empty() {
        let file = write_temp("x1,s,y\n");
        let err = load_csv(file.path(), &CsvSchema::new("s", "y")).unwrap_err();
        assert!(matches!(err, DatasetError::EmptyFile { .. }));
    }

    #[test]
    fn declared_group_count_must_match() {
        let file = write_temp("x1,s,y\n1,a,1\n2,a,2\n");
        let mut schema = CsvSchema::new("s", "y");
        schema.expected_groups = Some(2);
        let err = load_csv(file.path(), &schema).unwrap_err();
        assert!(matches!(
            err,
            DatasetError::GroupCountMismatch {
                declared: 2,
                found: 1
            }
        ));
    }

    #[test]
    fn write_then_load_round_trips() {
        let obs = vec![
            Observation::new(vec![0.125, -3.5], 0, 1.0 / 3.0),
            Observation::new(vec![1e-9, 2.75], 1, -7.25),
            Observation::new(vec![5.5, 0.1], 0, 123.456789012345),
        ];
        let dataset = Dataset::new(obs, 2).unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        write_csv(&dataset, file.path(), None).unwrap();
        let mut schema = CsvSchema::new("group", "y");
        schema.feature_columns = Some(vec!["x1".into(), "x2".into()]);
        let loaded = load_csv(file.path(), &schema).unwrap();
        assert_eq!(loaded.dataset, dataset);
    }
}
