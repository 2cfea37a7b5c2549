//! Loads engineered-feature vectors from CSV and encodes them as images.
//!
//! The CSV carries one vector per row: a header row names the feature
//! columns, and a `label` column (anywhere in the header) carries the
//! device name. Pixel scaling is calibrated from the min/max of each
//! feature over the whole file.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use pktimg_core::encoders::{encode_fingerprint, FeatureVector, FingerprintCalibration};
use pktimg_core::image::EncoderId;
use pktimg_core::ImageDataset;

#[derive(Debug, thiserror::Error)]
pub enum FingerprintCsvError {
    #[error("cannot access fingerprint CSV: {0}")]
    Io(#[from] std::io::Error),
    #[error("fingerprint CSV is malformed: {0}")]
    Csv(#[from] csv::Error),
    #[error("fingerprint CSV header is missing a \"label\" column")]
    MissingLabelColumn,
    #[error("fingerprint CSV header has no feature columns besides \"label\"")]
    NoFeatures,
    #[error("fingerprint CSV line {line}, column \"{column}\": \"{value}\" is not a finite number")]
    BadNumber {
        line: u64,
        column: String,
        value: String,
    },
    #[error("fingerprint CSV line {line}: empty device label")]
    EmptyLabel { line: u64 },
    #[error("fingerprint CSV has no data rows")]
    Empty,
}

/// Feature vectors paired with per-row device names, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintTable {
    pub vectors: Vec<FeatureVector>,
    pub row_labels: Vec<String>,
}

/// Parses the CSV. Line numbers in errors count the header as line 1.
pub fn parse_fingerprint_csv(input: impl Read) -> Result<FingerprintTable, FingerprintCsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    let label_col = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case("label"))
        .ok_or(FingerprintCsvError::MissingLabelColumn)?;
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_col)
        .map(|(_, h)| h.to_string())
        .collect();
    if names.is_empty() {
        return Err(FingerprintCsvError::NoFeatures);
    }

    let mut vectors = Vec::new();
    let mut row_labels = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let label = record.get(label_col).unwrap_or("");
        if label.is_empty() {
            return Err(FingerprintCsvError::EmptyLabel { line });
        }
        let mut values = Vec::with_capacity(names.len());
        let mut name_iter = names.iter();
        for (i, field) in record.iter().enumerate() {
            if i == label_col {
                continue;
            }
            let column = name_iter.next().expect("record width matches header");
            let value: f64 = field.parse().unwrap_or(f64::NAN);
            if !value.is_finite() {
                return Err(FingerprintCsvError::BadNumber {
                    line,
                    column: column.clone(),
                    value: field.to_string(),
                });
            }
            values.push(value);
        }
        vectors.push(FeatureVector {
            names: names.clone(),
            values,
        });
        row_labels.push(label.to_string());
    }
    if vectors.is_empty() {
        return Err(FingerprintCsvError::Empty);
    }
    Ok(FingerprintTable {
        vectors,
        row_labels,
    })
}

/// Encodes a parsed table into a labeled dataset. Class ids are assigned
/// by sorting the distinct device names, and the calibration spans every
/// row of the table.
pub fn fingerprint_dataset(
    table: &FingerprintTable,
) -> Result<(ImageDataset, FingerprintCalibration), FingerprintCsvError> {
    let calibration =
        FingerprintCalibration::fit(&table.vectors).expect("parsed rows are finite and aligned");
    let mut class_names: Vec<String> = table.row_labels.clone();
    class_names.sort();
    class_names.dedup();

    let first = encode_fingerprint(&table.vectors[0], &calibration)
        .expect("vector matches its own calibration");
    let mut dataset = ImageDataset::new(
        EncoderId::Fingerprint,
        first.pixel_max,
        first.width,
        first.height,
        class_names,
    );
    for (vector, label_name) in table.vectors.iter().zip(&table.row_labels) {
        let image = encode_fingerprint(vector, &calibration)
            .expect("vector matches its own calibration");
        let label = dataset
            .class_names
            .binary_search(label_name)
            .expect("name was collected") as u16;
        dataset
            .push_image(&image, label)
            .expect("all rows share one shape");
    }
    Ok((dataset, calibration))
}

/// Reads and encodes a fingerprint CSV in one step.
pub fn read_fingerprint_dataset(
    path: impl AsRef<Path>,
) -> Result<(ImageDataset, FingerprintCalibration), FingerprintCsvError> {
    fingerprint_dataset(&parse_fingerprint_csv(File::open(path)?)?)
}
