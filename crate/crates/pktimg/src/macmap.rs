//! Loads device maps from CSV files with `mac` and `label` columns.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use pktimg_core::dataset::{parse_mac, MacLabelMap};

#[derive(Debug, thiserror::Error)]
pub enum MacMapError {
    #[error("cannot access device map: {0}")]
    Io(#[from] std::io::Error),
    #[error("device map is not valid CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("device map header is missing a \"{0}\" column")]
    MissingColumn(&'static str),
    #[error("device map line {line}: \"{value}\" is not a MAC address")]
    BadMac { line: u64, value: String },
    #[error("device map line {line}: empty device label")]
    EmptyLabel { line: u64 },
    #[error("device map lists {mac} with two different labels")]
    Conflict { mac: String },
    #[error("device map has no data rows")]
    Empty,
}

/// Reads a `mac,label` CSV. Columns are found by header name, extra columns
/// are ignored, and line numbers in errors count the header as line 1.
pub fn read_mac_map(path: impl AsRef<Path>) -> Result<MacLabelMap, MacMapError> {
    parse_mac_map(File::open(path)?)
}

pub fn parse_mac_map(input: impl Read) -> Result<MacLabelMap, MacMapError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    let column = |name: &'static str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or(MacMapError::MissingColumn(name))
    };
    let mac_col = column("mac")?;
    let label_col = column("label")?;

    let mut pairs = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mac_text = record.get(mac_col).unwrap_or("");
        let mac = parse_mac(mac_text).ok_or_else(|| MacMapError::BadMac {
            line,
            value: mac_text.to_string(),
        })?;
        let label = record.get(label_col).unwrap_or("");
        if label.is_empty() {
            return Err(MacMapError::EmptyLabel { line });
        }
        pairs.push((mac, label.to_string()));
    }
    if pairs.is_empty() {
        return Err(MacMapError::Empty);
    }
    MacLabelMap::from_pairs(pairs).map_err(|e| match e {
        pktimg_core::dataset::DatasetError::MacConflict { mac } => MacMapError::Conflict { mac },
        other => unreachable!("from_pairs only reports conflicts: {other}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_a_simple_map() {
        let csv = "mac,label\n02:00:00:00:00:01,cam\n02:00:00:00:00:02,plug\n";
        let map = parse_mac_map(csv.as_bytes()).unwrap();
        assert_eq!(map.class_names(), ["cam", "plug"]);
        assert_eq!(map.label_for([2, 0, 0, 0, 0, 1]), Some(0));
        assert_eq!(map.label_for([2, 0, 0, 0, 0, 2]), Some(1));
        assert_eq!(map.label_for([2, 0, 0, 0, 0, 3]), None);
    }

    #[test]
    fn accepts_extra_columns_case_and_whitespace() {
        let csv = "notes,MAC,Label\nx, 02-00-00-00-00-0A , cam \n";
        let map = parse_mac_map(csv.as_bytes()).unwrap();
        assert_eq!(map.label_for([2, 0, 0, 0, 0, 10]), Some(0));
    }

    #[test]
    fn label_ids_do_not_depend_on_row_order() {
        let a = parse_mac_map("mac,label\n02:00:00:00:00:01,zed\n02:00:00:00:00:02,arc\n".as_bytes())
            .unwrap();
        let b = parse_mac_map("mac,label\n02:00:00:00:00:02,arc\n02:00:00:00:00:01,zed\n".as_bytes())
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.class_names(), ["arc", "zed"]);
    }

    #[test]
    fn rejects_missing_columns() {
        let err = parse_mac_map("address,label\nx,y\n".as_bytes()).unwrap_err();
        assert!(matches!(err, MacMapError::MissingColumn("mac")));
        let err = parse_mac_map("mac,device\nx,y\n".as_bytes()).unwrap_err();
        assert!(matches!(err, MacMapError::MissingColumn("label")));
    }

    #[test]
    fn names_the_offending_line() {
        let csv = "mac,label\n02:00:00:00:00:01,cam\nnot-a-mac,plug\n";
        match parse_mac_map(csv.as_bytes()).unwrap_err() {
            MacMapError::BadMac { line, value } => {
                assert_eq!(line, 3);
                assert_eq!(value, "not-a-mac");
            }
            other => panic!("unexpected error {other}"),
        }

        let csv = "mac,label\n02:00:00:00:00:01,\n";
        assert!(matches!(
            parse_mac_map(csv.as_bytes()).unwrap_err(),
            MacMapError::EmptyLabel { line: 2 }
        ));
    }

    #[test]
    fn rejects_conflicts_and_empty_maps() {
        let csv = "mac,label\n02:00:00:00:00:01,cam\n02:00:00:00:00:01,plug\n";
        match parse_mac_map(csv.as_bytes()).unwrap_err() {
            MacMapError::Conflict { mac } => assert_eq!(mac, "02:00:00:00:00:01"),
            other => panic!("unexpected error {other}"),
        }
        assert!(matches!(
            parse_mac_map("mac,label\n".as_bytes()).unwrap_err(),
            MacMapError::Empty
        ));
    }

    #[test]
    fn duplicate_rows_with_same_label_are_fine() {
        let csv = "mac,label\n02:00:00:00:00:01,cam\n02:00:00:00:00:01,cam\n";
        let map = parse_mac_map(csv.as_bytes()).unwrap();
        assert_eq!(map.len(), 1);
    }
}
