//! The dataset container: magic "PIMG", version 1, little-endian.
//!
//! Layout: magic (4 bytes), version u16, encoder u8, pixel_max u8,
//! width u16, height u16, class count u16, record count u32 (an 18-byte
//! header), then class names as (u16 length + UTF-8) per class, then
//! records as width*height pixel bytes followed by a u16 label.

use std::fs;
use std::path::Path;

use pktimg_core::image::EncoderId;
use pktimg_core::ImageDataset;

use crate::bytesio::{ByteReader, NeedBytes};

pub const DATASET_MAGIC: &[u8; 4] = b"PIMG";
pub const DATASET_VERSION: u16 = 1;

#[derive(Debug, thiserror::Error)]
pub enum DatasetFileError {
    #[error("cannot access dataset file: {0}")]
    Io(#[from] std::io::Error),
    #[error("offset 0: bad magic {0:02x?}, expected \"PIMG\"")]
    BadMagic([u8; 4]),
    #[error("offset 4: unsupported dataset version {0}, expected {DATASET_VERSION}")]
    BadVersion(u16),
    #[error("offset 6: unknown encoder code {0}")]
    UnknownEncoder(u8),
    #[error("offset {offset}: file truncated, needed {needed} more byte(s) for {what}")]
    Truncated {
        offset: usize,
        needed: usize,
        what: &'static str,
    },
    #[error("offset {offset}: class name is not valid UTF-8")]
    BadClassName { offset: usize },
    #[error("offset {offset}: record {index} pixel {value} exceeds pixel_max {max}")]
    PixelOutOfRange {
        offset: usize,
        index: usize,
        value: u8,
        max: u8,
    },
    #[error("offset {offset}: record {index} label {label} out of range for {classes} classes")]
    LabelOutOfRange {
        offset: usize,
        index: usize,
        label: u16,
        classes: u16,
    },
    #[error("offset {offset}: {extra} trailing byte(s) after the last record")]
    TrailingBytes { offset: usize, extra: usize },
}

fn truncated(what: &'static str) -> impl Fn(NeedBytes) -> DatasetFileError {
    move |e| DatasetFileError::Truncated {
        offset: e.offset,
        needed: e.needed,
        what,
    }
}

/// Serializes a dataset to its file image.
pub fn dataset_to_bytes(ds: &ImageDataset) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(DATASET_MAGIC);
    out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    out.push(ds.encoder.code());
    out.push(ds.pixel_max);
    out.extend_from_slice(&ds.width.to_le_bytes());
    out.extend_from_slice(&ds.height.to_le_bytes());
    out.extend_from_slice(&(ds.class_names.len() as u16).to_le_bytes());
    out.extend_from_slice(&(ds.records.len() as u32).to_le_bytes());
    for name in &ds.class_names {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    for record in &ds.records {
        out.extend_from_slice(&record.pixels);
        out.extend_from_slice(&record.label.to_le_bytes());
    }
    out
}

/// Parses a dataset file image, validating every pixel and label.
pub fn dataset_from_bytes(bytes: &[u8]) -> Result<ImageDataset, DatasetFileError> {
    let mut r = ByteReader::new(bytes);
    let magic: [u8; 4] = r.take(4).map_err(truncated("magic"))?.try_into().unwrap();
    if &magic != DATASET_MAGIC {
        return Err(DatasetFileError::BadMagic(magic));
    }
    let version = r.u16_le().map_err(truncated("version"))?;
    if version != DATASET_VERSION {
        return Err(DatasetFileError::BadVersion(version));
    }
    let encoder_code = r.u8().map_err(truncated("encoder code"))?;
    let encoder =
        EncoderId::from_code(encoder_code).ok_or(DatasetFileError::UnknownEncoder(encoder_code))?;
    let pixel_max = r.u8().map_err(truncated("pixel_max"))?;
    let width = r.u16_le().map_err(truncated("width"))?;
    let height = r.u16_le().map_err(truncated("height"))?;
    let class_count = r.u16_le().map_err(truncated("class count"))?;
    let record_count = r.u32_le().map_err(truncated("record count"))?;

    let mut class_names = Vec::with_capacity(usize::from(class_count));
    for _ in 0..class_count {
        let len = r.u16_le().map_err(truncated("class name length"))?;
        let offset = r.offset();
        let raw = r.take(usize::from(len)).map_err(truncated("class name"))?;
        let name = std::str::from_utf8(raw)
            .map_err(|_| DatasetFileError::BadClassName { offset })?;
        class_names.push(name.to_string());
    }

    let mut ds = ImageDataset::new(encoder, pixel_max, width, height, class_names);
    let pixels_per_record = ds.pixels_per_record();
    for index in 0..record_count as usize {
        let offset = r.offset();
        let pixels = r.take(pixels_per_record).map_err(truncated("record pixels"))?;
        if let Some(bad) = pixels.iter().position(|&px| px > pixel_max) {
            return Err(DatasetFileError::PixelOutOfRange {
                offset: offset + bad,
                index,
                value: pixels[bad],
                max: pixel_max,
            });
        }
        let label_offset = r.offset();
        let label = r.u16_le().map_err(truncated("record label"))?;
        if label >= class_count {
            return Err(DatasetFileError::LabelOutOfRange {
                offset: label_offset,
                index,
                label,
                classes: class_count,
            });
        }
        ds.records.push(pktimg_core::dataset::Record {
            pixels: pixels.to_vec(),
            label,
        });
    }
    if r.remaining() > 0 {
        return Err(DatasetFileError::TrailingBytes {
            offset: r.offset(),
            extra: r.remaining(),
        });
    }
    Ok(ds)
}

pub fn write_dataset(ds: &ImageDataset, path: impl AsRef<Path>) -> Result<(), DatasetFileError> {
    fs::write(path, dataset_to_bytes(ds))?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<ImageDataset, DatasetFileError> {
    dataset_from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_dataset() -> ImageDataset {
        let mut ds = ImageDataset::new(
            EncoderId::Lim,
            15,
            6,
            6,
            vec!["cam".to_string(), "plug".to_string()],
        );
        ds.push(vec![1; 36], 0).unwrap();
        ds.push(vec![15; 36], 1).unwrap();
        ds.push(vec![0; 36], 1).unwrap();
        ds
    }

    #[test]
    fn header_bytes_are_frozen() {
        let bytes = dataset_to_bytes(&tiny_dataset());
        let expected_header: Vec<u8> = vec![
            b'P', b'I', b'M', b'G', // magic
            1, 0, // version
            0,  // encoder code for lim
            15, // pixel_max
            6, 0, // width
            6, 0, // height
            2, 0, // class count
            3, 0, 0, 0, // record count
        ];
        assert_eq!(&bytes[..18], &expected_header[..]);
        // class table: "cam" and "plug" with u16 length prefixes
        assert_eq!(&bytes[18..23], &[3, 0, b'c', b'a', b'm']);
        assert_eq!(&bytes[23..29], &[4, 0, b'p', b'l', b'u', b'g']);
        // total size: header + names + 3 * (36 pixels + 2 label bytes)
        assert_eq!(bytes.len(), 18 + 5 + 6 + 3 * 38);
    }

    #[test]
    fn file_size_matches_format_arithmetic_for_28x28() {
        let mut ds = ImageDataset::new(
            EncoderId::Payload784,
            255,
            28,
            28,
            vec!["a".to_string(), "b".to_string()],
        );
        for i in 0..3u8 {
            ds.push(vec![i; 784], (i % 2) as u16).unwrap();
        }
        let bytes = dataset_to_bytes(&ds);
        let label_table = 2 * (2 + 1);
        assert_eq!(bytes.len(), 18 + label_table + 3 * (784 + 2));
    }

    #[test]
    fn round_trips_exactly() {
        let ds = tiny_dataset();
        let bytes = dataset_to_bytes(&ds);
        let back = dataset_from_bytes(&bytes).unwrap();
        assert_eq!(back, ds);
        assert_eq!(dataset_to_bytes(&back), bytes, "write is canonical");
    }

    #[test]
    fn empty_dataset_round_trips() {
        let ds = ImageDataset::new(
            EncoderId::Wang,
            255,
            28,
            28,
            vec!["a".to_string(), "b".to_string()],
        );
        let back = dataset_from_bytes(&dataset_to_bytes(&ds)).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        let mut bytes = dataset_to_bytes(&tiny_dataset());
        bytes[0] = b'Q';
        assert!(matches!(
            dataset_from_bytes(&bytes).unwrap_err(),
            DatasetFileError::BadMagic(_)
        ));

        let mut bytes = dataset_to_bytes(&tiny_dataset());
        bytes[4] = 0xE7; // version 999
        bytes[5] = 0x03;
        assert!(matches!(
            dataset_from_bytes(&bytes).unwrap_err(),
            DatasetFileError::BadVersion(999)
        ));
    }

    #[test]
    fn rejects_unknown_encoder_code() {
        let mut bytes = dataset_to_bytes(&tiny_dataset());
        bytes[6] = 200;
        assert!(matches!(
            dataset_from_bytes(&bytes).unwrap_err(),
            DatasetFileError::UnknownEncoder(200)
        ));
    }

    #[test]
    fn rejects_pixel_above_max_with_offset() {
        let mut bytes = dataset_to_bytes(&tiny_dataset());
        // first pixel of record 0 sits right after the class table
        let pixel_offset = 18 + 5 + 6;
        bytes[pixel_offset] = 16;
        match dataset_from_bytes(&bytes).unwrap_err() {
            DatasetFileError::PixelOutOfRange {
                offset,
                index,
                value,
                max,
            } => {
                assert_eq!((offset, index, value, max), (pixel_offset, 0, 16, 15));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_out_of_range_label() {
        let mut bytes = dataset_to_bytes(&tiny_dataset());
        let label_offset = 18 + 11 + 36;
        bytes[label_offset] = 9;
        match dataset_from_bytes(&bytes).unwrap_err() {
            DatasetFileError::LabelOutOfRange { index, label, .. } => {
                assert_eq!((index, label), (0, 9));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_truncation_and_trailing_bytes() {
        let full = dataset_to_bytes(&tiny_dataset());
        let cut = &full[..full.len() - 1];
        match dataset_from_bytes(cut).unwrap_err() {
            DatasetFileError::Truncated { what, .. } => assert_eq!(what, "record label"),
            other => panic!("unexpected error {other:?}"),
        }

        let mut padded = full.clone();
        padded.extend_from_slice(&[0, 0, 0]);
        match dataset_from_bytes(&padded).unwrap_err() {
            DatasetFileError::TrailingBytes { offset, extra } => {
                assert_eq!((offset, extra), (full.len(), 3));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn write_and_read_via_filesystem() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.pimg");
        let ds = tiny_dataset();
        write_dataset(&ds, &path).unwrap();
        assert_eq!(read_dataset(&path).unwrap(), ds);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arbitrary_dataset() -> impl Strategy<Value = ImageDataset> {
            (1u16..6, 1u16..12, 1u16..12, 2usize..5).prop_flat_map(
                |(encoder_code, width, height, classes)| {
                    let encoder = EncoderId::from_code((encoder_code % 5) as u8).unwrap();
                    let pixel_max = encoder.pixel_max();
                    let n = usize::from(width) * usize::from(height);
                    let class_names: Vec<String> =
                        (0..classes).map(|i| format!("class{i}")).collect();
                    proptest::collection::vec(
                        (
                            proptest::collection::vec(0u8..=pixel_max, n),
                            0u16..classes as u16,
                        ),
                        0..20,
                    )
                    .prop_map(move |records| {
                        let mut ds = ImageDataset::new(
                            encoder,
                            pixel_max,
                            width,
                            height,
                            class_names.clone(),
                        );
                        for (pixels, label) in records {
                            ds.push(pixels, label).unwrap();
                        }
                        ds
                    })
                },
            )
        }

        proptest! {
            #[test]
            fn round_trip_is_exact(ds in arbitrary_dataset()) {
                let bytes = dataset_to_bytes(&ds);
                let back = dataset_from_bytes(&bytes).unwrap();
                prop_assert_eq!(&back, &ds);
                prop_assert_eq!(dataset_to_bytes(&back), bytes);
            }
        }
    }
}
