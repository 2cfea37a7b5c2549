//! Std companion to `pktimg-core`: pcap container IO, dataset and model
//! file formats, CSV adapters, the extraction pipeline, the timed
//! comparison experiment, and a synthetic capture generator.

pub mod checkpoint;
pub mod cli;
pub mod dataset_file;
pub mod experiment;
pub mod extract;
pub mod fingerprint;
pub mod macmap;
pub mod pcap;
pub mod synth;

mod bytesio;

pub use checkpoint::{load_model, save_model};
pub use dataset_file::{read_dataset, write_dataset};
pub use experiment::{compare, run_experiment, ComparisonReport, RunResult};
pub use extract::{extract_datasets, EncoderChoice, ExtractSummary, LimSizing};
pub use pcap::{open_pcap, parse_pcap_bytes, write_pcap, Capture, PcapError, RawPacket};
