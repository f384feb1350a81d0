//! Dataset files, run manifests and the GXL converter.

pub mod dataset;
pub mod gxl;
pub mod manifest;

pub use dataset::{
    load_dataset, parse_dataset, save_dataset, write_dataset, AttributeKind, AttributeSpec,
    Dataset, DatasetHeader, DatasetStats, Transform,
};
pub use manifest::{load_manifest, save_manifest, RunManifest};

use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
