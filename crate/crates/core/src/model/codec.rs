//! Wire format for model payloads.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "FSLM"
//! 4       2     version (u16 LE), currently 1
//! 6       2     reserved, zero
//! 8       8     FNV-1a 64 digest of the shape key (u64 LE)
//! 16      4     parameter count (u32 LE)
//! 20      4·N   parameters as f32 LE, layout order
//! ```

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ModelConfig, ModelError, ModelParameters};

pub const MAGIC: [u8; 4] = *b"FSLM";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 20;

/// FNV-1a over the shape-determining config fields, each as u32 LE.
pub fn config_digest(config: &ModelConfig) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in config.shape_key() {
        for b in (v as u32).to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

pub fn payload_len(config: &ModelConfig) -> usize {
    HEADER_LEN + 4 * config.parameter_count()
}

pub fn serialize(params: &ModelParameters) -> Vec<u8> {
    let cfg = params.config();
    let mut out = Vec::with_capacity(payload_len(cfg));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&config_digest(cfg).to_le_bytes());
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for &v in params.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn deserialize(bytes: &[u8], config: &ModelConfig) -> Result<ModelParameters, ModelError> {
    let corrupt = |m: String| Err(ModelError::CorruptPayload(m));
    if bytes.len() < HEADER_LEN {
        return corrupt(format!("{} bytes is shorter than the header", bytes.len()));
    }
    if bytes[..4] != MAGIC {
        return corrupt("bad magic".into());
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return corrupt(format!("unsupported version {version}"));
    }
    let digest = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    if digest != config_digest(config) {
        return corrupt("config digest does not match".into());
    }
    let count = u32::from_le_bytes(bytes[16..20].try_into().expect("4 bytes")) as usize;
    if count != config.parameter_count() {
        return corrupt(format!("header declares {count} parameters, config has {}", config.parameter_count()));
    }
    if bytes.len() != payload_len(config) {
        return corrupt(format!("expected {} bytes, got {}", payload_len(config), bytes.len()));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
        .collect();
    ModelParameters::from_values(*config, values)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// SHA-256 of the tensor's f32 LE encoding, hex.
    pub sha256: String,
}

/// Human-readable listing of the tensors in a payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorManifest {
    pub config_digest: String,
    pub payload_bytes: usize,
    pub tensors: Vec<ManifestEntry>,
}

impl TensorManifest {
    pub fn of(params: &ModelParameters) -> Self {
        let cfg = params.config();
        let tensors = cfg
            .layout()
            .into_iter()
            .map(|spec| {
                let mut h = Sha256::new();
                for &v in &params.values()[spec.range()] {
                    h.update((v as f32).to_le_bytes());
                }
                ManifestEntry {
                    name: spec.name.to_string(),
                    shape: spec.shape,
                    sha256: hex::encode(h.finalize()),
                }
            })
            .collect();
        Self {
            config_digest: format!("{:016x}", config_digest(cfg)),
            payload_bytes: payload_len(cfg),
            tensors,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tep_config(n: usize) -> ModelConfig {
        ModelConfig { input_dim: n, ..ModelConfig::default() }
    }

    #[test]
    fn feature_engineering_payload_delta() {
        let base = payload_len(&tep_config(52));
        let fe = payload_len(&tep_config(260));
        assert_eq!(fe - base, 4 * (260 - 52) * (4 * 128));
        assert_eq!(fe - base, 425_984);
        let p = ModelParameters::zeros(tep_config(52));
        assert_eq!(serialize(&p).len(), base);
    }

    #[test]
    fn rejects_corruption() {
        let cfg = ModelConfig { input_dim: 3, hidden1: 4, hidden2: 2, num_classes: 3, ts: 2 };
        let bytes = serialize(&ModelParameters::init(cfg, 1).unwrap());
        assert!(matches!(deserialize(&bytes[..bytes.len() - 1], &cfg), Err(ModelError::CorruptPayload(_))));
        assert!(deserialize(&bytes[..10], &cfg).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(deserialize(&bad, &cfg).is_err());
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(deserialize(&bad, &cfg).is_err());
        let other = ModelConfig { hidden1: 5, ..cfg };
        assert!(deserialize(&bytes, &other).is_err());
    }

    #[test]
    fn manifest_lists_every_tensor() {
        let cfg = ModelConfig { input_dim: 3, hidden1: 4, hidden2: 2, num_classes: 3, ts: 2 };
        let m = TensorManifest::of(&ModelParameters::init(cfg, 1).unwrap());
        assert_eq!(m.tensors.len(), 8);
        assert_eq!(m.tensors[0].shape, vec![16, 3]);
        assert_eq!(m.tensors[0].sha256.len(), 64);
        let total: usize = m.tensors.iter().map(|t| t.shape.iter().product::<usize>()).sum();
        assert_eq!(HEADER_LEN + 4 * total, m.payload_bytes);
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(seed in any::<u64>(), n in 1usize..6, h1 in 1usize..5, h2 in 1usize..5, c in 1usize..5) {
            let cfg = ModelConfig { input_dim: n, hidden1: h1, hidden2: h2, num_classes: c, ts: 1 };
            let p = ModelParameters::init(cfg, seed).unwrap().to_wire_precision();
            let back = deserialize(&serialize(&p), &cfg).unwrap();
            prop_assert!(back.values().iter().zip(p.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
