//! The challenge hash `h(element, message) -> Z_q`.
//!
//! Production mode hashes `len(enc(elem)) || enc(elem) || message` with SHA-256, where
//! `enc` is the fixed-width big-endian element encoding and `len` a 4-byte big-endian
//! length, then reduces the digest modulo `q`. Scripted mode replays a fixed table of
//! outputs so that hand-computed examples with posited hash values can be reproduced.

use std::collections::BTreeMap;
use std::io::BufRead;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::group_math::{GroupElement, GroupParams, Scalar};

/// One scripted hash output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(with = "crate::decimal")]
    pub elem: BigUint,
    pub message: String,
    #[serde(with = "crate::decimal")]
    pub output: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ChallengeHash {
    Production,
    Scripted {
        #[serde(with = "script_table")]
        script: ScriptTable,
    },
}

/// Scripted outputs keyed by `(element, message)`.
pub type ScriptTable = BTreeMap<(BigUint, Vec<u8>), BigUint>;

mod script_table {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(table: &ScriptTable, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<ScriptEntry> = table
            .iter()
            .map(|((elem, message), output)| ScriptEntry {
                elem: elem.clone(),
                message: String::from_utf8_lossy(message).into_owned(),
                output: output.clone(),
            })
            .collect();
        entries.serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> std::result::Result<ScriptTable, D::Error> {
        let entries = Vec::<ScriptEntry>::deserialize(deserializer)?;
        Ok(entries
            .into_iter()
            .map(|e| ((e.elem, e.message.into_bytes()), e.output))
            .collect())
    }
}

impl ChallengeHash {
    pub fn scripted(entries: impl IntoIterator<Item = ScriptEntry>) -> Self {
        ChallengeHash::Scripted {
            script: entries
                .into_iter()
                .map(|e| ((e.elem, e.message.into_bytes()), e.output))
                .collect(),
        }
    }

    /// Reads a script file: one JSON record `{elem, message, output}` per line.
    pub fn read_script(reader: impl BufRead) -> Result<Self> {
        let mut entries = Vec::new();
        for line in reader.lines() {
            let line = line.map_err(|e| Error::Malformed(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str::<ScriptEntry>(&line)?);
        }
        Ok(ChallengeHash::scripted(entries))
    }

    pub fn is_scripted(&self) -> bool {
        matches!(self, ChallengeHash::Scripted { .. })
    }

    pub fn hash_to_scalar(&self, elem: &GroupElement, message: &[u8], params: &GroupParams) -> Result<Scalar> {
        match self {
            ChallengeHash::Production => {
                let encoded = canonical_encode(elem, params);
                let mut hasher = Sha256::new();
                hasher.update((encoded.len() as u32).to_be_bytes());
                hasher.update(&encoded);
                hasher.update(message);
                let digest = hasher.finalize();
                Ok(params.scalar(BigUint::from_bytes_be(&digest)))
            }
            ChallengeHash::Scripted { script } => script
                .get(&(elem.value().clone(), message.to_vec()))
                .map(|out| params.scalar(out.clone()))
                .ok_or_else(|| Error::ScriptMiss {
                    elem: elem.value().clone(),
                    message: String::from_utf8_lossy(message).into_owned(),
                }),
        }
    }
}

/// Fixed-width big-endian encoding, `ceil(bits(p) / 8)` bytes.
pub fn canonical_encode(elem: &GroupElement, params: &GroupParams) -> Vec<u8> {
    let width = params.element_width();
    let raw = elem.value().to_bytes_be();
    let mut out = vec![0u8; width.saturating_sub(raw.len())];
    out.extend_from_slice(&raw);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn demo() -> GroupParams {
        GroupParams::small(47, 23, 2).unwrap()
    }

    fn entry(elem: u32, message: &str, output: u32) -> ScriptEntry {
        ScriptEntry {
            elem: elem.into(),
            message: message.into(),
            output: output.into(),
        }
    }

    #[test]
    fn scripted_lookup_and_miss() {
        let params = demo();
        let h = ChallengeHash::scripted([entry(3, "worked-example", 8)]);
        let three = params.element(3u32).unwrap();
        assert_eq!(
            h.hash_to_scalar(&three, b"worked-example", &params).unwrap(),
            params.scalar(8u32)
        );
        assert!(matches!(
            h.hash_to_scalar(&three, b"other", &params),
            Err(Error::ScriptMiss { .. })
        ));
    }

    #[test]
    fn production_is_deterministic_and_reduced() {
        let params = demo();
        let h = ChallengeHash::Production;
        let elem = params.element(3u32).unwrap();
        let a = h.hash_to_scalar(&elem, b"worked-example", &params).unwrap();
        let b = h.hash_to_scalar(&elem, b"worked-example", &params).unwrap();
        assert_eq!(a, b);

        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let elem = params.element(rng.gen_range(1u32..47)).unwrap();
            let len = rng.gen_range(0..64);
            let msg: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
            let out = h.hash_to_scalar(&elem, &msg, &params).unwrap();
            assert!(out.value() < params.q());
        }
    }

    #[test]
    fn encoding_examples() {
        let params = demo();
        assert_eq!(canonical_encode(&params.element(3u32).unwrap(), &params), [0x03]);
        assert_eq!(canonical_encode(&params.element(27u32).unwrap(), &params), [0x1B]);
        let mut seen = std::collections::HashSet::new();
        for v in 1u32..47 {
            let enc = canonical_encode(&params.element(v).unwrap(), &params);
            assert_eq!(enc.len(), 1);
            assert!(seen.insert(enc));
        }
    }

    #[test]
    fn encoding_pads_to_width() {
        let params = GroupParams::small(1019, 509, 4).unwrap();
        assert_eq!(params.element_width(), 2);
        assert_eq!(canonical_encode(&params.element(5u32).unwrap(), &params), [0, 5]);
    }

    #[test]
    fn script_file_and_serde() {
        let text = "{\"elem\":\"3\",\"message\":\"worked-example\",\"output\":\"8\"}\n\n";
        let h = ChallengeHash::read_script(text.as_bytes()).unwrap();
        assert_eq!(h, ChallengeHash::scripted([entry(3, "worked-example", 8)]));
        let json = serde_json::to_string(&h).unwrap();
        let back: ChallengeHash = serde_json::from_str(&json).unwrap();
        assert_eq!(back, h);
        let prod: ChallengeHash = serde_json::from_str(r#"{"mode":"production"}"#).unwrap();
        assert_eq!(prod, ChallengeHash::Production);
    }
}
