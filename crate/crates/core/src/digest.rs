//! Stable SHA-256 digests for content addressing, identifiers and manifests.

use sha2::{Digest, Sha256};

use crate::corpus::Instance;

/// Incremental hasher over length-prefixed fields, so that field boundaries
/// cannot be shifted to forge a collision (`"ab" + "c"` vs `"a" + "bc"`).
#[derive(Clone, Default)]
pub struct FieldHasher(Sha256);

impl FieldHasher {
    pub fn new() -> Self {
        FieldHasher(Sha256::new())
    }

    pub fn field(mut self, bytes: impl AsRef<[u8]>) -> Self {
        let bytes = bytes.as_ref();
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(bytes);
        self
    }

    pub fn u64(mut self, value: u64) -> Self {
        self.0.update(value.to_le_bytes());
        self
    }

    pub fn finish(self) -> [u8; 32] {
        self.0.finalize().into()
    }

    pub fn finish_hex(self) -> String {
        hex::encode(self.finish())
    }
}

pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}

/// Content hash over (rule, question, scenario, ordered history, gold answer).
///
/// Identifiers, tree ids and evidence are excluded: two records that show a
/// model the same input and expect the same output are duplicates.
pub fn content_hash(instance: &Instance) -> [u8; 32] {
    let mut h = FieldHasher::new()
        .field(&instance.rule_text)
        .field(&instance.question)
        .field(&instance.scenario)
        .u64(instance.history.len() as u64);
    for turn in &instance.history {
        h = h
            .field(&turn.follow_up_question)
            .field(turn.follow_up_answer.as_str());
    }
    h.field(&instance.gold_answer).finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_boundaries_matter() {
        let a = FieldHasher::new().field("ab").field("c").finish();
        let b = FieldHasher::new().field("a").field("bc").finish();
        assert_ne!(a, b);
    }

    #[test]
    fn known_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
