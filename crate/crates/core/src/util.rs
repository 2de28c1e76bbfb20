use sha2::{Digest, Sha256};

/// Hex-encoded SHA-256, used for artifact digests.
pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
