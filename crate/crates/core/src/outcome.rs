use serde::{Deserialize, Serialize};

/// Result of a decryption attempt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecryptOutcome<T> {
    Plaintext(T),
    /// ⊥
    Reject,
    /// The helper key is older than the ciphertext; run Update and retry.
    GetUpdate,
}

impl<T> DecryptOutcome<T> {
    pub fn plaintext(self) -> Option<T> {
        match self {
            DecryptOutcome::Plaintext(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_get_update(&self) -> bool {
        matches!(self, DecryptOutcome::GetUpdate)
    }

    pub fn is_reject(&self) -> bool {
        matches!(self, DecryptOutcome::Reject)
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> DecryptOutcome<U> {
        match self {
            DecryptOutcome::Plaintext(t) => DecryptOutcome::Plaintext(f(t)),
            DecryptOutcome::Reject => DecryptOutcome::Reject,
            DecryptOutcome::GetUpdate => DecryptOutcome::GetUpdate,
        }
    }

    pub fn and_then<U>(self, f: impl FnOnce(T) -> DecryptOutcome<U>) -> DecryptOutcome<U> {
        match self {
            DecryptOutcome::Plaintext(t) => f(t),
            DecryptOutcome::Reject => DecryptOutcome::Reject,
            DecryptOutcome::GetUpdate => DecryptOutcome::GetUpdate,
        }
    }
}
