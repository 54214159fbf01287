//! Serde adapters for registers embedded in ciphertexts.
//!
//! Registers are written in their structural form ([`QRegRecord`]); pending
//! oracles are restored through [`resolve_oracle`], which knows every oracle kind
//! this crate creates.

use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::primitives::sig::resolve_sign_oracle;
use crate::qstate::{OracleDescriptor, QReg, QRegRecord, XorOracle};

pub fn resolve_oracle(d: &OracleDescriptor) -> Option<Arc<dyn XorOracle>> {
    resolve_sign_oracle(d)
}

pub fn serialize<S: Serializer>(reg: &QReg, s: S) -> Result<S::Ok, S::Error> {
    reg.to_record().serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<QReg, D::Error> {
    let record = QRegRecord::deserialize(d)?;
    QReg::from_record(&record, &resolve_oracle).map_err(serde::de::Error::custom)
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(regs: &[QReg], s: S) -> Result<S::Ok, S::Error> {
        regs.iter().map(QReg::to_record).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<QReg>, D::Error> {
        Vec::<QRegRecord>::deserialize(d)?
            .iter()
            .map(|r| QReg::from_record(r, &resolve_oracle).map_err(serde::de::Error::custom))
            .collect()
    }
}
