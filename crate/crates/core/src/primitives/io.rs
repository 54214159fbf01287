//! Identity obfuscation: the program is stored in canonical form and evaluated as-is.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::SecurityStatus;
use crate::bits::BitString;
use crate::encoding;

pub const SECURITY_STATUS: SecurityStatus = SecurityStatus::TrustedModel;

/// Largest accepted canonical circuit encoding.
pub const MAX_CIRCUIT_BYTES: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IoError {
    #[error("circuit encoding of {size} bytes exceeds the {cap}-byte cap")]
    CircuitTooLarge { size: usize, cap: usize },
}

pub trait Circuit: Serialize + DeserializeOwned {
    type Input<'a>;
    type Output;

    fn eval(&self, input: Self::Input<'_>) -> Self::Output;
}

/// An obfuscated program. Serializes as the canonical bytes of the circuit.
#[derive(Debug, Clone)]
pub struct ObfuscatedProgram<C> {
    encoded: Vec<u8>,
    circuit: C,
}

impl<C: Circuit> ObfuscatedProgram<C> {
    pub fn eval(&self, input: C::Input<'_>) -> C::Output {
        self.circuit.eval(input)
    }

    pub fn encoded(&self) -> &[u8] {
        &self.encoded
    }

    pub fn size(&self) -> usize {
        self.encoded.len()
    }
}

impl<C> PartialEq for ObfuscatedProgram<C> {
    fn eq(&self, other: &Self) -> bool {
        self.encoded == other.encoded
    }
}

impl<C> Eq for ObfuscatedProgram<C> {}

pub fn io_obfuscate<C: Circuit>(circuit: C) -> Result<ObfuscatedProgram<C>, IoError> {
    io_obfuscate_with_cap(circuit, MAX_CIRCUIT_BYTES)
}

pub fn io_obfuscate_with_cap<C: Circuit>(circuit: C, cap: usize) -> Result<ObfuscatedProgram<C>, IoError> {
    let encoded = encoding::canonical_bytes(&circuit);
    if encoded.len() > cap {
        return Err(IoError::CircuitTooLarge { size: encoded.len(), cap });
    }
    Ok(ObfuscatedProgram { encoded, circuit })
}

pub fn io_eval<C: Circuit>(program: &ObfuscatedProgram<C>, input: C::Input<'_>) -> C::Output {
    program.eval(input)
}

impl<C> Serialize for ObfuscatedProgram<C> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        encoding::hex_bytes::serialize(&self.encoded, s)
    }
}

impl<'de, C: Circuit> Deserialize<'de> for ObfuscatedProgram<C> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let encoded = encoding::hex_bytes::deserialize(d)?;
        let circuit = encoding::from_canonical_bytes(&encoded).map_err(serde::de::Error::custom)?;
        Ok(Self { encoded, circuit })
    }
}

/// A gate-list boolean circuit; gate `k` produces wire `inputs + k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BooleanCircuit {
    pub inputs: usize,
    pub gates: Vec<Gate>,
    pub outputs: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gate {
    Const(bool),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Xor(usize, usize),
}

impl BooleanCircuit {
    pub fn identity(n: usize) -> Self {
        Self { inputs: n, gates: Vec::new(), outputs: (0..n).collect() }
    }
}

impl Circuit for BooleanCircuit {
    type Input<'a> = &'a BitString;
    type Output = BitString;

    fn eval(&self, input: &BitString) -> BitString {
        let mut wires: Vec<bool> = input.iter().take(self.inputs).collect();
        wires.resize(self.inputs, false);
        for g in &self.gates {
            let v = match *g {
                Gate::Const(b) => b,
                Gate::Not(a) => !wires[a],
                Gate::And(a, b) => wires[a] & wires[b],
                Gate::Or(a, b) => wires[a] | wires[b],
                Gate::Xor(a, b) => wires[a] ^ wires[b],
            };
            wires.push(v);
        }
        self.outputs.iter().map(|&w| wires[w]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_on_all_two_bit_inputs() {
        let p = io_obfuscate(BooleanCircuit::identity(2)).unwrap();
        for v in 0..4 {
            let x = BitString::from_u64(v, 2);
            assert_eq!(io_eval(&p, &x), x);
        }
    }

    #[test]
    fn distinct_circuits_stay_distinct() {
        let and = BooleanCircuit { inputs: 2, gates: vec![Gate::And(0, 1)], outputs: vec![2] };
        let or = BooleanCircuit { inputs: 2, gates: vec![Gate::Or(0, 1)], outputs: vec![2] };
        let pa = io_obfuscate(and).unwrap();
        let po = io_obfuscate(or).unwrap();
        let x = BitString::from_u64(1, 2);
        assert_ne!(io_eval(&pa, &x), io_eval(&po, &x));
        assert_ne!(pa, po);
    }

    #[test]
    fn too_large() {
        let c = BooleanCircuit::identity(64);
        assert!(matches!(io_obfuscate_with_cap(c, 8), Err(IoError::CircuitTooLarge { .. })));
    }

    #[test]
    fn serde_round_trip() {
        let c = BooleanCircuit { inputs: 2, gates: vec![Gate::Xor(0, 1), Gate::Not(2)], outputs: vec![3] };
        let p = io_obfuscate(c).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let back: ObfuscatedProgram<BooleanCircuit> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        for v in 0..4 {
            let x = BitString::from_u64(v, 2);
            assert_eq!(back.eval(&x), p.eval(&x));
        }
    }
}
