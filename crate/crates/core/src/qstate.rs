//! Simulated quantum registers for BB84 product states with XOR ancillas.
//!
//! A [`QReg`] is stored as a tensor product of sparse factors, each holding the
//! branches (label, real amplitude) of a group of wires, followed by a stack of
//! pending XOR oracles `|m⟩|a⟩ → |m⟩|a ⊕ f(m)⟩`. The logical branch set is the
//! product of the factors with the oracles applied in order. Oracles are
//! permutations of the computational basis, so computational measurement only
//! needs per-factor sampling; other measurements materialize the branch set
//! first, up to a configurable cap.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{BasisString, BitString};
use crate::encoding::Digest;

/// Tolerance for normalization checks.
pub const AMPLITUDE_TOLERANCE: f64 = 1e-9;
/// Amplitudes below this magnitude are dropped after interference.
pub const PRUNE_THRESHOLD: f64 = 1e-12;
pub const DEFAULT_DENSE_CAP: usize = 16;
pub const DEFAULT_BRANCH_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QStateError {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("width mismatch: oracle outputs {oracle} bits, {expected} requested")]
    WidthMismatch { expected: usize, oracle: usize },
    #[error("register too large: {what} {size} exceeds cap {cap}")]
    TooLarge { what: &'static str, size: usize, cap: usize },
    #[error("wire {0} out of range")]
    WireOutOfRange(usize),
    #[error("wire {0} used twice")]
    DuplicateWire(usize),
    #[error("distributions are over different outcome spaces: {0}")]
    DomainMismatch(String),
    #[error("unknown oracle kind {0:?}")]
    UnknownOracle(String),
    #[error("invalid register record: {0}")]
    InvalidRecord(String),
}

/// Serializable description of an oracle, used to restore registers from disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleDescriptor {
    pub kind: String,
    #[serde(with = "crate::encoding::hex_bytes")]
    pub params: Vec<u8>,
}

/// A classical function `f` applied reversibly as `|m⟩|a⟩ → |m⟩|a ⊕ f(m)⟩`.
pub trait XorOracle: Send + Sync + fmt::Debug {
    fn input_width(&self) -> usize;
    fn output_width(&self) -> usize;
    fn eval(&self, input: &BitString) -> BitString;
    /// Identifies the function; two oracles with equal fingerprints must compute the same map.
    fn fingerprint(&self) -> Digest;
    fn descriptor(&self) -> OracleDescriptor;
}

type OracleFn = dyn Fn(&BitString) -> BitString + Send + Sync;

/// Closure-backed oracle. The name doubles as its identity.
pub struct FnOracle {
    name: String,
    input_width: usize,
    output_width: usize,
    f: Box<OracleFn>,
}

impl FnOracle {
    pub fn new(
        name: impl Into<String>,
        input_width: usize,
        output_width: usize,
        f: impl Fn(&BitString) -> BitString + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), input_width, output_width, f: Box::new(f) }
    }
}

impl fmt::Debug for FnOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnOracle({}, {} -> {})", self.name, self.input_width, self.output_width)
    }
}

impl XorOracle for FnOracle {
    fn input_width(&self) -> usize {
        self.input_width
    }

    fn output_width(&self) -> usize {
        self.output_width
    }

    fn eval(&self, input: &BitString) -> BitString {
        (self.f)(input)
    }

    fn fingerprint(&self) -> Digest {
        crate::encoding::hash_parts("qstate/fn-oracle", &[self.name.as_bytes()])
    }

    fn descriptor(&self) -> OracleDescriptor {
        OracleDescriptor { kind: format!("fn:{}", self.name), params: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Factor {
    wires: Vec<usize>,
    branches: BTreeMap<Vec<bool>, f64>,
}

impl Factor {
    fn single(wire: usize, branches: BTreeMap<Vec<bool>, f64>) -> Self {
        Self { wires: vec![wire], branches }
    }

    fn position(&self, wire: usize) -> Option<usize> {
        self.wires.iter().position(|&w| w == wire)
    }

    fn apply_hadamard(&mut self, k: usize) {
        let mut out: BTreeMap<Vec<bool>, f64> = BTreeMap::new();
        for (label, &amp) in &self.branches {
            let sign = if label[k] { -1.0 } else { 1.0 };
            let mut l0 = label.clone();
            l0[k] = false;
            let mut l1 = label.clone();
            l1[k] = true;
            *out.entry(l0).or_insert(0.0) += amp * FRAC_1_SQRT_2;
            *out.entry(l1).or_insert(0.0) += sign * amp * FRAC_1_SQRT_2;
        }
        out.retain(|_, a| a.abs() >= PRUNE_THRESHOLD);
        self.branches = out;
    }

    fn norm_squared(&self) -> f64 {
        self.branches.values().map(|a| a * a).sum()
    }

    /// Samples a branch label with probability amplitude².
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<bool> {
        let total = self.norm_squared();
        let mut u = rng.gen::<f64>() * total;
        let mut last = None;
        for (label, a) in &self.branches {
            u -= a * a;
            if u < 0.0 {
                return label.clone();
            }
            last = Some(label);
        }
        last.expect("factor has at least one branch").clone()
    }
}

#[derive(Clone)]
struct PendingOracle {
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    oracle: Arc<dyn XorOracle>,
}

impl PendingOracle {
    fn same_as(&self, other: &PendingOracle) -> bool {
        self.inputs == other.inputs
            && self.outputs == other.outputs
            && self.oracle.fingerprint() == other.oracle.fingerprint()
    }

    fn apply_to(&self, label: &mut [bool]) {
        let input: BitString = self.inputs.iter().map(|&w| label[w]).collect();
        let out = self.oracle.eval(&input);
        for (j, &w) in self.outputs.iter().enumerate() {
            label[w] ^= out[j];
        }
    }
}

/// An immutable simulated register. Operations return new registers.
#[derive(Clone)]
pub struct QReg {
    n_wires: usize,
    factors: Vec<Factor>,
    oracles: Vec<PendingOracle>,
    branch_cap: usize,
}

impl fmt::Debug for QReg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QReg")
            .field("n_wires", &self.n_wires)
            .field("factors", &self.factors.len())
            .field("pending_oracles", &self.oracles.len())
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub outcome: BitString,
    pub post_state: QReg,
}

/// Probability of each outcome string.
pub type Distribution = BTreeMap<BitString, f64>;

pub fn bb84_prepare(x: &BitString, theta: &BasisString) -> Result<QReg, QStateError> {
    if x.len() != theta.len() {
        return Err(QStateError::LengthMismatch { expected: x.len(), actual: theta.len() });
    }
    let factors = (0..x.len())
        .map(|j| Factor::single(j, single_qubit(x[j], theta.is_hadamard(j))))
        .collect();
    Ok(QReg { n_wires: x.len(), factors, oracles: Vec::new(), branch_cap: DEFAULT_BRANCH_CAP })
}

fn single_qubit(value: bool, hadamard: bool) -> BTreeMap<Vec<bool>, f64> {
    if hadamard {
        let sign = if value { -1.0 } else { 1.0 };
        BTreeMap::from([(vec![false], FRAC_1_SQRT_2), (vec![true], sign * FRAC_1_SQRT_2)])
    } else {
        BTreeMap::from([(vec![value], 1.0)])
    }
}

impl QReg {
    /// The computational basis state `|label⟩`.
    pub fn basis_state(label: &BitString) -> Self {
        let factor = Factor {
            wires: (0..label.len()).collect(),
            branches: BTreeMap::from([(label.as_slice().to_vec(), 1.0)]),
        };
        Self {
            n_wires: label.len(),
            factors: vec![factor],
            oracles: Vec::new(),
            branch_cap: DEFAULT_BRANCH_CAP,
        }
    }

    /// Builds a register from explicit branches. Amplitudes are renormalized.
    pub fn from_branches(n_wires: usize, branches: &[(BitString, f64)]) -> Result<Self, QStateError> {
        let mut map = BTreeMap::new();
        for (label, amp) in branches {
            if label.len() != n_wires {
                return Err(QStateError::LengthMismatch { expected: n_wires, actual: label.len() });
            }
            *map.entry(label.as_slice().to_vec()).or_insert(0.0) += amp;
        }
        map.retain(|_, a: &mut f64| a.abs() >= PRUNE_THRESHOLD);
        let norm: f64 = map.values().map(|a| a * a).sum::<f64>().sqrt();
        if map.is_empty() || norm == 0.0 {
            return Err(QStateError::InvalidRecord("zero vector".into()));
        }
        map.values_mut().for_each(|a| *a /= norm);
        Ok(Self {
            n_wires,
            factors: vec![Factor { wires: (0..n_wires).collect(), branches: map }],
            oracles: Vec::new(),
            branch_cap: DEFAULT_BRANCH_CAP,
        })
    }

    pub fn with_branch_cap(mut self, cap: usize) -> Self {
        self.branch_cap = cap;
        self
    }

    pub fn n_wires(&self) -> usize {
        self.n_wires
    }

    pub fn pending_oracles(&self) -> usize {
        self.oracles.len()
    }

    /// Number of logical branches (saturating).
    pub fn branch_count(&self) -> usize {
        self.factors.iter().fold(1usize, |acc, f| acc.saturating_mul(f.branches.len()))
    }

    pub fn norm_squared(&self) -> f64 {
        self.factors.iter().map(Factor::norm_squared).product()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_squared() - 1.0).abs() <= AMPLITUDE_TOLERANCE
    }

    /// Applies `|m⟩|a⟩ → |m⟩|a ⊕ f(m)⟩` with `m` all current wires and `a` a fresh
    /// all-zero ancilla of `out_width` wires appended at the end.
    pub fn apply_xor_map(&self, oracle: Arc<dyn XorOracle>, out_width: usize) -> Result<QReg, QStateError> {
        if oracle.output_width() != out_width {
            return Err(QStateError::WidthMismatch { expected: out_width, oracle: oracle.output_width() });
        }
        if oracle.input_width() != self.n_wires {
            return Err(QStateError::LengthMismatch { expected: self.n_wires, actual: oracle.input_width() });
        }
        let mut next = self.clone();
        let start = self.n_wires;
        next.n_wires += out_width;
        if out_width > 0 {
            next.factors.push(Factor {
                wires: (start..start + out_width).collect(),
                branches: BTreeMap::from([(vec![false; out_width], 1.0)]),
            });
        }
        next.push_oracle(PendingOracle {
            inputs: (0..start).collect(),
            outputs: (start..start + out_width).collect(),
            oracle,
        });
        Ok(next)
    }

    /// Applies the XOR map on existing wires: inputs and outputs must be disjoint.
    /// Applying the same oracle on the same wires twice in a row is the identity.
    pub fn apply_xor_map_on(
        &self,
        inputs: &[usize],
        outputs: &[usize],
        oracle: Arc<dyn XorOracle>,
    ) -> Result<QReg, QStateError> {
        if oracle.input_width() != inputs.len() {
            return Err(QStateError::LengthMismatch { expected: inputs.len(), actual: oracle.input_width() });
        }
        if oracle.output_width() != outputs.len() {
            return Err(QStateError::WidthMismatch { expected: outputs.len(), oracle: oracle.output_width() });
        }
        let mut seen = vec![false; self.n_wires];
        for &w in inputs.iter().chain(outputs) {
            if w >= self.n_wires {
                return Err(QStateError::WireOutOfRange(w));
            }
            if std::mem::replace(&mut seen[w], true) {
                return Err(QStateError::DuplicateWire(w));
            }
        }
        let mut next = self.clone();
        next.push_oracle(PendingOracle { inputs: inputs.to_vec(), outputs: outputs.to_vec(), oracle });
        Ok(next)
    }

    fn push_oracle(&mut self, op: PendingOracle) {
        match self.oracles.last() {
            Some(top) if top.same_as(&op) => {
                self.oracles.pop();
            }
            _ => self.oracles.push(op),
        }
    }

    /// Collapses factors and oracles into a single explicit factor.
    fn materialize(&self) -> Result<QReg, QStateError> {
        if self.oracles.is_empty() && self.factors.len() == 1 && self.factors[0].wires == (0..self.n_wires).collect::<Vec<_>>() {
            return Ok(self.clone());
        }
        let count = self.factors.iter().try_fold(1usize, |acc, f| acc.checked_mul(f.branches.len()));
        match count {
            Some(c) if c <= self.branch_cap => {}
            _ => {
                return Err(QStateError::TooLarge {
                    what: "branch count",
                    size: count.unwrap_or(usize::MAX),
                    cap: self.branch_cap,
                })
            }
        }
        let mut partial: Vec<(Vec<bool>, f64)> = vec![(vec![false; self.n_wires], 1.0)];
        for factor in &self.factors {
            let mut next = Vec::with_capacity(partial.len() * factor.branches.len());
            for (label, amp) in &partial {
                for (flabel, famp) in &factor.branches {
                    let mut l = label.clone();
                    for (k, &w) in factor.wires.iter().enumerate() {
                        l[w] = flabel[k];
                    }
                    next.push((l, amp * famp));
                }
            }
            partial = next;
        }
        for op in &self.oracles {
            for (label, _) in partial.iter_mut() {
                op.apply_to(label);
            }
        }
        Ok(QReg {
            n_wires: self.n_wires,
            factors: vec![Factor { wires: (0..self.n_wires).collect(), branches: partial.into_iter().collect() }],
            oracles: Vec::new(),
            branch_cap: self.branch_cap,
        })
    }

    /// The logical branch set, ordered by label.
    pub fn branches(&self) -> Result<Vec<(BitString, f64)>, QStateError> {
        let m = self.materialize()?;
        let factor = &m.factors[0];
        Ok(factor.branches.iter().map(|(l, &a)| (BitString::new(l.clone()), a)).collect())
    }

    pub fn dense_statevector(&self) -> Result<Vec<f64>, QStateError> {
        self.dense_statevector_with_cap(DEFAULT_DENSE_CAP)
    }

    /// Amplitude vector indexed big-endian: wire 0 is the most significant bit.
    pub fn dense_statevector_with_cap(&self, cap: usize) -> Result<Vec<f64>, QStateError> {
        if self.n_wires > cap {
            return Err(QStateError::TooLarge { what: "wire count", size: self.n_wires, cap });
        }
        let mut v = vec![0.0; 1usize << self.n_wires];
        for (label, amp) in self.branches()? {
            v[label.to_u64() as usize] += amp;
        }
        Ok(v)
    }

    /// Measures all wires in the computational basis.
    pub fn measure_computational<R: Rng + ?Sized>(&self, rng: &mut R) -> MeasurementOutcome {
        let mut label = vec![false; self.n_wires];
        for factor in &self.factors {
            let sampled = factor.sample(rng);
            for (k, &w) in factor.wires.iter().enumerate() {
                label[w] = sampled[k];
            }
        }
        for op in &self.oracles {
            op.apply_to(&mut label);
        }
        let outcome = BitString::new(label);
        let post_state = QReg::basis_state(&outcome).with_branch_cap(self.branch_cap);
        MeasurementOutcome { outcome, post_state }
    }

    /// Measures wires `0..basis.len()`, wire `j` in the Hadamard basis iff `basis[j] = 1`.
    /// Wires beyond the basis length stay unmeasured.
    pub fn measure_in_basis<R: Rng + ?Sized>(
        &self,
        basis: &BasisString,
        rng: &mut R,
    ) -> Result<MeasurementOutcome, QStateError> {
        let wires: Vec<usize> = (0..basis.len()).collect();
        self.measure_wires(&wires, basis, rng)
    }

    /// Measures the listed wires in order, `basis[k]` selecting the basis of `wires[k]`.
    pub fn measure_wires<R: Rng + ?Sized>(
        &self,
        wires: &[usize],
        basis: &BasisString,
        rng: &mut R,
    ) -> Result<MeasurementOutcome, QStateError> {
        if basis.len() != wires.len() {
            return Err(QStateError::LengthMismatch { expected: wires.len(), actual: basis.len() });
        }
        if wires.len() > self.n_wires {
            return Err(QStateError::LengthMismatch { expected: self.n_wires, actual: wires.len() });
        }
        if let Some(&w) = wires.iter().find(|&&w| w >= self.n_wires) {
            return Err(QStateError::WireOutOfRange(w));
        }
        let mut reg = if self.oracles.is_empty() { self.clone() } else { self.materialize()? };
        let mut outcome = BitString::zeros(wires.len());
        for (k, &w) in wires.iter().enumerate() {
            outcome.set(k, reg.measure_one(w, basis.is_hadamard(k), rng));
        }
        Ok(MeasurementOutcome { outcome, post_state: reg })
    }

    /// Projective single-wire measurement; splits the measured wire into its own factor.
    fn measure_one<R: Rng + ?Sized>(&mut self, wire: usize, hadamard: bool, rng: &mut R) -> bool {
        let fi = self
            .factors
            .iter()
            .position(|f| f.position(wire).is_some())
            .expect("every wire belongs to a factor");
        let mut factor = self.factors.swap_remove(fi);
        let k = factor.position(wire).expect("wire in factor");
        if hadamard {
            factor.apply_hadamard(k);
        }
        let total = factor.norm_squared();
        let p1: f64 = factor.branches.iter().filter(|(l, _)| l[k]).map(|(_, a)| a * a).sum::<f64>() / total;
        let value = rng.gen::<f64>() < p1;
        let kept: Vec<(Vec<bool>, f64)> = factor
            .branches
            .into_iter()
            .filter(|(l, _)| l[k] == value)
            .map(|(mut l, a)| {
                l.remove(k);
                (l, a)
            })
            .collect();
        let norm: f64 = kept.iter().map(|(_, a)| a * a).sum::<f64>().sqrt();
        factor.wires.remove(k);
        if !factor.wires.is_empty() {
            factor.branches = kept.into_iter().map(|(l, a)| (l, a / norm)).collect();
            self.factors.push(factor);
        }
        self.factors.push(Factor::single(wire, single_qubit(value, hadamard)));
        value
    }

    /// Exact outcome distribution of measuring wires `0..basis.len()` in `basis`.
    pub fn outcome_distribution(&self, basis: &BasisString) -> Result<Distribution, QStateError> {
        if basis.len() > self.n_wires {
            return Err(QStateError::LengthMismatch { expected: self.n_wires, actual: basis.len() });
        }
        let mut m = self.materialize()?;
        let factor = &mut m.factors[0];
        for j in (0..basis.len()).filter(|&j| basis.is_hadamard(j)) {
            factor.apply_hadamard(j);
        }
        let mut dist = Distribution::new();
        for (label, a) in &factor.branches {
            *dist.entry(BitString::new(label[..basis.len()].to_vec())).or_insert(0.0) += a * a;
        }
        Ok(dist)
    }

    /// `{"n": .., "branches": [["bits", amp], ..]}`; materializes the branch set.
    pub fn to_debug_json(&self) -> Result<serde_json::Value, QStateError> {
        let branches: Vec<serde_json::Value> = self
            .branches()?
            .into_iter()
            .map(|(l, a)| serde_json::json!([l.to_string(), a]))
            .collect();
        Ok(serde_json::json!({ "n": self.n_wires, "branches": branches }))
    }

    /// Structural form that keeps factors and oracles unexpanded.
    pub fn to_record(&self) -> QRegRecord {
        QRegRecord {
            n: self.n_wires,
            factors: self
                .factors
                .iter()
                .map(|f| FactorRecord {
                    wires: f.wires.clone(),
                    branches: f.branches.iter().map(|(l, &a)| (BitString::new(l.clone()), a)).collect(),
                })
                .collect(),
            oracles: self
                .oracles
                .iter()
                .map(|op| OracleRecord {
                    inputs: op.inputs.clone(),
                    outputs: op.outputs.clone(),
                    oracle: op.oracle.descriptor(),
                })
                .collect(),
        }
    }

    pub fn from_record(
        record: &QRegRecord,
        resolve: &dyn Fn(&OracleDescriptor) -> Option<Arc<dyn XorOracle>>,
    ) -> Result<QReg, QStateError> {
        let mut covered = vec![false; record.n];
        let mut factors = Vec::with_capacity(record.factors.len());
        for fr in &record.factors {
            for &w in &fr.wires {
                if w >= record.n {
                    return Err(QStateError::WireOutOfRange(w));
                }
                if std::mem::replace(&mut covered[w], true) {
                    return Err(QStateError::DuplicateWire(w));
                }
            }
            let mut branches = BTreeMap::new();
            for (label, amp) in &fr.branches {
                if label.len() != fr.wires.len() {
                    return Err(QStateError::LengthMismatch { expected: fr.wires.len(), actual: label.len() });
                }
                if branches.insert(label.as_slice().to_vec(), *amp).is_some() {
                    return Err(QStateError::InvalidRecord(format!("duplicate label {label}")));
                }
            }
            if branches.is_empty() {
                return Err(QStateError::InvalidRecord("empty factor".into()));
            }
            factors.push(Factor { wires: fr.wires.clone(), branches });
        }
        if let Some(w) = covered.iter().position(|c| !c) {
            return Err(QStateError::InvalidRecord(format!("wire {w} not covered")));
        }
        let mut reg = QReg { n_wires: record.n, factors, oracles: Vec::new(), branch_cap: DEFAULT_BRANCH_CAP };
        if !reg.is_normalized() {
            return Err(QStateError::InvalidRecord("not normalized".into()));
        }
        for op in &record.oracles {
            let oracle = resolve(&op.oracle).ok_or_else(|| QStateError::UnknownOracle(op.oracle.kind.clone()))?;
            reg = reg.apply_xor_map_on(&op.inputs, &op.outputs, oracle)?;
        }
        Ok(reg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QRegRecord {
    pub n: usize,
    pub factors: Vec<FactorRecord>,
    pub oracles: Vec<OracleRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorRecord {
    pub wires: Vec<usize>,
    pub branches: Vec<(BitString, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub oracle: OracleDescriptor,
}

/// `½ Σ |p(o) − q(o)|` over the union of supports.
///
/// Both inputs must be probability distributions (mass 1 within 1e-6, no negative
/// entries) over strings of one common length.
pub fn distribution_trace_distance(p: &Distribution, q: &Distribution) -> Result<f64, QStateError> {
    let width = p.keys().chain(q.keys()).map(BitString::len).next();
    if let Some(w) = width {
        if let Some(bad) = p.keys().chain(q.keys()).find(|k| k.len() != w) {
            return Err(QStateError::DomainMismatch(format!("outcome {bad} has length {} not {w}", bad.len())));
        }
    }
    for (name, d) in [("p", p), ("q", q)] {
        let mass: f64 = d.values().sum();
        if d.values().any(|&v| v < 0.0) || (mass - 1.0).abs() > 1e-6 {
            return Err(QStateError::DomainMismatch(format!("{name} is not a probability distribution (mass {mass})")));
        }
    }
    let mut total = 0.0;
    for (k, &pv) in p {
        total += (pv - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, &qv) in q {
        if !p.contains_key(k) {
            total += qv;
        }
    }
    Ok((total / 2.0).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn basis(s: &str) -> BasisString {
        s.parse().unwrap()
    }

    #[test]
    fn bb84_examples() {
        let r = bb84_prepare(&bs("00"), &basis("00")).unwrap();
        assert_eq!(r.branches().unwrap(), vec![(bs("00"), 1.0)]);

        let r = bb84_prepare(&bs("1"), &basis("1")).unwrap();
        assert_eq!(r.branches().unwrap(), vec![(bs("0"), FRAC_1_SQRT_2), (bs("1"), -FRAC_1_SQRT_2)]);

        let r = bb84_prepare(&bs("10"), &basis("01")).unwrap();
        assert_eq!(r.branches().unwrap(), vec![(bs("10"), FRAC_1_SQRT_2), (bs("11"), FRAC_1_SQRT_2)]);

        assert!(matches!(
            bb84_prepare(&bs("10"), &basis("0")),
            Err(QStateError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn cnot_example() {
        let r = bb84_prepare(&bs("0"), &basis("1")).unwrap();
        let f = Arc::new(FnOracle::new("id", 1, 1, |m: &BitString| m.clone()));
        let out = r.apply_xor_map(f, 1).unwrap();
        assert_eq!(out.branches().unwrap(), vec![(bs("00"), FRAC_1_SQRT_2), (bs("11"), FRAC_1_SQRT_2)]);
    }

    #[test]
    fn width_mismatch() {
        let r = bb84_prepare(&bs("0"), &basis("1")).unwrap();
        let f = Arc::new(FnOracle::new("id", 1, 1, |m: &BitString| m.clone()));
        assert!(matches!(r.apply_xor_map(f, 2), Err(QStateError::WidthMismatch { .. })));
    }

    #[test]
    fn double_application_pops() {
        let r = bb84_prepare(&bs("01"), &basis("11")).unwrap();
        let f: Arc<dyn XorOracle> = Arc::new(FnOracle::new("not", 2, 2, |m: &BitString| {
            m.iter().map(|b| !b).collect()
        }));
        let once = r.apply_xor_map(f.clone(), 2).unwrap();
        assert_eq!(once.pending_oracles(), 1);
        let twice = once.apply_xor_map_on(&[0, 1], &[2, 3], f).unwrap();
        assert_eq!(twice.pending_oracles(), 0);
        let expect: Vec<_> = r
            .branches()
            .unwrap()
            .into_iter()
            .map(|(l, a)| (l.concat(&BitString::zeros(2)), a))
            .collect();
        assert_eq!(twice.branches().unwrap(), expect);
    }

    #[test]
    fn dense_examples() {
        assert_eq!(bb84_prepare(&bs("0"), &basis("0")).unwrap().dense_statevector().unwrap(), vec![1.0, 0.0]);
        assert_eq!(
            bb84_prepare(&bs("0"), &basis("1")).unwrap().dense_statevector().unwrap(),
            vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2]
        );
        let big = QReg::basis_state(&BitString::zeros(17));
        assert!(matches!(big.dense_statevector(), Err(QStateError::TooLarge { .. })));
    }

    #[test]
    fn same_basis_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let x = bs("1011001");
        let th = basis("0110101");
        let r = bb84_prepare(&x, &th).unwrap();
        for _ in 0..50 {
            assert_eq!(r.measure_in_basis(&th, &mut rng).unwrap().outcome, x);
        }
    }

    #[test]
    fn prefix_measurement_leaves_rest() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let r = bb84_prepare(&bs("110"), &basis("011")).unwrap();
        let m = r.measure_in_basis(&basis("0"), &mut rng).unwrap();
        assert_eq!(m.outcome, bs("1"));
        assert!(m.post_state.is_normalized());
        let rest = m.post_state.measure_in_basis(&basis("011"), &mut rng).unwrap();
        assert_eq!(rest.outcome, bs("110"));
    }

    #[test]
    fn trace_distance_examples() {
        let p = Distribution::from([(bs("0"), 0.5), (bs("1"), 0.5)]);
        let q = Distribution::from([(bs("0"), 0.75), (bs("1"), 0.25)]);
        assert_eq!(distribution_trace_distance(&p, &p).unwrap(), 0.0);
        assert!((distribution_trace_distance(&p, &q).unwrap() - 0.25).abs() < 1e-12);
        let a = Distribution::from([(bs("0"), 1.0)]);
        let b = Distribution::from([(bs("1"), 1.0)]);
        assert_eq!(distribution_trace_distance(&a, &b).unwrap(), 1.0);
        let c = Distribution::from([(bs("00"), 1.0)]);
        assert!(matches!(distribution_trace_distance(&a, &c), Err(QStateError::DomainMismatch(_))));
    }

    #[test]
    fn record_round_trip() {
        let r = bb84_prepare(&bs("10"), &basis("11")).unwrap();
        let f: Arc<dyn XorOracle> = Arc::new(FnOracle::new("copy", 2, 2, |m: &BitString| m.clone()));
        let s = r.apply_xor_map(f.clone(), 2).unwrap();
        let rec = s.to_record();
        let json = serde_json::to_string(&rec).unwrap();
        let back: QRegRecord = serde_json::from_str(&json).unwrap();
        let f2 = f.clone();
        let restored = QReg::from_record(&back, &move |d| (d.kind == "fn:copy").then(|| f2.clone())).unwrap();
        assert_eq!(restored.branches().unwrap(), s.branches().unwrap());
        assert!(QReg::from_record(&back, &|_| None).is_err());
    }

    #[test]
    fn branch_cap_enforced() {
        let r = bb84_prepare(&BitString::zeros(12), &BasisString::hadamard(12)).unwrap().with_branch_cap(1000);
        assert!(matches!(r.branches(), Err(QStateError::TooLarge { .. })));
        // no oracles: per-wire measurement never materializes
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        assert!(r.measure_in_basis(&BasisString::hadamard(12), &mut rng).is_ok());
    }

    #[test]
    fn debug_json_shape() {
        let r = bb84_prepare(&bs("1"), &basis("1")).unwrap();
        let v = r.to_debug_json().unwrap();
        assert_eq!(v["n"], 1);
        assert_eq!(v["branches"][1][0], "1");
    }
}
