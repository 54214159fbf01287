//! Dense statevector reference used to check the branch simulator.
#![allow(dead_code)]

use std::f64::consts::FRAC_1_SQRT_2;

/// Amplitudes indexed big-endian: wire 0 is the most significant bit.
#[derive(Debug, Clone)]
pub struct Dense {
    pub n: usize,
    pub amp: Vec<f64>,
}

impl Dense {
    pub fn zero(n: usize) -> Self {
        let mut amp = vec![0.0; 1 << n];
        amp[0] = 1.0;
        Self { n, amp }
    }

    pub fn from_amplitudes(n: usize, amp: Vec<f64>) -> Self {
        let norm = amp.iter().map(|a| a * a).sum::<f64>().sqrt();
        Self { n, amp: amp.into_iter().map(|a| a / norm).collect() }
    }

    fn mask(&self, wire: usize) -> usize {
        1 << (self.n - 1 - wire)
    }

    pub fn x(&mut self, wire: usize) {
        let m = self.mask(wire);
        for i in 0..self.amp.len() {
            if i & m == 0 {
                self.amp.swap(i, i | m);
            }
        }
    }

    pub fn h(&mut self, wire: usize) {
        let m = self.mask(wire);
        for i in 0..self.amp.len() {
            if i & m == 0 {
                let (a, b) = (self.amp[i], self.amp[i | m]);
                self.amp[i] = (a + b) * FRAC_1_SQRT_2;
                self.amp[i | m] = (a - b) * FRAC_1_SQRT_2;
            }
        }
    }

    pub fn bb84(x: &[bool], theta: &[bool]) -> Self {
        let mut d = Self::zero(x.len());
        for j in 0..x.len() {
            if x[j] {
                d.x(j);
            }
            if theta[j] {
                d.h(j);
            }
        }
        d
    }

    fn bit(&self, index: usize, wire: usize) -> bool {
        index & self.mask(wire) != 0
    }

    /// `|i⟩|a⟩ → |i⟩|a ⊕ f(i)⟩` onto `width` fresh wires.
    pub fn append_xor(&self, width: usize, f: impl Fn(u64) -> u64) -> Dense {
        let mut amp = vec![0.0; 1 << (self.n + width)];
        for (i, &a) in self.amp.iter().enumerate() {
            amp[(i << width) | f(i as u64) as usize] += a;
        }
        Dense { n: self.n + width, amp }
    }

    /// XOR of `f(inputs)` into `outputs`, both read big-endian in list order.
    pub fn xor_on(&self, inputs: &[usize], outputs: &[usize], f: impl Fn(u64) -> u64) -> Dense {
        let mut amp = vec![0.0; self.amp.len()];
        for (i, &a) in self.amp.iter().enumerate() {
            let arg = inputs.iter().fold(0u64, |acc, &w| (acc << 1) | self.bit(i, w) as u64);
            let val = f(arg);
            let mut j = i;
            for (k, &w) in outputs.iter().enumerate() {
                if (val >> (outputs.len() - 1 - k)) & 1 == 1 {
                    j ^= self.mask(w);
                }
            }
            amp[j] += a;
        }
        Dense { n: self.n, amp }
    }

    /// Distribution of wires `0..basis.len()`, keyed big-endian.
    pub fn distribution(&self, basis: &[bool]) -> Vec<f64> {
        let mut d = self.clone();
        for (j, &hb) in basis.iter().enumerate() {
            if hb {
                d.h(j);
            }
        }
        let k = basis.len();
        let mut out = vec![0.0; 1 << k];
        for (i, a) in d.amp.iter().enumerate() {
            out[i >> (self.n - k)] += a * a;
        }
        out
    }

    /// Post-measurement state after observing `outcome[k]` on `wires[k]` in `basis[k]`.
    pub fn project(&self, wires: &[usize], basis: &[bool], outcome: &[bool]) -> Dense {
        let mut d = self.clone();
        for (k, &w) in wires.iter().enumerate() {
            if basis[k] {
                d.h(w);
            }
            for i in 0..d.amp.len() {
                if d.bit(i, w) != outcome[k] {
                    d.amp[i] = 0.0;
                }
            }
            if basis[k] {
                d.h(w);
            }
        }
        let norm = d.amp.iter().map(|a| a * a).sum::<f64>().sqrt();
        d.amp.iter_mut().for_each(|a| *a /= norm);
        d
    }
}

/// Largest entrywise difference after aligning the global sign.
pub fn sign_aligned_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = |s: f64| a.iter().zip(b).map(|(x, y)| (x - s * y).abs()).fold(0.0, f64::max);
    diff(1.0).min(diff(-1.0))
}

pub fn max_difference(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

use std::sync::Arc;

use rabecd_core::qstate::{FnOracle, QReg};
use rabecd_core::{BasisString, BitString};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn bits(v: &[bool]) -> BitString {
    BitString::new(v.to_vec())
}

fn table_oracle(name: String, input: usize, output: usize, rng: &mut impl Rng) -> (Arc<FnOracle>, Vec<u64>) {
    let table: Vec<u64> = (0..1u64 << input).map(|_| rng.gen_range(0..1u64 << output)).collect();
    let t = table.clone();
    let oracle = FnOracle::new(name, input, output, move |x: &BitString| BitString::from_u64(t[x.to_u64() as usize], output));
    (Arc::new(oracle), table)
}

fn compare(reg: &QReg, dense: &Dense, what: &str) -> Result<f64, String> {
    let v = reg.dense_statevector().map_err(|e| format!("{what}: {e}"))?;
    let err = sign_aligned_distance(&v, &dense.amp);
    if err > 1e-9 {
        return Err(format!("{what}: statevector differs by {err:e}"));
    }
    Ok(err)
}

/// One random operation sequence on at most 10 wires, checked against [`Dense`]
/// after every step. Returns the largest deviation seen.
pub fn qstate_case(seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let k = rng.gen_range(1..=6);
    let width = rng.gen_range(0..=(10 - k).min(4));
    let (mut reg, mut dense) = if rng.gen_bool(0.7) {
        let x: Vec<bool> = (0..k).map(|_| rng.gen()).collect();
        let theta: Vec<bool> = (0..k).map(|_| rng.gen()).collect();
        let reg = rabecd_core::qstate::bb84_prepare(&bits(&x), &BasisString::new(bits(&theta))).map_err(|e| e.to_string())?;
        (reg, Dense::bb84(&x, &theta))
    } else {
        let mut amp = vec![0.0; 1 << k];
        let mut branches = Vec::new();
        for _ in 0..rng.gen_range(1..=(1usize << k).min(8)) {
            let i = rng.gen_range(0..1u64 << k);
            let a = rng.gen_range(-1.0..1.0);
            amp[i as usize] += a;
            branches.push((BitString::from_u64(i, k), a));
        }
        if amp.iter().all(|a: &f64| a.abs() < 1e-6) {
            amp[0] = 1.0;
            branches = vec![(BitString::zeros(k), 1.0)];
        }
        (QReg::from_branches(k, &branches).map_err(|e| e.to_string())?, Dense::from_amplitudes(k, amp))
    };
    let mut worst = compare(&reg, &dense, "prepare")?;

    if width > 0 {
        let (oracle, table) = table_oracle(format!("append-{seed}"), k, width, &mut rng);
        reg = reg.apply_xor_map(oracle, width).map_err(|e| e.to_string())?;
        dense = dense.append_xor(width, |i| table[i as usize]);
        worst = worst.max(compare(&reg, &dense, "append")?);
    }

    let n = k + width;
    if n >= 2 {
        let mut wires: Vec<usize> = (0..n).collect();
        wires.shuffle(&mut rng);
        let a = rng.gen_range(1..n);
        let b = rng.gen_range(1..=n - a);
        let (inputs, outputs) = (wires[..a].to_vec(), wires[a..a + b].to_vec());
        let (oracle, table) = table_oracle(format!("on-{seed}"), a, b, &mut rng);
        let before = (reg.clone(), dense.clone());
        reg = reg.apply_xor_map_on(&inputs, &outputs, oracle.clone()).map_err(|e| e.to_string())?;
        dense = dense.xor_on(&inputs, &outputs, |i| table[i as usize]);
        worst = worst.max(compare(&reg, &dense, "xor on wires")?);
        let undone = reg.apply_xor_map_on(&inputs, &outputs, oracle).map_err(|e| e.to_string())?;
        if undone.pending_oracles() != before.0.pending_oracles() {
            return Err("re-applying an oracle did not cancel it".into());
        }
        worst = worst.max(compare(&undone, &before.1, "uncompute")?);
    }

    let m = rng.gen_range(0..=n);
    let basis: Vec<bool> = (0..m).map(|_| rng.gen()).collect();
    let dist = reg.outcome_distribution(&BasisString::new(bits(&basis))).map_err(|e| e.to_string())?;
    let mut got = vec![0.0; 1 << m];
    for (o, p) in dist {
        got[o.to_u64() as usize] += p;
    }
    let err = max_difference(&got, &dense.distribution(&basis));
    if err > 1e-9 {
        return Err(format!("distribution differs by {err:e}"));
    }
    worst = worst.max(err);

    let mut wires: Vec<usize> = (0..n).collect();
    wires.shuffle(&mut rng);
    wires.truncate(rng.gen_range(1..=n));
    let basis: Vec<bool> = wires.iter().map(|_| rng.gen()).collect();
    let m = reg.measure_wires(&wires, &BasisString::new(bits(&basis)), &mut rng).map_err(|e| e.to_string())?;
    let projected = dense.project(&wires, &basis, m.outcome.as_slice());
    worst = worst.max(compare(&m.post_state, &projected, "post-measurement")?);
    Ok(worst)
}
