//! Secret keys and the spin reversal (gauge) transform.
//!
//! A key is a bit string `x`. With signs `g_i = (-1)^{x_i}` the transform is
//!
//! ```text
//! h*_i  = g_i h_i
//! J*_ij = g_i g_j J_ij
//! s_i   = g_i s*_i
//! ```
//!
//! and `E*(s*) == E(s)` term by term. Each term changes by a sign flip only,
//! which is exact in floating point, so the identity holds bit for bit.
//!
//! Keys are drawn from a caller-supplied RNG. Seeded generators make tests
//! reproducible; production use needs a cryptographically secure source.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ising::{IsingProblem, Sample, SampleSet, Spins};
use crate::{Error, Result};

/// Bit-string key selecting which spins are reversed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawKey", into = "RawKey")]
pub struct SecretKey {
    bits: Vec<u8>,
}

impl SecretKey {
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidBit(i64::from(b)));
        }
        Ok(SecretKey { bits })
    }

    /// The identity key of length `n`.
    pub fn zeros(n: usize) -> Self {
        SecretKey { bits: vec![0; n] }
    }

    pub fn ones(n: usize) -> Self {
        SecretKey { bits: vec![1; n] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// `(-1)^{x_i}` for every bit.
    pub fn signs(&self) -> SignVector {
        SignVector(self.bits.iter().map(|&b| if b == 0 { 1 } else { -1 }).collect())
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if self.bits.len() == n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: n, actual: self.bits.len() })
        }
    }
}

/// Signs `g_i = (-1)^{x_i}` derived from a key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    #[inline]
    fn apply(&self, i: usize, v: f64) -> f64 {
        if self.0[i] < 0 {
            -v
        } else {
            v
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKey {
    n: usize,
    x: Vec<i64>,
}

impl TryFrom<RawKey> for SecretKey {
    type Error = Error;

    fn try_from(raw: RawKey) -> Result<Self> {
        if raw.x.len() != raw.n {
            return Err(Error::DimensionMismatch { expected: raw.n, actual: raw.x.len() });
        }
        let bits = raw
            .x
            .into_iter()
            .map(|b| match b {
                0 => Ok(0u8),
                1 => Ok(1u8),
                other => Err(Error::InvalidBit(other)),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SecretKey { bits })
    }
}

impl From<SecretKey> for RawKey {
    fn from(k: SecretKey) -> Self {
        RawKey { n: k.bits.len(), x: k.bits.into_iter().map(i64::from).collect() }
    }
}

/// Draws `n` independent fair bits from `rng`.
pub fn keygen<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SecretKey {
    SecretKey { bits: (0..n).map(|_| u8::from(rng.gen::<bool>())).collect() }
}

/// Encodes a problem under `key`. Magnitudes, sparsity, and offset are kept.
/// Applying the same key twice returns the original problem.
pub fn encode_problem(p: &IsingProblem, key: &SecretKey) -> Result<IsingProblem> {
    key.check_len(p.n())?;
    let g = key.signs();
    Ok(p.map_coefficients(|i, v| g.apply(i, v), |a, b, v| g.apply(b, g.apply(a, v))))
}

/// Maps an encoded-problem sample back to the original problem's spins.
/// The map is its own inverse, so it also encodes an initial state for
/// reverse annealing.
pub fn decode_sample(s: &Spins, key: &SecretKey) -> Result<Spins> {
    key.check_len(s.len())?;
    Ok(Spins::from_vec_unchecked(
        s.as_slice().iter().zip(key.bits()).map(|(&v, &b)| if b == 0 { v } else { -v }).collect(),
    ))
}

/// Decodes every sample and checks that its energy under `original` equals
/// the energy the solver reported for the encoded problem.
///
/// Integer-valued problems must match exactly, others within `1e-9`
/// relative. A mismatch means the transcript was corrupted or the samples
/// were produced for a problem encoded under a different key.
pub fn decode_sampleset(ss: &SampleSet, key: &SecretKey, original: &IsingProblem) -> Result<SampleSet> {
    key.check_len(original.n())?;
    let integral = is_integral(original);
    let samples = ss
        .samples
        .iter()
        .enumerate()
        .map(|(index, s)| {
            let spins = decode_sample(&s.spins, key)?;
            let energy = original.energy(&spins)?;
            let ok = if integral {
                energy == s.energy
            } else {
                (energy - s.energy).abs() <= 1e-9 * energy.abs().max(s.energy.abs()).max(1.0)
            };
            if !ok {
                return Err(Error::Integrity { index, stored: s.energy, recomputed: energy });
            }
            Ok(Sample { spins, energy, occurrences: s.occurrences })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleSet::new(samples))
}

fn is_integral(p: &IsingProblem) -> bool {
    let int = |v: f64| v.fract() == 0.0;
    int(p.offset()) && p.linear().all(|(_, v)| int(v)) && p.couplings().all(|(_, _, v)| int(v))
}

/// Sums two problems encoded under the same key. The solver cannot check
/// that the keys agree; if they do, the result is the encoding of the
/// plaintext sum.
pub fn combine_encrypted(first: &IsingProblem, second: &IsingProblem) -> Result<IsingProblem> {
    first.add(second)
}
