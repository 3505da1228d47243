//! Chains of physical qubits representing logical variables.
//!
//! The gauge transform is applied to the logical problem first; embedding
//! happens afterwards, so the ferromagnetic chain couplers are not encoded.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::ising::{IsingProblem, Sample, SampleSet, Spins};
use crate::topology::{chimera_index, Topology};
use crate::{Error, Result};

/// Map from logical variable `i` to its chain of physical qubits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawEmbedding", into = "RawEmbedding")]
pub struct Embedding {
    chains: Vec<Vec<usize>>,
}

/// Chain-break statistics from [`unembed`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    /// Broken chain observations over `chains * reads`.
    pub break_fraction: f64,
    pub max_chain_length: usize,
}

impl Embedding {
    /// Chains must be nonempty and pairwise disjoint. Connectivity is checked
    /// against a topology by [`Embedding::validate`].
    pub fn new(chains: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (v, chain) in chains.iter().enumerate() {
            if chain.is_empty() {
                return Err(Error::InvalidEmbedding(format!("chain {v} is empty")));
            }
            for &q in chain {
                if let Some(other) = seen.insert(q, v) {
                    return Err(Error::InvalidEmbedding(format!("qubit {q} is in chains {other} and {v}")));
                }
            }
        }
        Ok(Embedding { chains })
    }

    /// Every logical variable on its own physical qubit.
    pub fn identity(n: usize) -> Self {
        Embedding { chains: (0..n).map(|q| vec![q]).collect() }
    }

    pub fn num_logical(&self) -> usize {
        self.chains.len()
    }

    pub fn chain(&self, v: usize) -> &[usize] {
        &self.chains[v]
    }

    pub fn chains(&self) -> &[Vec<usize>] {
        &self.chains
    }

    pub fn max_chain_length(&self) -> usize {
        self.chains.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn num_physical(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    fn owners(&self, num_qubits: usize) -> Result<Vec<Option<usize>>> {
        let mut owner = vec![None; num_qubits];
        for (v, chain) in self.chains.iter().enumerate() {
            for &q in chain {
                *owner.get_mut(q).ok_or(Error::InvalidEmbedding(format!(
                    "qubit {q} of chain {v} outside topology of {num_qubits} qubits"
                )))? = Some(v);
            }
        }
        Ok(owner)
    }

    /// Physical edges between the chains of `a` and `b`, sorted.
    fn edges_between(&self, t: &Topology, owner: &[Option<usize>], a: usize, b: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for &q in &self.chains[a] {
            for &r in t.neighbors(q).unwrap_or(&[]) {
                if owner[r] == Some(b) {
                    out.push((q.min(r), q.max(r)));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Checks that chains lie in `t`, each induces a connected subgraph, and
    /// every nonzero coupling of `logical` (if given) has a physical edge.
    pub fn validate(&self, t: &Topology, logical: Option<&IsingProblem>) -> Result<()> {
        let owner = self.owners(t.num_qubits())?;
        for (v, chain) in self.chains.iter().enumerate() {
            let mut reached = vec![chain[0]];
            let mut stack = vec![chain[0]];
            while let Some(q) = stack.pop() {
                for &r in t.neighbors(q)? {
                    if owner[r] == Some(v) && !reached.contains(&r) {
                        reached.push(r);
                        stack.push(r);
                    }
                }
            }
            if reached.len() != chain.len() {
                return Err(Error::InvalidEmbedding(format!("chain {v} is not connected")));
            }
        }
        if let Some(p) = logical {
            if p.n() > self.chains.len() {
                return Err(Error::InvalidEmbedding(format!(
                    "{} logical variables but {} chains",
                    p.n(),
                    self.chains.len()
                )));
            }
            for (a, b, v) in p.couplings() {
                if v != 0.0 && self.edges_between(t, &owner, a, b).is_empty() {
                    return Err(Error::InvalidEmbedding(format!("no physical edge between chains {a} and {b}")));
                }
            }
        }
        Ok(())
    }

    /// Places a logical state on the physical qubits; qubits outside every
    /// chain are set to `+1`.
    pub fn embed_state(&self, logical: &Spins, num_qubits: usize) -> Result<Spins> {
        if logical.len() != self.chains.len() {
            return Err(Error::DimensionMismatch { expected: self.chains.len(), actual: logical.len() });
        }
        let mut out = vec![1i8; num_qubits];
        for (chain, &v) in self.chains.iter().zip(logical.as_slice()) {
            for &q in chain {
                *out.get_mut(q).ok_or(Error::IndexOutOfRange { index: q, size: num_qubits })? = v;
            }
        }
        Ok(Spins::from_vec_unchecked(out))
    }

    /// Majority vote per chain; ties take the spin of the lowest-indexed
    /// qubit. Returns the logical state and the number of broken chains.
    fn project(&self, physical: &[i8]) -> (Spins, usize) {
        let mut broken = 0;
        let values = self
            .chains
            .iter()
            .map(|chain| {
                let sum: i64 = chain.iter().map(|&q| i64::from(physical[q])).sum();
                if sum.unsigned_abs() as usize != chain.len() {
                    broken += 1;
                }
                match sum.signum() {
                    1 => 1,
                    -1 => -1,
                    _ => physical[*chain.iter().min().expect("chains are nonempty")],
                }
            })
            .collect();
        (Spins::from_vec_unchecked(values), broken)
    }
}

#[derive(Serialize, Deserialize)]
struct RawEmbedding {
    chains: BTreeMap<usize, Vec<usize>>,
}

impl TryFrom<RawEmbedding> for Embedding {
    type Error = Error;

    fn try_from(raw: RawEmbedding) -> Result<Self> {
        let n = raw.chains.len();
        if let Some((&k, _)) = raw.chains.iter().next_back() {
            if k + 1 != n {
                return Err(Error::InvalidEmbedding(format!("chain keys must be 0..{n}")));
            }
        }
        Embedding::new(raw.chains.into_values().collect())
    }
}

impl From<Embedding> for RawEmbedding {
    fn from(e: Embedding) -> Self {
        RawEmbedding { chains: e.chains.into_iter().enumerate().collect() }
    }
}

/// Clique embedding of `K_k` on a Chimera topology of size `m`, for
/// `k <= 4m`.
///
/// Variable `v = 4b + k` owns the side-0 qubits `k` of column `b` in rows
/// `b..m` and the side-1 qubits `k` of row `b` in columns `0..=b`; the two
/// halves meet in the diagonal cell `(b, b)`. Every chain has length
/// `m + 1`. Blocks `b <= b'` meet in cell `(b', b)`.
pub fn embed_complete(k: usize, t: &Topology) -> Result<Embedding> {
    let m = t
        .chimera_size()
        .ok_or_else(|| Error::InvalidParameter(format!("topology '{}' is not a Chimera graph", t.label())))?;
    if k > 4 * m {
        return Err(Error::Capacity { requested: k, capacity: 4 * m });
    }
    let chains = (0..k)
        .map(|v| {
            let (block, pos) = (v / 4, v % 4);
            let mut chain: Vec<usize> = (0..=block).map(|col| chimera_index(m, block, col, 1, pos)).collect();
            chain.extend((block..m).map(|row| chimera_index(m, row, block, 0, pos)));
            chain.sort_unstable();
            chain
        })
        .collect();
    let e = Embedding::new(chains)?;
    e.validate(t, None)?;
    Ok(e)
}

/// `2 * max(|h_i|, |J_ij|)`, or 1 for the zero problem.
pub fn default_chain_strength(p: &IsingProblem) -> f64 {
    let m = p.max_abs_coefficient();
    if m > 0.0 {
        2.0 * m
    } else {
        1.0
    }
}

/// Builds the physical problem on `t`: each `h_i` is split evenly over its
/// chain, each `J_ij` evenly over the edges joining the two chains, and every
/// intra-chain edge gets coupling `-chain_strength`. The offset is kept.
pub fn embed_problem(p: &IsingProblem, e: &Embedding, t: &Topology, chain_strength: f64) -> Result<IsingProblem> {
    if !(chain_strength > 0.0 && chain_strength.is_finite()) {
        return Err(Error::InvalidParameter(format!("chain strength must be positive, got {chain_strength}")));
    }
    e.validate(t, Some(p))?;
    let owner = e.owners(t.num_qubits())?;
    let mut out = IsingProblem::new(t.num_qubits()).with_offset(p.offset());
    for (v, h) in p.linear() {
        let chain = e.chain(v);
        let share = h / chain.len() as f64;
        for &q in chain {
            out.set_h(q, share)?;
        }
    }
    for (a, b, j) in p.couplings() {
        let edges = e.edges_between(t, &owner, a, b);
        if edges.is_empty() {
            continue;
        }
        let share = j / edges.len() as f64;
        for (q, r) in edges {
            out.set_j(q, r, share)?;
        }
    }
    for (q, r) in t.edges() {
        if owner[q].is_some() && owner[q] == owner[r] {
            out.set_j(q, r, -chain_strength)?;
        }
    }
    Ok(out)
}

/// Projects physical samples onto logical variables by majority vote and
/// re-evaluates their energies under `logical`.
pub fn unembed(physical: &SampleSet, e: &Embedding, logical: &IsingProblem) -> Result<(SampleSet, ChainStats)> {
    unembed_with(physical, e, logical, Execution::default())
}

pub fn unembed_with(
    physical: &SampleSet,
    e: &Embedding,
    logical: &IsingProblem,
    exec: Execution,
) -> Result<(SampleSet, ChainStats)> {
    if logical.n() != e.num_logical() {
        return Err(Error::DimensionMismatch { expected: e.num_logical(), actual: logical.n() });
    }
    let needed = e.chains.iter().flatten().max().map_or(0, |&q| q + 1);
    let projected = exec.try_map_range(physical.len(), |i| {
        let s = &physical.samples[i];
        if s.spins.len() < needed {
            return Err(Error::DimensionMismatch { expected: needed, actual: s.spins.len() });
        }
        let (spins, broken) = e.project(s.spins.as_slice());
        let energy = logical.energy(&spins)?;
        Ok::<_, Error>((Sample { spins, energy, occurrences: s.occurrences }, broken as u64 * s.occurrences))
    })?;
    let reads = physical.total_occurrences();
    let broken: u64 = projected.iter().map(|(_, b)| b).sum();
    let denom = reads as f64 * e.num_logical() as f64;
    let stats = ChainStats {
        break_fraction: if denom > 0.0 { broken as f64 / denom } else { 0.0 },
        max_chain_length: e.max_chain_length(),
    };
    Ok((SampleSet::new(projected.into_iter().map(|(s, _)| s).collect()), stats))
}
