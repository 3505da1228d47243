//! Ising problems, spin configurations, sample sets, and QUBO conversion.
//!
//! The energy of spins `s` under problem `(h, J, offset)` is
//!
//! ```text
//! E(s) = sum_i h_i s_i + sum_{i<j} J_ij s_i s_j + offset
//! ```
//!
//! Couplings are stored once per unordered pair, so each coupler contributes
//! exactly one term.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::topology::Topology;
use crate::{Error, Result};

/// Orders a coupling pair so that `i < j`.
fn ordered(i: usize, j: usize) -> Result<(usize, usize)> {
    match i.cmp(&j) {
        std::cmp::Ordering::Less => Ok((i, j)),
        std::cmp::Ordering::Greater => Ok((j, i)),
        std::cmp::Ordering::Equal => Err(Error::SelfCoupling(i)),
    }
}

fn check_index(i: usize, n: usize) -> Result<()> {
    if i < n {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { index: i, size: n })
    }
}

/// Sparse Ising problem over `n` spins.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawIsing", into = "RawIsing")]
pub struct IsingProblem {
    n: usize,
    h: BTreeMap<usize, f64>,
    j: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

impl IsingProblem {
    /// The zero problem on `n` spins.
    pub fn new(n: usize) -> Self {
        IsingProblem { n, ..Default::default() }
    }

    /// Builds a problem from entry lists. Coupling pairs may be given in
    /// either order; a pair listed twice (in any order) is rejected.
    pub fn from_parts(
        n: usize,
        h: impl IntoIterator<Item = (usize, f64)>,
        j: impl IntoIterator<Item = (usize, usize, f64)>,
        offset: f64,
    ) -> Result<Self> {
        let mut p = IsingProblem::new(n);
        p.offset = offset;
        for (i, v) in h {
            check_index(i, n)?;
            if p.h.insert(i, v).is_some() {
                return Err(Error::DuplicateEntry(format!("h[{i}]")));
            }
        }
        for (a, b, v) in j {
            check_index(a, n)?;
            check_index(b, n)?;
            let key = ordered(a, b)?;
            if p.j.insert(key, v).is_some() {
                return Err(Error::DuplicateEntry(format!("J[{}, {}]", key.0, key.1)));
            }
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    /// Linear field on spin `i`; absent entries read as zero.
    pub fn h(&self, i: usize) -> f64 {
        self.h.get(&i).copied().unwrap_or(0.0)
    }

    /// Coupling between `a` and `b` in either order; absent entries read as zero.
    pub fn j(&self, a: usize, b: usize) -> f64 {
        match ordered(a, b) {
            Ok(key) => self.j.get(&key).copied().unwrap_or(0.0),
            Err(_) => 0.0,
        }
    }

    pub fn set_h(&mut self, i: usize, v: f64) -> Result<()> {
        check_index(i, self.n)?;
        self.h.insert(i, v);
        Ok(())
    }

    pub fn set_j(&mut self, a: usize, b: usize, v: f64) -> Result<()> {
        check_index(a, self.n)?;
        check_index(b, self.n)?;
        self.j.insert(ordered(a, b)?, v);
        Ok(())
    }

    /// Adds `v` to the coupling on `(a, b)`, creating it if absent.
    pub fn add_j(&mut self, a: usize, b: usize, v: f64) -> Result<()> {
        check_index(a, self.n)?;
        check_index(b, self.n)?;
        *self.j.entry(ordered(a, b)?).or_insert(0.0) += v;
        Ok(())
    }

    /// Stored linear entries in index order.
    pub fn linear(&self) -> impl ExactSizeIterator<Item = (usize, f64)> + '_ {
        self.h.iter().map(|(&i, &v)| (i, v))
    }

    /// Stored couplings as `(i, j, J_ij)` with `i < j`, in lexicographic order.
    pub fn couplings(&self) -> impl ExactSizeIterator<Item = (usize, usize, f64)> + '_ {
        self.j.iter().map(|(&(a, b), &v)| (a, b, v))
    }

    pub fn num_couplings(&self) -> usize {
        self.j.len()
    }

    /// Largest absolute coefficient over all fields and couplings.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.h.values().chain(self.j.values()).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Rebuilds the problem with every stored coefficient mapped through `f`.
    /// The sparsity pattern and offset are kept.
    pub(crate) fn map_coefficients(
        &self,
        mut fh: impl FnMut(usize, f64) -> f64,
        mut fj: impl FnMut(usize, usize, f64) -> f64,
    ) -> IsingProblem {
        IsingProblem {
            n: self.n,
            h: self.h.iter().map(|(&i, &v)| (i, fh(i, v))).collect(),
            j: self.j.iter().map(|(&(a, b), &v)| ((a, b), fj(a, b, v))).collect(),
            offset: self.offset,
        }
    }

    /// Energy of `s`.
    pub fn energy(&self, s: &Spins) -> Result<f64> {
        if s.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, actual: s.len() });
        }
        Ok(self.energy_unchecked(s.as_slice()))
    }

    pub(crate) fn energy_unchecked(&self, s: &[i8]) -> f64 {
        let mut e = 0.0;
        for (&i, &v) in &self.h {
            e += v * f64::from(s[i]);
        }
        for (&(a, b), &v) in &self.j {
            e += v * f64::from(s[a] * s[b]);
        }
        e + self.offset
    }

    /// Field-wise and coupling-wise sum of two problems on the same spins.
    /// Offsets add.
    pub fn add(&self, other: &IsingProblem) -> Result<IsingProblem> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, actual: other.n });
        }
        let mut out = self.clone();
        for (&i, &v) in &other.h {
            out.h.entry(i).and_modify(|x| *x += v).or_insert(v);
        }
        for (&key, &v) in &other.j {
            out.j.entry(key).and_modify(|x| *x += v).or_insert(v);
        }
        out.offset += other.offset;
        Ok(out)
    }

    /// Lists every coupling or index that `t` cannot realize. Empty iff the
    /// problem fits the topology. Couplings with value exactly zero need no
    /// coupler and are not reported.
    pub fn validate_against(&self, t: &Topology) -> Vec<Violation> {
        let size = t.num_qubits();
        let mut out = Vec::new();
        for &i in self.h.keys() {
            if i >= size {
                out.push(Violation::OutOfRange { index: i });
            }
        }
        for (&(a, b), &v) in &self.j {
            if a >= size || b >= size {
                out.push(Violation::OutOfRange { index: a.max(b) });
            } else if v != 0.0 && !t.has_edge(a, b) {
                out.push(Violation::MissingCoupler { i: a, j: b });
            }
        }
        out
    }

    pub(crate) fn compile(&self) -> CompiledProblem {
        CompiledProblem::new(self)
    }
}

/// A reason a problem cannot be placed on a topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    OutOfRange { index: usize },
    MissingCoupler { i: usize, j: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfRange { index } => write!(f, "qubit {index} not in topology"),
            Violation::MissingCoupler { i, j } => write!(f, "no coupler between {i} and {j}"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIsing {
    n: usize,
    #[serde(default)]
    h: Vec<(usize, f64)>,
    #[serde(rename = "J", default)]
    j: Vec<(usize, usize, f64)>,
    #[serde(default)]
    offset: f64,
}

impl TryFrom<RawIsing> for IsingProblem {
    type Error = Error;

    fn try_from(raw: RawIsing) -> Result<Self> {
        IsingProblem::from_parts(raw.n, raw.h, raw.j, raw.offset)
    }
}

impl From<IsingProblem> for RawIsing {
    fn from(p: IsingProblem) -> Self {
        RawIsing {
            n: p.n,
            h: p.h.into_iter().collect(),
            j: p.j.into_iter().map(|((a, b), v)| (a, b, v)).collect(),
            offset: p.offset,
        }
    }
}

/// Dense adjacency view used by the samplers.
///
/// `energy` sums terms in the same order as [`IsingProblem::energy`], so both
/// give bit-identical results.
pub(crate) struct CompiledProblem {
    pub n: usize,
    pub field: Vec<f64>,
    pub row_start: Vec<usize>,
    pub neighbors: Vec<usize>,
    pub weights: Vec<f64>,
    h_terms: Vec<(usize, f64)>,
    j_terms: Vec<(usize, usize, f64)>,
    offset: f64,
}

impl CompiledProblem {
    fn new(p: &IsingProblem) -> Self {
        let n = p.n;
        let mut field = vec![0.0; n];
        for (i, v) in p.linear() {
            field[i] = v;
        }
        let mut degree = vec![0usize; n];
        for (a, b, _) in p.couplings() {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut row_start = vec![0usize; n + 1];
        for i in 0..n {
            row_start[i + 1] = row_start[i] + degree[i];
        }
        let mut fill = row_start.clone();
        let total = row_start[n];
        let mut neighbors = vec![0usize; total];
        let mut weights = vec![0.0; total];
        for (a, b, v) in p.couplings() {
            neighbors[fill[a]] = b;
            weights[fill[a]] = v;
            fill[a] += 1;
            neighbors[fill[b]] = a;
            weights[fill[b]] = v;
            fill[b] += 1;
        }
        CompiledProblem {
            n,
            field,
            row_start,
            neighbors,
            weights,
            h_terms: p.linear().collect(),
            j_terms: p.couplings().collect(),
            offset: p.offset,
        }
    }

    /// `(J_ij, j)` for every neighbor `j` of `i`.
    #[inline]
    pub fn row(&self, i: usize) -> impl Iterator<Item = (f64, usize)> + '_ {
        let (lo, hi) = (self.row_start[i], self.row_start[i + 1]);
        self.weights[lo..hi].iter().copied().zip(self.neighbors[lo..hi].iter().copied())
    }

    /// `h_i + sum_j J_ij s_j`, spins stored as `±1.0`.
    #[inline]
    pub fn local_field(&self, i: usize, s: &[f64]) -> f64 {
        let (lo, hi) = (self.row_start[i], self.row_start[i + 1]);
        let mut acc = self.field[i];
        for (&w, &j) in self.weights[lo..hi].iter().zip(&self.neighbors[lo..hi]) {
            acc += w * s[j];
        }
        acc
    }

    pub fn energy(&self, s: &[i8]) -> f64 {
        let mut e = 0.0;
        for &(i, v) in &self.h_terms {
            e += v * f64::from(s[i]);
        }
        for &(a, b, v) in &self.j_terms {
            e += v * f64::from(s[a] * s[b]);
        }
        e + self.offset
    }
}

/// A spin configuration; every entry is `+1` or `-1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct Spins(Vec<i8>);

impl Spins {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::InvalidSpin(i64::from(bad)));
        }
        Ok(Spins(values))
    }

    pub(crate) fn from_vec_unchecked(values: Vec<i8>) -> Self {
        debug_assert!(values.iter().all(|&v| v == 1 || v == -1));
        Spins(values)
    }

    pub fn all_up(n: usize) -> Self {
        Spins(vec![1; n])
    }

    /// State number `index` of the `2^n` enumeration order: spin 0 is the most
    /// significant bit, a clear bit is `-1`. Increasing indices are therefore
    /// lexicographically increasing spin vectors with `-1 < +1`.
    pub fn from_index(n: usize, index: u64) -> Self {
        Spins((0..n).map(|i| if index >> (n - 1 - i) & 1 == 1 { 1 } else { -1 }).collect())
    }

    /// Inverse of [`Spins::from_index`].
    pub fn to_index(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &v| (acc << 1) | u64::from(v == 1))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<i8> {
        self.0
    }

    /// Global spin flip.
    pub fn flipped(&self) -> Spins {
        Spins(self.0.iter().map(|v| -v).collect())
    }
}

impl TryFrom<Vec<i64>> for Spins {
    type Error = Error;

    fn try_from(v: Vec<i64>) -> Result<Self> {
        let values = v
            .into_iter()
            .map(|x| match x {
                1 => Ok(1i8),
                -1 => Ok(-1i8),
                other => Err(Error::InvalidSpin(other)),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Spins(values))
    }
}

impl From<Spins> for Vec<i64> {
    fn from(s: Spins) -> Self {
        s.0.into_iter().map(i64::from).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sample {
    #[serde(rename = "s")]
    pub spins: Spins,
    pub energy: f64,
    pub occurrences: u64,
}

/// Samples returned by a solver, each with its energy and multiplicity.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSet {
    pub samples: Vec<Sample>,
}

impl SampleSet {
    pub fn new(samples: Vec<Sample>) -> Self {
        SampleSet { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Total number of reads represented.
    pub fn total_occurrences(&self) -> u64 {
        self.samples.iter().map(|s| s.occurrences).sum()
    }

    /// The lowest-energy sample, first in order on ties.
    pub fn lowest(&self) -> Option<&Sample> {
        self.samples.iter().fold(None, |best: Option<&Sample>, s| match best {
            Some(b) if b.energy <= s.energy => Some(b),
            _ => Some(s),
        })
    }

    /// Energies expanded by occurrence count, in sample order.
    pub fn energies(&self) -> Vec<f64> {
        self.samples.iter().flat_map(|s| std::iter::repeat_n(s.energy, s.occurrences as usize)).collect()
    }

    /// Checks dimensions, occurrence counts, and that every stored energy is
    /// exactly the energy of its spins under `p`.
    pub fn verify(&self, p: &IsingProblem) -> Result<()> {
        for (index, s) in self.samples.iter().enumerate() {
            if s.occurrences == 0 {
                return Err(Error::InvalidParameter(format!("sample {index} has zero occurrences")));
            }
            let e = p.energy(&s.spins)?;
            if e != s.energy {
                return Err(Error::Integrity { index, stored: s.energy, recomputed: e });
            }
        }
        Ok(())
    }

    /// Merges identical spin vectors, summing their occurrences. Output is in
    /// first-appearance order.
    pub fn aggregate(&self) -> SampleSet {
        let mut index: BTreeMap<&Spins, usize> = BTreeMap::new();
        let mut out: Vec<Sample> = Vec::new();
        for s in &self.samples {
            match index.get(&s.spins) {
                Some(&k) => out[k].occurrences += s.occurrences,
                None => {
                    index.insert(&s.spins, out.len());
                    out.push(s.clone());
                }
            }
        }
        SampleSet { samples: out }
    }
}

/// Sparse QUBO over binary variables: `sum_{i<=j} Q_ij x_i x_j + offset`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawQubo", into = "RawQubo")]
pub struct QuboProblem {
    n: usize,
    q: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

impl QuboProblem {
    pub fn new(n: usize) -> Self {
        QuboProblem { n, ..Default::default() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    /// Adds `v` to `Q_ab`; `a == b` addresses the diagonal.
    pub fn add(&mut self, a: usize, b: usize, v: f64) -> Result<()> {
        check_index(a, self.n)?;
        check_index(b, self.n)?;
        *self.q.entry((a.min(b), a.max(b))).or_insert(0.0) += v;
        Ok(())
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.q.get(&(a.min(b), a.max(b))).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.q.iter().map(|(&(a, b), &v)| (a, b, v))
    }

    pub fn energy(&self, x: &[u8]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, actual: x.len() });
        }
        let mut e = 0.0;
        for (&(a, b), &v) in &self.q {
            if x[a] != 0 && x[b] != 0 {
                e += v;
            }
        }
        Ok(e + self.offset)
    }

    /// Converts to Ising form with `x_i = (1 + s_i) / 2`, so `x = 1` is spin
    /// `+1`. Energies agree exactly for every assignment when the
    /// coefficients are multiples of 1/4 within the f64 mantissa.
    pub fn to_ising(&self) -> IsingProblem {
        let mut h: BTreeMap<usize, f64> = BTreeMap::new();
        let mut j: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut offset = self.offset;
        for (&(a, b), &v) in &self.q {
            if a == b {
                *h.entry(a).or_insert(0.0) += v / 2.0;
                offset += v / 2.0;
            } else {
                let quarter = v / 4.0;
                *h.entry(a).or_insert(0.0) += quarter;
                *h.entry(b).or_insert(0.0) += quarter;
                *j.entry((a, b)).or_insert(0.0) += quarter;
                offset += quarter;
            }
        }
        IsingProblem { n: self.n, h, j, offset }
    }
}

/// Binary assignment for spins: `+1 -> 1`, `-1 -> 0`.
pub fn spins_to_binary(s: &Spins) -> Vec<u8> {
    s.as_slice().iter().map(|&v| u8::from(v == 1)).collect()
}

pub fn binary_to_spins(x: &[u8]) -> Spins {
    Spins(x.iter().map(|&b| if b != 0 { 1 } else { -1 }).collect())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQubo {
    n: usize,
    #[serde(rename = "Q", default)]
    q: Vec<(usize, usize, f64)>,
    #[serde(default)]
    offset: f64,
}

impl TryFrom<RawQubo> for QuboProblem {
    type Error = Error;

    fn try_from(raw: RawQubo) -> Result<Self> {
        let mut q = QuboProblem::new(raw.n).with_offset(raw.offset);
        for (a, b, v) in raw.q {
            check_index(a, raw.n)?;
            check_index(b, raw.n)?;
            if q.q.insert((a.min(b), a.max(b)), v).is_some() {
                return Err(Error::DuplicateEntry(format!("Q[{a}, {b}]")));
            }
        }
        Ok(q)
    }
}

impl From<QuboProblem> for RawQubo {
    fn from(q: QuboProblem) -> Self {
        RawQubo { n: q.n, q: q.q.into_iter().map(|((a, b), v)| (a, b, v)).collect(), offset: q.offset }
    }
}
