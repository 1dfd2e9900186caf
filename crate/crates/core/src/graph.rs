//! MaxCut instances, bitstrings, random regular graph generation and the
//! exhaustive optimum oracle.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{QaoaError, Result};
use crate::rng::{derive_seed, rng_from};

/// Largest instance the brute-force oracle will enumerate.
pub const MAX_BRUTE_FORCE_N: usize = 24;

const MAX_PAIRING_RESTARTS: usize = 1000;

/// A partition of the vertices, `z_1 … z_n`.
///
/// Bit `i` of `bits` holds `z_{i+1}` (the side of vertex `i`). The text form
/// prints vertex 0 leftmost, and ordering is lexicographic on that text form.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bitstring {
    bits: u64,
    len: u8,
}

impl Bitstring {
    pub fn new(bits: u64, len: usize) -> Self {
        assert!(len <= 64, "bitstrings are limited to 64 bits");
        let mask = if len == 64 {
            u64::MAX
        } else {
            (1u64 << len) - 1
        };
        Bitstring {
            bits: bits & mask,
            len: len as u8,
        }
    }

    pub fn from_bits(values: &[bool]) -> Self {
        let bits = values
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i));
        Bitstring::new(bits, values.len())
    }

    pub fn zeros(len: usize) -> Self {
        Bitstring::new(0, len)
    }

    /// Basis-state index with bit `i` equal to the side of vertex `i`.
    pub fn index(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, vertex: usize) -> bool {
        (self.bits >> vertex) & 1 == 1
    }

    pub fn complement(&self) -> Self {
        Bitstring::new(!self.bits, self.len())
    }

    /// Value whose numeric order equals the lexicographic order of the text form.
    fn lex_key(&self) -> u64 {
        if self.len == 0 {
            0
        } else {
            self.bits.reverse_bits() >> (64 - self.len as u32)
        }
    }
}

impl Ord for Bitstring {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .cmp(&other.len)
            .then_with(|| self.lex_key().cmp(&other.lex_key()))
    }
}

impl PartialOrd for Bitstring {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bitstring({self})")
    }
}

impl FromStr for Bitstring {
    type Err = QaoaError;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() > 64 {
            return Err(QaoaError::InvalidParams(format!(
                "bitstring of length {} exceeds 64",
                s.len()
            )));
        }
        let values = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(QaoaError::InvalidParams(format!(
                    "invalid bit character {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Bitstring::from_bits(&values))
    }
}

impl Serialize for Bitstring {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bitstring {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Edge weight distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    Unit,
    /// Independent draws from (0, 1].
    Uniform,
}

impl FromStr for WeightScheme {
    type Err = QaoaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(WeightScheme::Unit),
            "uniform" => Ok(WeightScheme::Uniform),
            other => Err(QaoaError::InvalidConfig(format!(
                "unknown weight scheme {other:?}"
            ))),
        }
    }
}

/// A weighted undirected simple graph.
#[derive(Debug, Clone)]
pub struct MaxCutInstance {
    n: usize,
    edges: Vec<Edge>,
    total_weight: f64,
    seed: Option<u64>,
    optimum: OnceLock<(Bitstring, f64)>,
}

impl MaxCutInstance {
    /// Builds an instance, normalizing every edge to `u < v` and sorting.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n < 2 {
            return Err(QaoaError::InvalidGraph(format!(
                "need at least 2 vertices, got {n}"
            )));
        }
        if n > 64 {
            return Err(QaoaError::TooLarge { n, limit: 64 });
        }
        let mut list = Vec::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(QaoaError::InvalidGraph(format!("self-loop at vertex {a}")));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if v >= n {
                return Err(QaoaError::InvalidGraph(format!(
                    "edge ({a}, {b}) references a vertex outside 0..{n}"
                )));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(QaoaError::InvalidGraph(format!(
                    "edge ({a}, {b}) has invalid weight {w}"
                )));
            }
            list.push(Edge { u, v, w });
        }
        list.sort_by_key(|x| (x.u, x.v));
        if let Some(pair) = list
            .windows(2)
            .find(|p| (p[0].u, p[0].v) == (p[1].u, p[1].v))
        {
            return Err(QaoaError::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                pair[0].u, pair[0].v
            )));
        }
        let total_weight = list.iter().map(|e| e.w).sum();
        Ok(MaxCutInstance {
            n,
            edges: list,
            total_weight,
            seed: None,
            optimum: OnceLock::new(),
        })
    }

    pub fn complete(n: usize) -> Result<Self> {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v, 1.0)));
        MaxCutInstance::new(n, edges)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Sum of edge weights, the upper bound `U_C` on any cut.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    /// Cut value of `z`.
    pub fn cut_value(&self, z: &Bitstring) -> Result<f64> {
        if z.len() != self.n {
            return Err(QaoaError::LengthMismatch {
                expected: self.n,
                got: z.len(),
            });
        }
        Ok(self.cut_of_index(z.index()))
    }

    /// Cut value of a basis index (bit `i` = vertex `i`); no length check.
    pub fn cut_of_index(&self, index: u64) -> f64 {
        self.edges
            .iter()
            .filter(|e| ((index >> e.u) ^ (index >> e.v)) & 1 == 1)
            .map(|e| e.w)
            .sum()
    }

    /// Cut values for every basis index `0..2^n`.
    pub fn cut_table(&self) -> Vec<f64> {
        let dim = 1usize << self.n;
        let mut table = vec![0.0; dim];
        for e in &self.edges {
            for (idx, c) in table.iter_mut().enumerate() {
                if ((idx >> e.u) ^ (idx >> e.v)) & 1 == 1 {
                    *c += e.w;
                }
            }
        }
        table
    }

    /// Exact maximum cut by enumeration over the `2^{n-1}` partitions with
    /// vertex 0 on side 0. Ties resolve to the lexicographically smallest
    /// bitstring. The result is cached.
    pub fn brute_force_optimum(&self) -> Result<(Bitstring, f64)> {
        if let Some(opt) = self.optimum.get() {
            return Ok(*opt);
        }
        if self.n > MAX_BRUTE_FORCE_N {
            return Err(QaoaError::TooLarge {
                n: self.n,
                limit: MAX_BRUTE_FORCE_N,
            });
        }
        let mut best = (Bitstring::zeros(self.n), self.cut_of_index(0));
        for half in 1u64..(1u64 << (self.n - 1)) {
            let z = Bitstring::new(half << 1, self.n);
            let value = self.cut_of_index(z.index());
            if value > best.1 || (value == best.1 && z < best.0) {
                best = (z, value);
            }
        }
        Ok(*self.optimum.get_or_init(|| best))
    }

    /// Returns a copy with new weights drawn under `scheme`.
    pub fn assign_weights(&self, scheme: WeightScheme, seed: u64) -> MaxCutInstance {
        let mut rng = rng_from(seed);
        let edges = self.edges.iter().map(|e| {
            let w = match scheme {
                WeightScheme::Unit => 1.0,
                // gen::<f64>() lies in [0, 1); 1 - x lies in (0, 1].
                WeightScheme::Uniform => 1.0 - rng.gen::<f64>(),
            };
            (e.u, e.v, w)
        });
        let mut out = MaxCutInstance::new(self.n, edges).expect("reweighting preserves validity");
        out.seed = self.seed;
        out
    }

    /// Relabels vertex `i` as `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<MaxCutInstance> {
        if perm.len() != self.n {
            return Err(QaoaError::LengthMismatch {
                expected: self.n,
                got: perm.len(),
            });
        }
        MaxCutInstance::new(
            self.n,
            self.edges.iter().map(|e| (perm[e.u], perm[e.v], e.w)),
        )
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            n: self.n,
            edges: self.edges.iter().map(|e| (e.u, e.v, e.w)).collect(),
            seed: self.seed,
        }
    }

    pub fn from_file(file: &InstanceFile) -> Result<Self> {
        let mut inst = MaxCutInstance::new(file.n, file.edges.iter().copied())?;
        inst.seed = file.seed;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("instance serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| QaoaError::InvalidGraph(e.to_string()))?;
        MaxCutInstance::from_file(&file)
    }
}

/// On-disk instance format: `{"n": 4, "edges": [[0, 1, 1.0], ...], "seed": 7}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Random `degree`-regular graph on `n` vertices with unit weights.
///
/// Uses the pairing (configuration) model with rejection of self-loops and
/// multi-edges. When no such graph exists because `n * degree` is odd or
/// `n == degree`, the complete graph `K_n` is returned instead.
pub fn random_regular(n: usize, degree: usize, seed: u64) -> Result<MaxCutInstance> {
    if n < 2 {
        return Err(QaoaError::InvalidGraph(format!(
            "need at least 2 vertices, got {n}"
        )));
    }
    if degree == 0 {
        return Err(QaoaError::InvalidGraph("degree must be at least 1".into()));
    }
    if degree > n {
        return Err(QaoaError::InvalidGraph(format!(
            "degree {degree} exceeds vertex count {n}"
        )));
    }
    if (n * degree) % 2 == 1 || n <= degree {
        return Ok(MaxCutInstance::complete(n)?.with_seed(seed));
    }

    let mut stubs: Vec<usize> = (0..n)
        .flat_map(|v| std::iter::repeat_n(v, degree))
        .collect();
    for round in 0u64.. {
        let mut rng = rng_from(derive_seed(seed, &[round]));
        'restart: for _ in 0..MAX_PAIRING_RESTARTS {
            stubs.shuffle(&mut rng);
            let mut seen = std::collections::HashSet::with_capacity(stubs.len() / 2);
            let mut edges = Vec::with_capacity(stubs.len() / 2);
            for pair in stubs.chunks_exact(2) {
                let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
                if u == v || !seen.insert((u, v)) {
                    continue 'restart;
                }
                edges.push((u, v, 1.0));
            }
            return Ok(MaxCutInstance::new(n, edges)?.with_seed(seed));
        }
    }
    unreachable!("the round loop only exits by returning")
}
