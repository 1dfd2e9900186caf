//! Exact statevector simulation of the depth-p QAOA circuit.
//!
//! The cost layer is diagonal, so it is applied as one phase per basis state
//! from a precomputed cut table. The mixer is applied as `n` in-place 2x2
//! rotations. Basis index bit `i` is the side of vertex `i`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QaoaError, Result};
use crate::estimators::Counts;
use crate::graph::{Bitstring, MaxCutInstance};
use crate::rng::rng_from;

/// Largest register the simulator will allocate.
pub const MAX_QUBITS: usize = 24;

/// Per-layer angles. The search vector is `[betas, gammas]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaParams {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl QaoaParams {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        let params = QaoaParams { gammas, betas };
        params.validate()?;
        Ok(params)
    }

    pub fn zeros(depth: usize) -> Self {
        QaoaParams {
            gammas: vec![0.0; depth],
            betas: vec![0.0; depth],
        }
    }

    /// Builds parameters from `theta = [betas, gammas]`.
    pub fn from_theta(theta: &[f64]) -> Result<Self> {
        if theta.is_empty() || !theta.len().is_multiple_of(2) {
            return Err(QaoaError::InvalidParams(format!(
                "search vector must have even positive length, got {}",
                theta.len()
            )));
        }
        let p = theta.len() / 2;
        QaoaParams::new(theta[p..].to_vec(), theta[..p].to_vec())
    }

    pub fn theta(&self) -> Vec<f64> {
        self.betas.iter().chain(&self.gammas).copied().collect()
    }

    pub fn depth(&self) -> usize {
        self.gammas.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.depth()
    }

    pub fn validate(&self) -> Result<()> {
        if self.gammas.len() != self.betas.len() {
            return Err(QaoaError::InvalidParams(format!(
                "{} gammas but {} betas",
                self.gammas.len(),
                self.betas.len()
            )));
        }
        if self.gammas.is_empty() {
            return Err(QaoaError::InvalidParams("depth must be at least 1".into()));
        }
        if !self.gammas.iter().chain(&self.betas).all(|x| x.is_finite()) {
            return Err(QaoaError::InvalidParams("non-finite angle".into()));
        }
        Ok(())
    }
}

/// Which search coordinate a `theta` index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    Beta(usize),
    Gamma(usize),
}

impl Coordinate {
    pub fn from_index(k: usize, depth: usize) -> Self {
        if k < depth {
            Coordinate::Beta(k)
        } else {
            Coordinate::Gamma(k - depth)
        }
    }

    /// Number of physical gates whose angle is driven by this coordinate.
    pub fn gate_count(&self, instance: &MaxCutInstance) -> usize {
        match self {
            Coordinate::Beta(_) => instance.n(),
            Coordinate::Gamma(_) => instance.num_edges(),
        }
    }

    /// The shift of gate `gate` under this coordinate by `delta` radians of
    /// gate angle.
    pub fn shift(&self, gate: usize, delta: f64) -> GateShift {
        match *self {
            Coordinate::Beta(layer) => GateShift::Vertex {
                layer,
                vertex: gate,
                delta,
            },
            Coordinate::Gamma(layer) => GateShift::Edge {
                layer,
                edge: gate,
                delta,
            },
        }
    }

    /// d(gate angle)/d(coordinate) for gate `gate`.
    ///
    /// Edge gates are `exp(-i φ (I - Z_u Z_v)/2)` with `φ = γ w_uv`; mixer
    /// gates are `exp(-i φ X/2)` with `φ = 2β`.
    pub fn chain_factor(&self, instance: &MaxCutInstance, gate: usize) -> f64 {
        match self {
            Coordinate::Beta(_) => 2.0,
            Coordinate::Gamma(_) => instance.edges()[gate].w,
        }
    }
}

/// Offset applied to the angle of a single physical gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateShift {
    Edge {
        layer: usize,
        edge: usize,
        delta: f64,
    },
    Vertex {
        layer: usize,
        vertex: usize,
        delta: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub n: usize,
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn uniform(n: usize) -> Self {
        let dim = 1usize << n;
        let a = (dim as f64).powf(-0.5);
        StateVector {
            n,
            amplitudes: vec![Complex64::new(a, 0.0); dim],
        }
    }

    pub fn basis(n: usize, z: Bitstring) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1usize << n];
        amplitudes[z.index() as usize] = Complex64::new(1.0, 0.0);
        StateVector { n, amplitudes }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Exact outcome probabilities over all `2^n` bitstrings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub n: usize,
    pub probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn uniform(n: usize) -> Self {
        let dim = 1usize << n;
        OutcomeDistribution {
            n,
            probs: vec![1.0 / dim as f64; dim],
        }
    }

    pub fn point_mass(z: Bitstring) -> Self {
        let mut probs = vec![0.0; 1usize << z.len()];
        probs[z.index() as usize] = 1.0;
        OutcomeDistribution { n: z.len(), probs }
    }

    pub fn prob(&self, z: &Bitstring) -> f64 {
        self.probs[z.index() as usize]
    }

    pub fn total_variation(&self, other: &OutcomeDistribution) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// Per-gate depolarizing strength and the number of gates it acts after.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub lambda_per_gate: f64,
    pub gate_count: usize,
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        NoiseSpec {
            lambda_per_gate: 0.0,
            gate_count: 0,
        }
    }

    /// Noise for the depth-`depth` circuit on `instance`: one ZZ gate per edge
    /// and one X rotation per vertex in every layer.
    pub fn for_circuit(
        lambda_per_gate: f64,
        instance: &MaxCutInstance,
        depth: usize,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda_per_gate) {
            return Err(QaoaError::InvalidConfig(format!(
                "depolarizing strength {lambda_per_gate} outside [0, 1]"
            )));
        }
        Ok(NoiseSpec {
            lambda_per_gate,
            gate_count: depth * (instance.num_edges() + instance.n()),
        })
    }

    /// Global mixing weight `1 - (1 - λ)^G`.
    pub fn mixing(&self) -> f64 {
        1.0 - (1.0 - self.lambda_per_gate).powi(self.gate_count as i32)
    }
}

/// Reusable simulator for one instance; caches the cut table.
#[derive(Debug, Clone)]
pub struct QaoaSimulator<'a> {
    instance: &'a MaxCutInstance,
    cuts: Vec<f64>,
}

impl<'a> QaoaSimulator<'a> {
    pub fn new(instance: &'a MaxCutInstance) -> Result<Self> {
        if instance.n() > MAX_QUBITS {
            return Err(QaoaError::TooLarge {
                n: instance.n(),
                limit: MAX_QUBITS,
            });
        }
        Ok(QaoaSimulator {
            instance,
            cuts: instance.cut_table(),
        })
    }

    pub fn instance(&self) -> &MaxCutInstance {
        self.instance
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn evolve(&self, params: &QaoaParams) -> Result<StateVector> {
        self.evolve_shifted(params, None)
    }

    /// Evolves with the angle of at most one physical gate offset.
    pub fn evolve_shifted(
        &self,
        params: &QaoaParams,
        shift: Option<GateShift>,
    ) -> Result<StateVector> {
        params.validate()?;
        if let Some(s) = shift {
            self.check_shift(params, s)?;
        }
        let n = self.instance.n();
        let mut state = StateVector::uniform(n);
        for layer in 0..params.depth() {
            let gamma = params.gammas[layer];
            match shift {
                Some(GateShift::Edge {
                    layer: l,
                    edge,
                    delta,
                }) if l == layer => {
                    let e = self.instance.edges()[edge];
                    for (idx, amp) in state.amplitudes.iter_mut().enumerate() {
                        let cut_e = ((idx >> e.u) ^ (idx >> e.v)) & 1;
                        let angle = gamma * self.cuts[idx] + delta * cut_e as f64;
                        *amp *= Complex64::from_polar(1.0, -angle);
                    }
                }
                _ => {
                    for (amp, &c) in state.amplitudes.iter_mut().zip(&self.cuts) {
                        *amp *= Complex64::from_polar(1.0, -gamma * c);
                    }
                }
            }
            let beta = params.betas[layer];
            for q in 0..n {
                let angle = match shift {
                    Some(GateShift::Vertex {
                        layer: l,
                        vertex,
                        delta,
                    }) if l == layer && vertex == q => beta + 0.5 * delta,
                    _ => beta,
                };
                apply_x_rotation(&mut state.amplitudes, q, angle);
            }
        }
        Ok(state)
    }

    /// Noisy outcome distribution at `params`, optionally with one gate shifted.
    pub fn output_distribution(
        &self,
        params: &QaoaParams,
        noise: &NoiseSpec,
        shift: Option<GateShift>,
    ) -> Result<OutcomeDistribution> {
        let state = self.evolve_shifted(params, shift)?;
        Ok(apply_depolarizing(&distribution(&state), noise))
    }

    pub fn expectation(&self, dist: &OutcomeDistribution) -> f64 {
        dist.probs.iter().zip(&self.cuts).map(|(p, c)| p * c).sum()
    }

    fn check_shift(&self, params: &QaoaParams, shift: GateShift) -> Result<()> {
        let ok = match shift {
            GateShift::Edge { layer, edge, delta } => {
                layer < params.depth() && edge < self.instance.num_edges() && delta.is_finite()
            }
            GateShift::Vertex {
                layer,
                vertex,
                delta,
            } => layer < params.depth() && vertex < self.instance.n() && delta.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(QaoaError::InvalidParams(format!(
                "gate shift {shift:?} out of range"
            )))
        }
    }
}

/// Applies `exp(-i angle X)` to qubit `q`.
fn apply_x_rotation(amps: &mut [Complex64], q: usize, angle: f64) {
    let (s, c) = angle.sin_cos();
    let mis = Complex64::new(0.0, -s);
    let stride = 1usize << q;
    for block in amps.chunks_exact_mut(stride << 1) {
        let (lo, hi) = block.split_at_mut(stride);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x0, x1) = (*a0, *a1);
            *a0 = x0 * c + x1 * mis;
            *a1 = x1 * c + x0 * mis;
        }
    }
}

/// QAOA state for `params` on `instance`, starting from `|+>^n`.
pub fn evolve(instance: &MaxCutInstance, params: &QaoaParams) -> Result<StateVector> {
    QaoaSimulator::new(instance)?.evolve(params)
}

/// Born-rule probabilities of `state`.
pub fn distribution(state: &StateVector) -> OutcomeDistribution {
    OutcomeDistribution {
        n: state.n,
        probs: state.amplitudes.iter().map(|a| a.norm_sqr()).collect(),
    }
}

/// Mixes `dist` toward uniform with weight `1 - (1 - λ)^G`.
pub fn apply_depolarizing(dist: &OutcomeDistribution, noise: &NoiseSpec) -> OutcomeDistribution {
    let lambda = noise.mixing();
    if lambda == 0.0 {
        return dist.clone();
    }
    let uniform = 1.0 / dist.probs.len() as f64;
    let mut probs: Vec<f64> = dist
        .probs
        .iter()
        .map(|p| (1.0 - lambda) * p + lambda * uniform)
        .collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    OutcomeDistribution { n: dist.n, probs }
}

/// Draws `shots` measurement outcomes.
pub fn sample(dist: &OutcomeDistribution, shots: u64, seed: u64) -> Result<Counts> {
    if shots == 0 {
        return Err(QaoaError::InvalidConfig("shots must be at least 1".into()));
    }
    let cdf: Vec<f64> = dist
        .probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let total = *cdf.last().expect("distribution is nonempty");
    let last_nonzero = dist.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let mut rng = rng_from(seed);
    let mut tally = vec![0u64; dist.probs.len()];
    for _ in 0..shots {
        let u = rng.gen::<f64>() * total;
        let idx = cdf.partition_point(|&c| c <= u).min(last_nonzero);
        tally[idx] += 1;
    }
    Ok(Counts::from_pairs(
        tally
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (Bitstring::new(i as u64, dist.n), c)),
    )
    .expect("at least one shot was drawn"))
}

/// `Σ_z p(z) C(z)`.
pub fn exact_expectation(instance: &MaxCutInstance, dist: &OutcomeDistribution) -> f64 {
    dist.probs
        .iter()
        .enumerate()
        .map(|(i, p)| p * instance.cut_of_index(i as u64))
        .sum()
}
