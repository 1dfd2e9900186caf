use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam ascent state. Each coordinate keeps its own step counter so that
/// coordinate-wise updates get correct bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    steps: Vec<i32>,
}

impl Adam {
    pub fn new(cfg: AdamConfig, dim: usize) -> Self {
        Adam {
            cfg,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            steps: vec![0; dim],
        }
    }

    /// Moves `x[k]` uphill along gradient component `g`.
    pub fn ascend_coordinate(&mut self, x: &mut [f64], k: usize, g: f64) {
        let c = &self.cfg;
        self.steps[k] += 1;
        self.m[k] = c.beta1 * self.m[k] + (1.0 - c.beta1) * g;
        self.v[k] = c.beta2 * self.v[k] + (1.0 - c.beta2) * g * g;
        let m_hat = self.m[k] / (1.0 - c.beta1.powi(self.steps[k]));
        let v_hat = self.v[k] / (1.0 - c.beta2.powi(self.steps[k]));
        x[k] += c.learning_rate * m_hat / (v_hat.sqrt() + c.eps);
    }

    pub fn ascend(&mut self, x: &mut [f64], grad: &[f64]) {
        for (k, &g) in grad.iter().enumerate() {
            self.ascend_coordinate(x, k, g);
        }
    }
}
