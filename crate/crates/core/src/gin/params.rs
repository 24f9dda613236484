use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    /// Adam first and second moments.
    pub m: Tensor,
    pub v: Tensor,
    pub trainable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Named parameters in insertion order, with gradient and Adam buffers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Param>,
    index: HashMap<String, usize>,
    /// Adam steps taken.
    pub step: u64,
}

impl ParamStore {
    pub fn new() -> ParamStore {
        ParamStore::default()
    }

    pub fn insert(&mut self, name: &str, value: Tensor, trainable: bool) -> usize {
        assert!(!self.index.contains_key(name), "duplicate parameter {name}");
        let (r, c) = value.shape();
        let id = self.params.len();
        self.params.push(Param {
            name: name.to_string(),
            value,
            grad: Tensor::zeros(r, c),
            m: Tensor::zeros(r, c),
            v: Tensor::zeros(r, c),
            trainable,
        });
        self.index.insert(name.to_string(), id);
        id
    }

    /// Uniform in ±1/√fan_in.
    pub fn insert_uniform(
        &mut self,
        name: &str,
        rows: usize,
        cols: usize,
        fan_in: usize,
        rng: &mut ChaCha8Rng,
    ) -> usize {
        let a = 1.0 / (fan_in.max(1) as f64).sqrt();
        let data = (0..rows * cols).map(|_| rng.gen_range(-a..a)).collect();
        self.insert(name, Tensor::from_vec(rows, cols, data), true)
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Param> {
        self.id(name).map(|i| &self.params[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Param> {
        self.id(name).map(|i| &mut self.params[i])
    }

    pub fn param(&self, id: usize) -> &Param {
        &self.params[id]
    }

    pub fn param_mut(&mut self, id: usize) -> &mut Param {
        &mut self.params[id]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.params.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    pub fn set_trainable_prefix(&mut self, prefix: &str, trainable: bool) {
        for p in &mut self.params {
            if p.name.starts_with(prefix) {
                p.trainable = trainable;
            }
        }
    }

    /// Copies values of every parameter whose name starts with `prefix`
    /// from `other`. Returns how many were copied.
    pub fn copy_from(&mut self, other: &ParamStore, prefix: &str) -> usize {
        let mut n = 0;
        for p in &mut self.params {
            if p.name.starts_with(prefix) {
                if let Some(src) = other.get(&p.name) {
                    if src.value.shape() == p.value.shape() {
                        p.value = src.value.clone();
                        n += 1;
                    }
                }
            }
        }
        n
    }

    pub fn zero_values(&mut self) {
        for p in &mut self.params {
            p.value.fill(0.0);
        }
    }

    /// One bias-corrected Adam update of every trainable parameter.
    pub fn adam_step(&mut self, cfg: &AdamConfig) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for p in self.params.iter_mut().filter(|p| p.trainable) {
            for i in 0..p.value.data.len() {
                let g = p.grad.data[i];
                let m = cfg.beta1 * p.m.data[i] + (1.0 - cfg.beta1) * g;
                let v = cfg.beta2 * p.v.data[i] + (1.0 - cfg.beta2) * g * g;
                p.m.data[i] = m;
                p.v.data[i] = v;
                p.value.data[i] -= cfg.lr * (m / c1) / ((v / c2).sqrt() + cfg.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut s = ParamStore::new();
        let id = s.insert("w", Tensor::from_vec(1, 2, vec![1.0, -1.0]), true);
        s.insert("frozen", Tensor::scalar(5.0), false);
        s.param_mut(id).grad = Tensor::from_vec(1, 2, vec![0.3, -2.0]);
        s.get_mut("frozen").unwrap().grad = Tensor::scalar(1.0);
        let cfg = AdamConfig::default();
        s.adam_step(&cfg);
        let w = &s.param(id).value.data;
        // bias-corrected first step is lr * sign(g) up to eps
        assert!((w[0] - (1.0 - 1e-3)).abs() < 1e-9);
        assert!((w[1] - (-1.0 + 1e-3)).abs() < 1e-9);
        assert_eq!(s.get("frozen").unwrap().value.item(), 5.0);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn identical_steps_are_identical() {
        let mut a = ParamStore::new();
        a.insert("w", Tensor::from_vec(1, 3, vec![0.1, 0.2, 0.3]), true);
        a.get_mut("w").unwrap().grad = Tensor::from_vec(1, 3, vec![1.0, -0.5, 0.25]);
        let mut b = a.clone();
        a.adam_step(&AdamConfig::default());
        b.adam_step(&AdamConfig::default());
        assert_eq!(a, b);
    }
}
