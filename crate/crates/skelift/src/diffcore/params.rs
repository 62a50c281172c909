use indexmap::IndexMap;
use rand::Rng;

use crate::error::{Error, Result};

use super::tensor::Tensor;

/// Ordered collection of named parameter tensors.
///
/// Iteration order is insertion order, which keeps gradient evaluation and
/// optimizer updates deterministic across runs and across save/load cycles.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    entries: IndexMap<String, Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<()> {
        let name = name.into();
        if self.entries.contains_key(&name) {
            return Err(Error::Validation(format!("duplicate parameter name '{name}'")));
        }
        self.entries.insert(name, tensor);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries.get_mut(name)
    }

    pub fn set(&mut self, name: &str, tensor: Tensor) -> Result<()> {
        match self.entries.get_mut(name) {
            Some(slot) => {
                *slot = tensor;
                Ok(())
            }
            None => Err(Error::Validation(format!("unknown parameter '{name}'"))),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.entries.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    pub fn total_values(&self) -> usize {
        self.entries.values().map(Tensor::numel).sum()
    }

    /// Zero tensors with the same names and shapes.
    pub fn zeros_like(&self) -> ParamStore {
        let mut out = ParamStore::new();
        for (name, t) in self.iter() {
            out.entries.insert(name.clone(), Tensor::zeros(t.shape().to_vec()));
        }
        out
    }

    /// Checks that `other` holds exactly the same names with the same shapes.
    pub fn check_same_layout(&self, other: &ParamStore) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::Validation(format!(
                "parameter count mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        for (name, t) in self.iter() {
            match other.get(name) {
                Some(o) if o.shape() == t.shape() => {}
                Some(o) => {
                    return Err(Error::Validation(format!(
                        "parameter '{name}' shape mismatch: {:?} vs {:?}",
                        t.shape(),
                        o.shape()
                    )))
                }
                None => {
                    return Err(Error::Validation(format!("parameter '{name}' missing")));
                }
            }
        }
        Ok(())
    }
}

/// Glorot-uniform initialization: Uniform(±sqrt(6/(fan_in+fan_out))).
pub fn glorot_uniform(rng: &mut impl Rng, fan_in: usize, fan_out: usize, shape: Vec<usize>) -> Tensor {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let numel: usize = shape.iter().product();
    let data: Vec<f64> = (0..numel).map(|_| rng.gen_range(-bound..=bound)).collect();
    Tensor::new(shape, data).expect("finite init values")
}
