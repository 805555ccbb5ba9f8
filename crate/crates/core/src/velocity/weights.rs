use std::collections::HashMap;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Dense row-major tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(Error::InvalidSize(format!(
                "shape {shape:?} needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Self { shape, values })
    }
}

/// Named parameters in insertion order, addressed by dot-separated paths.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightContainer {
    entries: Vec<(String, Tensor)>,
    index: HashMap<String, usize>,
}

impl WeightContainer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces a tensor; replacements keep their original position.
    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) {
        let name = name.into();
        match self.index.get(&name) {
            Some(&i) => self.entries[i].1 = tensor,
            None => {
                self.index.insert(name.clone(), self.entries.len());
                self.entries.push((name, tensor));
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index.get(name).map(|&i| &self.entries[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn fetch(&self, name: &str, shape: &[usize]) -> Result<&Tensor> {
        let t = self.get(name).ok_or_else(|| Error::WeightMismatch {
            path: name.to_string(),
            reason: "missing".into(),
        })?;
        if t.shape != shape {
            return Err(Error::WeightMismatch {
                path: name.to_string(),
                reason: format!("expected shape {shape:?}, found {:?}", t.shape),
            });
        }
        Ok(t)
    }

    pub fn matrix(&self, name: &str, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let t = self.fetch(name, &[rows, cols])?;
        Ok(Array2::from_shape_vec((rows, cols), t.values.clone()).expect("checked shape"))
    }

    pub fn vector(&self, name: &str, len: usize) -> Result<Array1<f64>> {
        let t = self.fetch(name, &[len])?;
        Ok(Array1::from(t.values.clone()))
    }
}
