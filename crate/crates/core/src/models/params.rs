use std::sync::Arc;

use rand::Rng;

use crate::tensor::{Real, Tape, Tensor, Var};

/// Ordered, named parameter tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct Params<T = f32> {
    names: Arc<[String]>,
    tensors: Vec<Tensor<T>>,
}

impl<T: Real> Params<T> {
    pub fn from_entries(entries: Vec<(String, Tensor<T>)>) -> Self {
        let (names, tensors): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        Self {
            names: names.into(),
            tensors,
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.index_of(name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        self.index_of(name).map(move |i| &mut self.tensors[i])
    }

    /// Total scalar count.
    pub fn numel(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn cast<U: Real>(&self) -> Params<U> {
        Params {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    /// Records every tensor as a trainable leaf.
    pub fn bind(&self, tape: &mut Tape<T>) -> Bound {
        Bound {
            names: self.names.clone(),
            vars: self.tensors.iter().map(|t| tape.param(t.clone())).collect(),
        }
    }

    /// Records every tensor as a constant.
    pub fn bind_frozen(&self, tape: &mut Tape<T>) -> Bound {
        Bound {
            names: self.names.clone(),
            vars: self
                .tensors
                .iter()
                .map(|t| tape.constant(t.clone()))
                .collect(),
        }
    }

    pub fn set_all_zero(&mut self) {
        for t in &mut self.tensors {
            t.data_mut().fill(T::zero());
        }
    }
}

/// Tape handles for a [`Params`] set, looked up by name.
#[derive(Clone, Debug)]
pub struct Bound {
    names: Arc<[String]>,
    vars: Vec<Var>,
}

impl Bound {
    pub fn var(&self, name: &str) -> Var {
        let i = self
            .names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("no parameter named {name}"));
        self.vars[i]
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

/// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> Tensor<f32> {
    let limit = (6.0 / (fan_in + fan_out).max(1) as f64).sqrt() as f32;
    let data = (0..fan_in * fan_out)
        .map(|_| rng.random_range(-limit..=limit))
        .collect();
    Tensor::from_vec(fan_in, fan_out, data).unwrap()
}

/// Builder that appends a Glorot weight and a zero bias per layer.
pub(crate) struct Init<'a, R> {
    pub rng: &'a mut R,
    pub entries: Vec<(String, Tensor<f32>)>,
}

impl<'a, R: Rng> Init<'a, R> {
    pub fn new(rng: &'a mut R) -> Self {
        Self {
            rng,
            entries: Vec::new(),
        }
    }

    pub fn weight(&mut self, name: impl Into<String>, fan_in: usize, fan_out: usize) {
        let w = glorot(self.rng, fan_in, fan_out);
        self.entries.push((name.into(), w));
    }

    pub fn bias(&mut self, name: impl Into<String>, width: usize) {
        self.entries.push((name.into(), Tensor::zeros(1, width)));
    }

    pub fn layer(&mut self, prefix: &str, fan_in: usize, fan_out: usize) {
        self.weight(format!("{prefix}.w"), fan_in, fan_out);
        self.bias(format!("{prefix}.b"), fan_out);
    }

    pub fn finish(self) -> Params<f32> {
        Params::from_entries(self.entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn glorot_bounds_and_determinism() {
        let a = glorot(&mut ChaCha8Rng::seed_from_u64(1), 10, 20);
        let b = glorot(&mut ChaCha8Rng::seed_from_u64(1), 10, 20);
        assert_eq!(a, b);
        let limit = (6.0f32 / 30.0).sqrt();
        assert!(a.data().iter().all(|v| v.abs() <= limit));
        assert!(a.data().iter().any(|v| v.abs() > limit / 2.0));
    }

    #[test]
    fn lookup_by_name() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut init = Init::new(&mut rng);
        init.layer("fc", 3, 2);
        let p = init.finish();
        assert_eq!(p.names(), &["fc.w".to_string(), "fc.b".to_string()]);
        assert_eq!(p.get("fc.b").unwrap().shape(), (1, 2));
        assert_eq!(p.numel(), 8);
        let mut tape = Tape::new();
        let b = p.bind(&mut tape);
        assert_eq!(tape.value(b.var("fc.w")).shape(), (3, 2));
    }
}
