use std::sync::Arc;

use super::{gemm_nt_acc, gemm_tn_acc, Real, Tensor};
use crate::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

/// Compressed sparse rows with per-entry weights: `out[i] = sum_j w_ij * x[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRows<T> {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    weights: Vec<T>,
    n_cols: usize,
}

impl<T: Real> SparseRows<T> {
    pub fn new(n_cols: usize) -> Self {
        Self {
            offsets: vec![0],
            cols: Vec::new(),
            weights: Vec::new(),
            n_cols,
        }
    }

    pub fn push_row(&mut self, entries: impl IntoIterator<Item = (u32, T)>) {
        for (c, w) in entries {
            debug_assert!((c as usize) < self.n_cols);
            self.cols.push(c);
            self.weights.push(w);
        }
        self.offsets.push(self.cols.len());
    }

    /// Row whose entries are `1/len` over the given columns.
    pub fn push_mean_row(&mut self, cols: &[u32]) {
        let w = if cols.is_empty() {
            T::zero()
        } else {
            T::one() / T::from_usize(cols.len()).unwrap()
        };
        self.push_row(cols.iter().map(|&c| (c, w)));
    }

    pub fn n_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        self.cols[a..b]
            .iter()
            .zip(&self.weights[a..b])
            .map(|(&c, &w)| (c as usize, w))
    }

    fn apply(&self, x: &Tensor<T>) -> Tensor<T> {
        let d = x.cols();
        let mut out = Tensor::zeros(self.n_rows(), d);
        for i in 0..self.n_rows() {
            let dst = out.row_slice_mut(i);
            for (j, w) in self.row(i) {
                for (o, &v) in dst.iter_mut().zip(x.row_slice(j)) {
                    *o += w * v;
                }
            }
        }
        out
    }

    fn apply_transpose_acc(&self, g: &Tensor<T>, acc: &mut Tensor<T>) {
        for i in 0..self.n_rows() {
            let src = g.row_slice(i);
            for (j, w) in self.row(i) {
                for (a, &v) in acc.row_slice_mut(j).iter_mut().zip(src) {
                    *a += w * v;
                }
            }
        }
    }
}

enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Scale(Var, T),
    Act(Var, Activation),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    GatherRows(Var, Arc<[u32]>),
    ScatterRows(Var, Arc<[u32]>),
    SliceRows(Var, usize),
    SpMM(Arc<SparseRows<T>>, Var),
    MeanRows(Var),
    Bce(Var, Arc<Tensor<T>>),
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    needs_grad: bool,
}

/// Records operations in execution order so that gradients can be
/// propagated back in exact reverse order.
pub struct Tape<T = f32> {
    nodes: Vec<Node<T>>,
}

/// Probability clamp applied inside the cross-entropy loss.
pub const PROB_CLAMP: f64 = 1e-7;

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn node(&self, v: Var) -> Result<&Node<T>> {
        self.nodes
            .get(v.0)
            .ok_or_else(|| Error::Autodiff(format!("var {} is not on this tape", v.0)))
    }

    fn grad_of(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].needs_grad)
    }

    /// Input that never receives a gradient.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, w) = (&self.node(a)?.value, &self.node(b)?.value);
        let out = x.matmul(w)?;
        let g = self.grad_of(&[a, b]);
        Ok(self.push(out, Op::MatMul(a, b), g))
    }

    /// Adds a `1 x n` bias to every row.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (xv, bv) = (&self.node(x)?.value, &self.node(bias)?.value);
        if bv.rows() != 1 || bv.cols() != xv.cols() {
            return Err(Error::Shape(format!(
                "bias {:?} does not fit rows of width {}",
                bv.shape(),
                xv.cols()
            )));
        }
        let mut out = xv.clone();
        let b = bv.data();
        for r in 0..out.rows() {
            for (o, &bb) in out.row_slice_mut(r).iter_mut().zip(b) {
                *o += bb;
            }
        }
        let g = self.grad_of(&[x, bias]);
        Ok(self.push(out, Op::AddBias(x, bias), g))
    }

    /// `x * w + bias`.
    pub fn affine(&mut self, x: Var, w: Var, bias: Var) -> Result<Var> {
        let xw = self.matmul(x, w)?;
        self.add_bias(xw, bias)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (&self.node(a)?.value, &self.node(b)?.value);
        if av.shape() != bv.shape() {
            return Err(Error::Shape(format!(
                "add {:?} and {:?}",
                av.shape(),
                bv.shape()
            )));
        }
        let data = av
            .data()
            .iter()
            .zip(bv.data())
            .map(|(&x, &y)| x + y)
            .collect();
        let out = Tensor::from_vec(av.rows(), av.cols(), data)?;
        let g = self.grad_of(&[a, b]);
        Ok(self.push(out, Op::Add(a, b), g))
    }

    /// Sum of several same-shaped values.
    pub fn sum(&mut self, parts: &[Var]) -> Result<Var> {
        let (&first, rest) = parts
            .split_first()
            .ok_or_else(|| Error::Shape("sum of nothing".into()))?;
        let mut acc = first;
        for &p in rest {
            acc = self.add(acc, p)?;
        }
        Ok(acc)
    }

    pub fn scale(&mut self, x: Var, c: T) -> Result<Var> {
        let out = self.node(x)?.value.map(|v| v * c);
        let g = self.grad_of(&[x]);
        Ok(self.push(out, Op::Scale(x, c), g))
    }

    pub fn activation(&mut self, x: Var, kind: Activation) -> Result<Var> {
        if kind == Activation::Identity {
            self.node(x)?;
            return Ok(x);
        }
        let out = self.node(x)?.value.map(|v| apply_activation(v, kind));
        let g = self.grad_of(&[x]);
        Ok(self.push(out, Op::Act(x, kind), g))
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.activation(x, Activation::Relu)
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.activation(x, Activation::Sigmoid)
    }

    /// Column-wise concatenation in argument order.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = match parts.first() {
            Some(&p) => self.node(p)?.value.rows(),
            None => return Err(Error::Shape("concat of nothing".into())),
        };
        let mut width = 0;
        for &p in parts {
            let v = &self.node(p)?.value;
            if v.rows() != rows {
                return Err(Error::Shape(format!(
                    "concat_cols row mismatch: {} vs {}",
                    v.rows(),
                    rows
                )));
            }
            width += v.cols();
        }
        let mut out = Tensor::zeros(rows, width);
        let mut offset = 0;
        for &p in parts {
            let v = &self.nodes[p.0].value;
            for r in 0..rows {
                out.row_slice_mut(r)[offset..offset + v.cols()].copy_from_slice(v.row_slice(r));
            }
            offset += v.cols();
        }
        let g = self.grad_of(parts);
        Ok(self.push(out, Op::ConcatCols(parts.to_vec()), g))
    }

    /// Row-wise concatenation in argument order.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let cols = match parts.first() {
            Some(&p) => self.node(p)?.value.cols(),
            None => return Err(Error::Shape("concat of nothing".into())),
        };
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let v = &self.node(p)?.value;
            if v.cols() != cols {
                return Err(Error::Shape(format!(
                    "concat_rows width mismatch: {} vs {}",
                    v.cols(),
                    cols
                )));
            }
            data.extend_from_slice(v.data());
            rows += v.rows();
        }
        let out = Tensor::from_vec(rows, cols, data)?;
        let g = self.grad_of(parts);
        Ok(self.push(out, Op::ConcatRows(parts.to_vec()), g))
    }

    /// `out[i] = x[index[i]]`.
    pub fn gather_rows(&mut self, x: Var, index: Arc<[u32]>) -> Result<Var> {
        let v = &self.node(x)?.value;
        let mut out = Tensor::zeros(index.len(), v.cols());
        for (i, &src) in index.iter().enumerate() {
            let src = src as usize;
            if src >= v.rows() {
                return Err(Error::Shape(format!(
                    "gather index {src} out of {} rows",
                    v.rows()
                )));
            }
            out.row_slice_mut(i).copy_from_slice(v.row_slice(src));
        }
        let g = self.grad_of(&[x]);
        Ok(self.push(out, Op::GatherRows(x, index), g))
    }

    /// `out` has `n_rows` rows; `out[index[i]] += x[i]`.
    pub fn scatter_rows(&mut self, x: Var, index: Arc<[u32]>, n_rows: usize) -> Result<Var> {
        let v = &self.node(x)?.value;
        if v.rows() != index.len() {
            return Err(Error::Shape(
                "scatter index length differs from rows".into(),
            ));
        }
        let mut out = Tensor::zeros(n_rows, v.cols());
        for (i, &dst) in index.iter().enumerate() {
            let dst = dst as usize;
            if dst >= n_rows {
                return Err(Error::Shape(format!("scatter index {dst} out of {n_rows}")));
            }
            for (o, &s) in out.row_slice_mut(dst).iter_mut().zip(v.row_slice(i)) {
                *o += s;
            }
        }
        let g = self.grad_of(&[x]);
        Ok(self.push(out, Op::ScatterRows(x, index), g))
    }

    /// First `n` rows.
    pub fn slice_rows(&mut self, x: Var, n: usize) -> Result<Var> {
        let v = &self.node(x)?.value;
        if n > v.rows() {
            return Err(Error::Shape(format!("slice {n} of {} rows", v.rows())));
        }
        if n == v.rows() {
            return Ok(x);
        }
        let out = Tensor::from_vec(n, v.cols(), v.data()[..n * v.cols()].to_vec())?;
        let g = self.grad_of(&[x]);
        Ok(self.push(out, Op::SliceRows(x, n), g))
    }

    /// Sparse-dense product `a * x`.
    pub fn spmm(&mut self, a: Arc<SparseRows<T>>, x: Var) -> Result<Var> {
        let v = &self.node(x)?.value;
        if a.n_cols() != v.rows() {
            return Err(Error::Shape(format!(
                "sparse operator with {} columns applied to {} rows",
                a.n_cols(),
                v.rows()
            )));
        }
        let out = a.apply(v);
        let g = self.grad_of(&[x]);
        Ok(self.push(out, Op::SpMM(a, x), g))
    }

    /// Column means as a `1 x d` row; zero row when there are no input rows.
    pub fn mean_rows(&mut self, x: Var) -> Result<Var> {
        let v = &self.node(x)?.value;
        let out = Tensor::row(&column_means(v));
        let g = self.grad_of(&[x]);
        Ok(self.push(out, Op::MeanRows(x), g))
    }

    /// Mean binary cross-entropy of probabilities `p` against 0/1 targets.
    pub fn bce_loss(&mut self, p: Var, targets: Arc<Tensor<T>>) -> Result<Var> {
        let pv = &self.node(p)?.value;
        if pv.shape() != targets.shape() {
            return Err(Error::Shape(format!(
                "bce predictions {:?} vs targets {:?}",
                pv.shape(),
                targets.shape()
            )));
        }
        let out = Tensor::row(&[bce_value(pv, &targets)]);
        let g = self.grad_of(&[p]);
        Ok(self.push(out, Op::Bce(p, targets), g))
    }

    /// Reverse pass from a scalar.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let root = self.node(loss)?;
        if root.value.shape() != (1, 1) {
            return Err(Error::Autodiff(format!(
                "backward needs a scalar, got {:?}",
                root.value.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::filled(1, 1, T::one()));

        for id in (0..=loss.0).rev() {
            let node = &self.nodes[id];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[id] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node<T>, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) {
        let val = |v: Var| &self.nodes[v.0].value;
        let wants = |v: Var| self.nodes[v.0].needs_grad;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if wants(*a) {
                    let acc = slot(grads, *a, val(*a).shape());
                    gemm_nt_acc(g, val(*b), acc);
                }
                if wants(*b) {
                    let acc = slot(grads, *b, val(*b).shape());
                    gemm_tn_acc(val(*a), g, acc);
                }
            }
            Op::AddBias(x, b) => {
                if wants(*x) {
                    add_into(slot(grads, *x, g.shape()), g);
                }
                if wants(*b) {
                    let acc = slot(grads, *b, val(*b).shape());
                    for r in 0..g.rows() {
                        for (a, &v) in acc.data_mut().iter_mut().zip(g.row_slice(r)) {
                            *a += v;
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    if wants(v) {
                        add_into(slot(grads, v, g.shape()), g);
                    }
                }
            }
            Op::Scale(x, c) => {
                if wants(*x) {
                    let acc = slot(grads, *x, g.shape());
                    for (a, &v) in acc.data_mut().iter_mut().zip(g.data()) {
                        *a += v * *c;
                    }
                }
            }
            Op::Act(x, kind) => {
                if wants(*x) {
                    let out = &node.value;
                    let input = val(*x);
                    let acc = slot(grads, *x, g.shape());
                    for i in 0..acc.len() {
                        let d = match kind {
                            Activation::Relu => {
                                if input.data()[i] > T::zero() {
                                    T::one()
                                } else {
                                    T::zero()
                                }
                            }
                            Activation::Sigmoid => {
                                let s = out.data()[i];
                                s * (T::one() - s)
                            }
                            Activation::Identity => T::one(),
                        };
                        acc.data_mut()[i] += d * g.data()[i];
                    }
                }
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let w = val(p).cols();
                    if wants(p) {
                        let acc = slot(grads, p, val(p).shape());
                        for r in 0..g.rows() {
                            for (a, &v) in acc
                                .row_slice_mut(r)
                                .iter_mut()
                                .zip(&g.row_slice(r)[offset..offset + w])
                            {
                                *a += v;
                            }
                        }
                    }
                    offset += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                let cols = g.cols();
                for &p in parts {
                    let n = val(p).rows() * cols;
                    if wants(p) {
                        let acc = slot(grads, p, val(p).shape());
                        for (a, &v) in acc.data_mut().iter_mut().zip(&g.data()[offset..offset + n])
                        {
                            *a += v;
                        }
                    }
                    offset += n;
                }
            }
            Op::GatherRows(x, index) => {
                if wants(*x) {
                    let acc = slot(grads, *x, val(*x).shape());
                    for (i, &src) in index.iter().enumerate() {
                        for (a, &v) in acc
                            .row_slice_mut(src as usize)
                            .iter_mut()
                            .zip(g.row_slice(i))
                        {
                            *a += v;
                        }
                    }
                }
            }
            Op::ScatterRows(x, index) => {
                if wants(*x) {
                    let acc = slot(grads, *x, val(*x).shape());
                    for (i, &dst) in index.iter().enumerate() {
                        for (a, &v) in acc
                            .row_slice_mut(i)
                            .iter_mut()
                            .zip(g.row_slice(dst as usize))
                        {
                            *a += v;
                        }
                    }
                }
            }
            Op::SliceRows(x, n) => {
                if wants(*x) {
                    let acc = slot(grads, *x, val(*x).shape());
                    let len = n * g.cols();
                    for (a, &v) in acc.data_mut()[..len].iter_mut().zip(g.data()) {
                        *a += v;
                    }
                }
            }
            Op::SpMM(a, x) => {
                if wants(*x) {
                    let acc = slot(grads, *x, val(*x).shape());
                    a.apply_transpose_acc(g, acc);
                }
            }
            Op::MeanRows(x) => {
                if wants(*x) {
                    let acc = slot(grads, *x, val(*x).shape());
                    let m = acc.rows();
                    if m > 0 {
                        let inv = T::one() / T::from_usize(m).unwrap();
                        for r in 0..m {
                            for (a, &v) in acc.row_slice_mut(r).iter_mut().zip(g.data()) {
                                *a += v * inv;
                            }
                        }
                    }
                }
            }
            Op::Bce(p, z) => {
                if wants(*p) {
                    let pv = val(*p);
                    let (lo, hi) = clamp_bounds::<T>();
                    let n = T::from_usize(pv.len().max(1)).unwrap();
                    let scale = g.data()[0] / n;
                    let acc = slot(grads, *p, pv.shape());
                    for i in 0..pv.len() {
                        let q = pv.data()[i];
                        if q < lo || q > hi {
                            continue;
                        }
                        let t = z.data()[i];
                        let d = -(t / q - (T::one() - t) / (T::one() - q));
                        acc.data_mut()[i] += d * scale;
                    }
                }
            }
        }
    }
}

fn slot<T: Real>(grads: &mut [Option<Tensor<T>>], v: Var, shape: (usize, usize)) -> &mut Tensor<T> {
    grads[v.0].get_or_insert_with(|| Tensor::zeros(shape.0, shape.1))
}

fn add_into<T: Real>(acc: &mut Tensor<T>, g: &Tensor<T>) {
    for (a, &v) in acc.data_mut().iter_mut().zip(g.data()) {
        *a += v;
    }
}

fn clamp_bounds<T: Real>() -> (T, T) {
    let eps = T::from_f64(PROB_CLAMP).unwrap();
    (eps, T::one() - eps)
}

/// Like `clamp`, but NaN passes through so divergence stays visible.
fn clamp_nan<T: Real>(v: T, lo: T, hi: T) -> T {
    if v.is_nan() {
        v
    } else {
        v.max(lo).min(hi)
    }
}

pub(crate) fn apply_activation<T: Real>(v: T, kind: Activation) -> T {
    match kind {
        Activation::Relu => {
            if v > T::zero() || v.is_nan() {
                v
            } else {
                T::zero()
            }
        }
        Activation::Identity => v,
        Activation::Sigmoid => {
            let s = if v >= T::zero() {
                T::one() / (T::one() + (-v).exp())
            } else {
                let e = v.exp();
                e / (T::one() + e)
            };
            // Keep the output strictly inside (0, 1) even where it rounds.
            let top = T::one() - T::epsilon() / (T::one() + T::one());
            clamp_nan(s, T::min_positive_value(), top)
        }
    }
}

pub(crate) fn column_means<T: Real>(x: &Tensor<T>) -> Vec<T> {
    let mut out = vec![T::zero(); x.cols()];
    if x.rows() == 0 {
        return out;
    }
    for r in 0..x.rows() {
        for (o, &v) in out.iter_mut().zip(x.row_slice(r)) {
            *o += v;
        }
    }
    let inv = T::one() / T::from_usize(x.rows()).unwrap();
    for o in &mut out {
        *o *= inv;
    }
    out
}

pub(crate) fn bce_value<T: Real>(p: &Tensor<T>, z: &Tensor<T>) -> T {
    let (lo, hi) = clamp_bounds::<T>();
    if p.is_empty() {
        return T::zero();
    }
    let total: T = p
        .data()
        .iter()
        .zip(z.data())
        .map(|(&q, &t)| {
            let q = clamp_nan(q, lo, hi);
            t * q.ln() + (T::one() - t) * (T::one() - q).ln()
        })
        .sum();
    -total / T::from_usize(p.len()).unwrap()
}

/// Gradients from one reverse pass, indexed by [`Var`].
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Real> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient for `v`, zeros of `shape` when nothing flowed into it.
    pub fn get_or_zeros(&self, v: Var, shape: (usize, usize)) -> Tensor<T> {
        self.get(v)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(shape.0, shape.1))
    }
}
