//! Relational graph convolution over an [`EgoNetwork`].

use std::sync::Arc;

use crate::graph::FeatureMatrix;
use crate::sampling::EgoNetwork;
use crate::tensor::{Activation, Real, SparseRows, Tape, Tensor, Var};
use crate::{Error, Result};

/// Tape handles for one layer.
#[derive(Clone, Debug)]
pub struct RgcnLayerVars {
    pub self_weight: Var,
    pub bias: Var,
    pub relation_weights: Vec<Var>,
}

/// Computes the first `n_out` rows of the next layer.
///
/// `h_v' = act(sum_r sum_{u in N_v^r} W_r h_u / |N_v^r| + W_0 h_v + b)`.
/// Each relation only touches the rows that have neighbors under it.
pub fn rgcn_layer_rows<T: Real>(
    tape: &mut Tape<T>,
    ego: &EgoNetwork,
    h: Var,
    n_out: usize,
    layer: &RgcnLayerVars,
    act: Activation,
) -> Result<Var> {
    let n_in = tape.value(h).rows();
    if n_out > n_in {
        return Err(Error::Shape(format!(
            "layer asks for {n_out} rows from {n_in}"
        )));
    }
    if layer.relation_weights.len() != ego.num_relations() {
        return Err(Error::Shape(format!(
            "{} relation weights for {} relations",
            layer.relation_weights.len(),
            ego.num_relations()
        )));
    }
    let own = tape.slice_rows(h, n_out)?;
    let own = tape.affine(own, layer.self_weight, layer.bias)?;
    let mut parts = vec![own];
    for (r, &w) in layer.relation_weights.iter().enumerate() {
        let mut rows = Vec::new();
        let mut op = SparseRows::new(n_in);
        for v in 0..n_out {
            let ns = ego.neighbors(v, r);
            if ns.is_empty() {
                continue;
            }
            if let Some(&u) = ns.iter().find(|&&u| u as usize >= n_in) {
                return Err(Error::Graph(format!(
                    "ego network too shallow: node {v} needs row {u} of {n_in}"
                )));
            }
            rows.push(v as u32);
            op.push_mean_row(ns);
        }
        if rows.is_empty() {
            continue;
        }
        let agg = tape.spmm(Arc::new(op), h)?;
        let msg = tape.matmul(agg, w)?;
        parts.push(tape.scatter_rows(msg, Arc::from(rows), n_out)?);
    }
    let pre = tape.sum(&parts)?;
    tape.activation(pre, act)
}

/// Stacked layers, relu between them and identity after the last.
/// Layer `l` of `L` only computes nodes within `L - 1 - l` hops of the seeds.
pub fn rgcn_stack<T: Real>(
    tape: &mut Tape<T>,
    ego: &EgoNetwork,
    h0: Var,
    layers: &[RgcnLayerVars],
) -> Result<Var> {
    let depth = layers.len();
    if ego.hops() < depth {
        return Err(Error::Graph(format!(
            "ego network of {} hops is too shallow for {depth} layers",
            ego.hops()
        )));
    }
    let mut h = h0;
    for (l, layer) in layers.iter().enumerate() {
        let act = if l + 1 == depth {
            Activation::Identity
        } else {
            Activation::Relu
        };
        h = rgcn_layer_rows(tape, ego, h, ego.hop_end(depth - 1 - l), layer, act)?;
    }
    Ok(h)
}

/// Per-kind projection of raw features into one shared width, one row per
/// ego node in local order.
pub fn project_ego<T: Real>(
    tape: &mut Tape<T>,
    ego: &EgoNetwork,
    features: &[&FeatureMatrix],
    projections: &[(Var, Var)],
    act: Activation,
) -> Result<Var> {
    let n = ego.len();
    let mut positions = vec![Vec::new(); features.len()];
    let mut rows = vec![Vec::new(); features.len()];
    for v in 0..n {
        let k = ego.kind_of(v);
        positions[k].push(v as u32);
        rows[k].push(ego.index_in_kind(v));
    }
    let mut parts = Vec::new();
    for k in 0..features.len() {
        if positions[k].is_empty() {
            continue;
        }
        let x = tape.constant(features[k].gather::<T>(rows[k].iter().copied()));
        let (w, b) = projections[k];
        let y = tape.affine(x, w, b)?;
        let y = tape.activation(y, act)?;
        parts.push(tape.scatter_rows(y, Arc::from(std::mem::take(&mut positions[k])), n)?);
    }
    if parts.is_empty() {
        let width = tape.value(projections[0].0).cols();
        return Ok(tape.constant(Tensor::zeros(0, width)));
    }
    tape.sum(&parts)
}

/// One layer over every node of `ego`, without a tape.
pub fn rgcn_layer<T: Real>(
    ego: &EgoNetwork,
    h: &Tensor<T>,
    relation_weights: &[Tensor<T>],
    self_weight: &Tensor<T>,
    bias: &Tensor<T>,
    act: Activation,
) -> Result<Tensor<T>> {
    if h.rows() != ego.len() {
        return Err(Error::Shape(format!(
            "{} rows for {} ego nodes",
            h.rows(),
            ego.len()
        )));
    }
    let mut tape = Tape::new();
    let hv = tape.constant(h.clone());
    let vars = RgcnLayerVars {
        self_weight: tape.constant(self_weight.clone()),
        bias: tape.constant(bias.clone()),
        relation_weights: relation_weights
            .iter()
            .map(|w| tape.constant(w.clone()))
            .collect(),
    };
    let out = rgcn_layer_rows(&mut tape, ego, hv, ego.len(), &vars, act)?;
    Ok(tape.value(out).clone())
}
