use std::fmt;

use super::{FeatureMatrix, HeteroGraph, NodeRef, NodeType, RelationTag, NUM_RELATIONS};

/// First broken invariant found by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub location: String,
    pub problem: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.problem)
    }
}

fn violation(location: impl Into<String>, problem: impl Into<String>) -> Violation {
    Violation {
        location: location.into(),
        problem: problem.into(),
    }
}

fn check_finite(name: &str, m: &FeatureMatrix) -> Result<(), Violation> {
    for r in 0..m.rows() {
        if let Some(c) = m.row(r).iter().position(|v| !v.is_finite()) {
            return Err(violation(
                format!("{name} row {r} column {c}"),
                format!("non-finite value {}", m.row(r)[c]),
            ));
        }
    }
    Ok(())
}

fn check_list(location: &str, list: &[NodeRef], bound: usize) -> Result<(), Violation> {
    for w in list.windows(2) {
        if w[0] == w[1] {
            return Err(violation(location, format!("duplicate edge to {:?}", w[0])));
        }
        if w[0] > w[1] {
            return Err(violation(location, "neighbor list not sorted"));
        }
    }
    if let Some(v) = list.iter().find(|v| v.idx() >= bound) {
        return Err(violation(location, format!("endpoint {v:?} out of range")));
    }
    Ok(())
}

/// Checks every structural and numeric invariant of `g`.
pub fn validate(g: &HeteroGraph) -> Result<(), Violation> {
    let (ds, dp, d_o) = g.schema().dims();
    for (name, m, d) in [
        ("seller_features", g.seller_features(), ds),
        ("product_features", g.product_features(), dp),
        ("offer_features", g.offer_features(), d_o),
    ] {
        if m.cols() != d {
            return Err(violation(
                name,
                format!("width {} but schema has {d}", m.cols()),
            ));
        }
        check_finite(name, m)?;
    }
    if g.offer_features().rows() != g.num_offers() {
        return Err(violation(
            "offer_features",
            "row count differs from offer count",
        ));
    }

    for s in 0..g.num_sellers() {
        let v = NodeRef::seller(s);
        for r in RelationTag::all() {
            let list = g.neighbors(v, r);
            let loc = format!("seller {s} relation {}", r.id());
            let bound = if r == RelationTag::OFFER {
                g.num_products()
            } else {
                g.num_sellers()
            };
            check_list(&loc, &list, bound)?;
            for &u in &list {
                if u == v {
                    return Err(violation(&loc, "self-loop"));
                }
                if !g.neighbors(u, r).contains(&v) {
                    return Err(violation(&loc, format!("{u:?} does not list it back")));
                }
            }
        }
    }
    for p in 0..g.num_products() {
        let v = NodeRef::product(p);
        let list = g.neighbors(v, RelationTag::OFFER);
        let loc = format!("product {p} relation {}", RelationTag::OFFER.id());
        check_list(&loc, &list, g.num_sellers())?;
        if list.iter().any(|u| u.node_type != NodeType::Seller) {
            return Err(violation(&loc, "offer neighbor is not a seller"));
        }
    }

    for (o, &(s, p)) in g.offer_ends().iter().enumerate() {
        if s as usize >= g.num_sellers() || p as usize >= g.num_products() {
            return Err(violation(format!("offer {o}"), "endpoint out of range"));
        }
    }
    for (o, l) in g.labels().iter().enumerate() {
        if let Some(l) = l {
            if let Some(c) = l.iter().position(|&v| v > 1) {
                return Err(violation(
                    format!("label of offer {o} class {c}"),
                    format!("value {} is not 0/1", l[c]),
                ));
            }
        }
    }
    debug_assert_eq!(RelationTag::all().len(), NUM_RELATIONS);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeRecord, GraphParts};

    fn base() -> HeteroGraph {
        let mut g = HeteroGraph::with_dims(2, 1, 1);
        for _ in 0..3 {
            g.add_node(NodeType::Seller, &[0.5, 0.5]).unwrap();
        }
        g.add_node(NodeType::Product, &[1.0]).unwrap();
        g.add_edge(
            RelationTag::seller_seller(2).unwrap(),
            NodeRef::seller(0),
            NodeRef::seller(1),
            None,
        )
        .unwrap();
        g.add_offer(2, 0, &[3.0]).unwrap();
        g
    }

    #[test]
    fn clean_graph_passes() {
        assert_eq!(validate(&base()), Ok(()));
    }

    #[test]
    fn nan_feature_names_cell() {
        let mut g = base();
        g.seller_features_mut().set(1, 1, f32::NAN);
        let v = validate(&g).unwrap_err();
        assert_eq!(v.location, "seller_features row 1 column 1");
    }

    #[test]
    fn injected_duplicate_edge() {
        let mut parts = base().into_parts();
        parts.edges.push(EdgeRecord {
            relation: RelationTag::seller_seller(2).unwrap(),
            src: NodeRef::seller(1),
            dst: NodeRef::seller(0),
        });
        let g = HeteroGraph::from_parts(GraphParts { ..parts }).unwrap();
        let v = validate(&g).unwrap_err();
        assert!(v.problem.contains("duplicate"), "{v}");
    }
}
