//! Graph bundle directory:
//!
//! ```text
//! meta.json      counts, dims, relation and column names, format version, CRC32 per file
//! sellers.fbin   \
//! products.fbin   > "CGFM", u32 rows, u32 cols, u32 reserved, then row-major LE f32
//! offers.fbin    /
//! edges.csv      relation_id,src_type,src_idx,dst_type,dst_idx (offer rows in offer order)
//! labels.csv     offer_idx,class_0..class_8 for labeled offers
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    validate, EdgeRecord, FeatureMatrix, FeatureSchema, GraphParts, HeteroGraph, Label, NodeRef,
    NodeType, RelationTag,
};
use crate::{Error, Result, NUM_CLASSES};

pub const FORMAT_VERSION: u32 = 1;
const FBIN_MAGIC: &[u8; 4] = b"CGFM";
const FBIN_HEADER: usize = 16;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Counts {
    sellers: usize,
    products: usize,
    offers: usize,
    edges: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Dims {
    seller: usize,
    product: usize,
    offer: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Meta {
    format_version: u32,
    counts: Counts,
    dims: Dims,
    relation_names: Vec<String>,
    columns: FeatureSchema,
    checksums: BTreeMap<String, u32>,
}

pub(crate) fn encode_fbin(m: &FeatureMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(FBIN_HEADER + m.data().len() * 4);
    out.extend_from_slice(FBIN_MAGIC);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub(crate) fn decode_fbin(path: &Path, bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < FBIN_HEADER || &bytes[..4] != FBIN_MAGIC {
        return Err(Error::format(path, "missing CGFM header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (rows, cols) = (word(4), word(8));
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(FBIN_HEADER))
        .ok_or_else(|| Error::format(path, "header dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            format!(
                "expected {expected} bytes for {rows}x{cols}, found {}",
                bytes.len()
            ),
        ));
    }
    let data = bytes[FBIN_HEADER..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FeatureMatrix::from_vec(rows, cols, data)
}

fn write(path: &Path, bytes: &[u8], sums: &mut BTreeMap<String, u32>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let name = path.file_name().unwrap().to_string_lossy().into_owned();
    sums.insert(name, crc32fast::hash(bytes));
    Ok(())
}

fn edges_csv(g: &HeteroGraph) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["relation_id", "src_type", "src_idx", "dst_type", "dst_idx"])?;
    for e in g.edges() {
        w.write_record([
            e.relation.id().to_string(),
            e.src.node_type.name().to_string(),
            e.src.index.to_string(),
            e.dst.node_type.name().to_string(),
            e.dst.index.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Graph(e.to_string()))
}

pub(crate) fn labels_csv(labels: &[Option<Label>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["offer_idx".to_string()];
    header.extend((0..NUM_CLASSES).map(|c| format!("class_{c}")));
    w.write_record(&header)?;
    for (o, l) in labels.iter().enumerate() {
        if let Some(l) = l {
            let mut row = vec![o.to_string()];
            row.extend(l.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    w.into_inner().map_err(|e| Error::Graph(e.to_string()))
}

/// Writes `g` as a bundle directory, creating it if needed.
pub fn save_graph(g: &HeteroGraph, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut sums = BTreeMap::new();
    write(
        &dir.join("sellers.fbin"),
        &encode_fbin(g.seller_features()),
        &mut sums,
    )?;
    write(
        &dir.join("products.fbin"),
        &encode_fbin(g.product_features()),
        &mut sums,
    )?;
    write(
        &dir.join("offers.fbin"),
        &encode_fbin(g.offer_features()),
        &mut sums,
    )?;
    write(&dir.join("edges.csv"), &edges_csv(g)?, &mut sums)?;
    write(&dir.join("labels.csv"), &labels_csv(g.labels())?, &mut sums)?;

    let (ds, dp, d_o) = g.schema().dims();
    let meta = Meta {
        format_version: FORMAT_VERSION,
        counts: Counts {
            sellers: g.num_sellers(),
            products: g.num_products(),
            offers: g.num_offers(),
            edges: g.num_edges(),
        },
        dims: Dims {
            seller: ds,
            product: dp,
            offer: d_o,
        },
        relation_names: RelationTag::all().iter().map(|r| r.name()).collect(),
        columns: g.schema().clone(),
        checksums: sums,
    };
    let path = dir.join("meta.json");
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn read_checked(dir: &Path, name: &str, meta: &Meta) -> Result<Vec<u8>> {
    let path = dir.join(name);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let expected = meta
        .checksums
        .get(name)
        .ok_or_else(|| Error::format(dir.join("meta.json"), format!("no checksum for {name}")))?;
    if crc32fast::hash(&bytes) != *expected {
        return Err(Error::Checksum { path });
    }
    Ok(bytes)
}

fn parse_node(path: &Path, ty: &str, idx: &str) -> Result<NodeRef> {
    let node_type = NodeType::parse(ty)
        .ok_or_else(|| Error::format(path, format!("unknown node type {ty:?}")))?;
    let index = idx
        .parse::<u32>()
        .map_err(|_| Error::format(path, format!("bad node index {idx:?}")))?;
    Ok(NodeRef { node_type, index })
}

pub(crate) fn parse_labels(path: &Path, bytes: &[u8], offers: usize) -> Result<Vec<Option<Label>>> {
    let mut labels = vec![None; offers];
    let mut r = csv::Reader::from_reader(bytes);
    if r.headers()?.len() != NUM_CLASSES + 1 {
        return Err(Error::format(
            path,
            "expected offer_idx plus nine class columns",
        ));
    }
    for rec in r.records() {
        let rec = rec?;
        let o: usize = rec[0]
            .parse()
            .map_err(|_| Error::format(path, format!("bad offer index {:?}", &rec[0])))?;
        if o >= offers {
            return Err(Error::format(path, format!("offer {o} out of range")));
        }
        let mut l = [0u8; NUM_CLASSES];
        for (c, slot) in l.iter_mut().enumerate() {
            *slot = match &rec[c + 1] {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Error::format(
                        path,
                        format!("label value {other:?} is not 0/1"),
                    ))
                }
            };
        }
        labels[o] = Some(l);
    }
    Ok(labels)
}

/// Reads and validates a bundle written by [`save_graph`].
pub fn load_graph(dir: impl AsRef<Path>) -> Result<HeteroGraph> {
    let dir = dir.as_ref();
    let meta_path = dir.join("meta.json");
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: Meta =
        serde_json::from_str(&text).map_err(|e| Error::format(&meta_path, e.to_string()))?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::Version {
            path: meta_path,
            found: meta.format_version,
            expected: FORMAT_VERSION,
        });
    }

    let mut mats = Vec::new();
    for name in ["sellers.fbin", "products.fbin", "offers.fbin"] {
        let bytes = read_checked(dir, name, &meta)?;
        mats.push(decode_fbin(&dir.join(name), &bytes)?);
    }
    let offer_features = mats.pop().unwrap();
    let product_features = mats.pop().unwrap();
    let seller_features = mats.pop().unwrap();
    if seller_features.rows() != meta.counts.sellers
        || product_features.rows() != meta.counts.products
        || offer_features.rows() != meta.counts.offers
    {
        return Err(Error::format(
            &meta_path,
            "feature row counts disagree with meta counts",
        ));
    }

    let edges_path = dir.join("edges.csv");
    let bytes = read_checked(dir, "edges.csv", &meta)?;
    let mut edges = Vec::with_capacity(meta.counts.edges);
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 5 {
            return Err(Error::format(&edges_path, "expected five columns"));
        }
        let rel: usize = rec[0]
            .parse()
            .map_err(|_| Error::format(&edges_path, format!("bad relation id {:?}", &rec[0])))?;
        edges.push(EdgeRecord {
            relation: RelationTag::from_id(rel)?,
            src: parse_node(&edges_path, &rec[1], &rec[2])?,
            dst: parse_node(&edges_path, &rec[3], &rec[4])?,
        });
    }
    if edges.len() != meta.counts.edges {
        return Err(Error::format(
            &edges_path,
            "edge count disagrees with meta counts",
        ));
    }

    let bytes = read_checked(dir, "labels.csv", &meta)?;
    let labels = parse_labels(&dir.join("labels.csv"), &bytes, meta.counts.offers)?;

    let g = HeteroGraph::from_parts(GraphParts {
        schema: meta.columns,
        seller_features,
        product_features,
        offer_features,
        edges,
        labels,
    })
    .map_err(|e| Error::format(dir, e.to_string()))?;
    validate(&g).map_err(|v| Error::format(dir, v.to_string()))?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fbin_rejects_truncation() {
        let m = FeatureMatrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let bytes = encode_fbin(&m);
        assert_eq!(bytes.len(), 16 + 16);
        assert_eq!(decode_fbin(Path::new("x"), &bytes).unwrap(), m);
        assert!(decode_fbin(Path::new("x"), &bytes[..bytes.len() - 1]).is_err());
        assert!(decode_fbin(Path::new("x"), &bytes[..10]).is_err());
    }
}
