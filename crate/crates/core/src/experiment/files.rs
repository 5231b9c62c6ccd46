use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::eval::CLASS_NAMES;
use crate::graph::Label;
use crate::tensor::Tensor;
use crate::{Error, Result, NUM_CLASSES};

pub(crate) fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// `offer_idx,Type1,...,Normal` with shortest round-trip floats.
pub fn scores_csv(offers: &[usize], scores: &Tensor<f32>) -> String {
    let mut out = String::from("offer_idx");
    for name in CLASS_NAMES {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (r, o) in offers.iter().enumerate() {
        out.push_str(&o.to_string());
        for v in scores.row_slice(r) {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn read_scores(path: &Path) -> Result<(Vec<usize>, Tensor<f32>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    if r.headers()?.len() != NUM_CLASSES + 1 {
        return Err(Error::format(
            path,
            "expected offer_idx plus nine score columns",
        ));
    }
    let mut offers = Vec::new();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        offers.push(
            rec[0]
                .parse()
                .map_err(|_| Error::format(path, format!("bad offer index {:?}", &rec[0])))?,
        );
        for c in 1..=NUM_CLASSES {
            let v: f32 = rec[c]
                .parse()
                .map_err(|_| Error::format(path, format!("bad score {:?}", &rec[c])))?;
            rows.push(v);
        }
    }
    let n = offers.len();
    Ok((offers, Tensor::from_vec(n, NUM_CLASSES, rows)?))
}

/// Labels keyed by offer, from a bundle's `labels.csv`.
pub fn read_labels(path: &Path) -> Result<BTreeMap<usize, Label>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    if r.headers()?.len() != NUM_CLASSES + 1 {
        return Err(Error::format(
            path,
            "expected offer_idx plus nine class columns",
        ));
    }
    let mut out = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        let o: usize = rec[0]
            .parse()
            .map_err(|_| Error::format(path, format!("bad offer index {:?}", &rec[0])))?;
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
        out.insert(o, l);
    }
    Ok(out)
}
