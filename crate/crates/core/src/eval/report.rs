use serde::{Deserialize, Serialize};

use super::auc::roc_auc;
use crate::graph::Label;
use crate::tensor::Tensor;
use crate::{Error, Result, NUM_CLASSES};

pub const CLASS_NAMES: [&str; NUM_CLASSES] = [
    "Type1", "Type2", "Type3", "Type4", "Type5", "Type6", "Type7", "Type8", "Normal",
];

/// Per-class ROC-AUC of one model on one evaluation set. Undefined entries
/// (a class absent or universal in the set) stay `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenario: String,
    pub model: String,
    pub seed: u64,
    pub listings: usize,
    pub auc: Vec<Option<f64>>,
    /// Percentage points over the baseline, rounded to 0.1.
    pub delta_pcp: Option<Vec<Option<f64>>>,
    pub geomean_auc: Option<f64>,
    pub geomean_delta_pcp: Option<f64>,
}

/// `(prod auc)^(1/n)`; undefined if any entry is undefined or zero.
pub fn geometric_mean_auc(aucs: &[Option<f64>]) -> Option<f64> {
    if aucs.is_empty() {
        return None;
    }
    let mut log_sum = 0.0;
    for a in aucs {
        match a {
            Some(v) if *v > 0.0 => log_sum += v.ln(),
            _ => return None,
        }
    }
    Some((log_sum / aucs.len() as f64).exp())
}

pub fn delta_pcp(auc: f64, baseline: f64) -> f64 {
    ((auc - baseline) * 1000.0).round() / 10.0
}

/// One-vs-rest AUC per class for an `n x 9` score matrix.
pub fn per_class_report(
    scores: &Tensor<f32>,
    labels: &[Label],
    baseline: Option<&EvalReport>,
) -> Result<EvalReport> {
    if scores.rows() != labels.len() || scores.cols() != NUM_CLASSES {
        return Err(Error::Shape(format!(
            "scores are {}x{} but there are {} labels of {NUM_CLASSES} classes",
            scores.rows(),
            scores.cols(),
            labels.len()
        )));
    }
    let auc: Vec<Option<f64>> = (0..NUM_CLASSES)
        .map(|c| {
            let s: Vec<f64> = (0..scores.rows())
                .map(|r| scores.get(r, c) as f64)
                .collect();
            let l: Vec<u8> = labels.iter().map(|l| l[c]).collect();
            roc_auc(&s, &l)
        })
        .collect();
    let deltas = baseline.map(|b| {
        auc.iter()
            .zip(&b.auc)
            .map(|(a, b)| Some(delta_pcp((*a)?, (*b)?)))
            .collect()
    });
    let geomean_auc = geometric_mean_auc(&auc);
    let geomean_delta_pcp = baseline.and_then(|b| Some(delta_pcp(geomean_auc?, b.geomean_auc?)));
    Ok(EvalReport {
        scenario: String::new(),
        model: String::new(),
        seed: 0,
        listings: labels.len(),
        geomean_auc,
        geomean_delta_pcp,
        auc,
        delta_pcp: deltas,
    })
}

fn fmt_auc(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".into(), |v| format!("{v:.6}"))
}

fn fmt_delta(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".into(), |v| format!("{v:.1}"))
}

impl EvalReport {
    /// `class,auc,delta_pcp` rows, then a `geomean` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,auc,delta_pcp\n");
        for (c, name) in CLASS_NAMES.iter().enumerate() {
            let delta = match &self.delta_pcp {
                Some(d) => fmt_delta(d[c]),
                None => String::new(),
            };
            out.push_str(&format!("{name},{},{delta}\n", fmt_auc(self.auc[c])));
        }
        let geo_delta = match self.delta_pcp {
            Some(_) => fmt_delta(self.geomean_delta_pcp),
            None => String::new(),
        };
        out.push_str(&format!(
            "geomean,{},{geo_delta}\n",
            fmt_auc(self.geomean_auc)
        ));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_hot(c: usize) -> Label {
        let mut l = [0; NUM_CLASSES];
        l[c] = 1;
        l
    }

    #[test]
    fn geometric_mean_cases() {
        assert_eq!(geometric_mean_auc(&[Some(0.5); 9]), Some(0.5));
        assert!((geometric_mean_auc(&[Some(0.25), Some(1.0)]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(geometric_mean_auc(&[Some(0.7), None]), None);
        assert_eq!(geometric_mean_auc(&[Some(0.7), Some(0.0)]), None);
    }

    #[test]
    fn identical_to_baseline_gives_zero_deltas() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let labels: Vec<Label> = (0..200).map(|i| one_hot(i % NUM_CLASSES)).collect();
        let data = (0..200 * NUM_CLASSES)
            .map(|_| rng.random::<f32>())
            .collect();
        let scores = Tensor::from_vec(200, NUM_CLASSES, data).unwrap();
        let base = per_class_report(&scores, &labels, None).unwrap();
        let r = per_class_report(&scores, &labels, Some(&base)).unwrap();
        assert!(r.delta_pcp.unwrap().iter().all(|d| *d == Some(0.0)));
        assert_eq!(r.geomean_delta_pcp, Some(0.0));
    }

    #[test]
    fn absent_class_is_undefined() {
        let labels: Vec<Label> = (0..40).map(|i| one_hot(i % 3)).collect();
        let scores = Tensor::from_vec(
            40,
            NUM_CLASSES,
            (0..40 * NUM_CLASSES).map(|i| (i % 7) as f32).collect(),
        )
        .unwrap();
        let r = per_class_report(&scores, &labels, None).unwrap();
        assert!(r.auc[..3].iter().all(Option::is_some));
        assert!(r.auc[3..].iter().all(Option::is_none));
        assert_eq!(r.geomean_auc, None);
        assert!(r.to_csv().contains("Type4,undefined,"));
    }

    #[test]
    fn random_scores_sit_near_one_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 10_000;
        let labels: Vec<Label> = (0..n)
            .map(|_| std::array::from_fn(|_| rng.random_bool(0.5) as u8))
            .collect();
        let data = (0..n * NUM_CLASSES).map(|_| rng.random::<f32>()).collect();
        let scores = Tensor::from_vec(n, NUM_CLASSES, data).unwrap();
        let r = per_class_report(&scores, &labels, None).unwrap();
        for a in r.auc {
            let a = a.unwrap();
            assert!((0.47..=0.53).contains(&a), "{a}");
        }
        let g = r.geomean_auc.unwrap();
        assert!(g <= 0.53);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let scores = Tensor::<f32>::zeros(3, NUM_CLASSES);
        assert!(per_class_report(&scores, &[one_hot(0)], None).is_err());
    }

    #[test]
    fn delta_rounds_to_a_tenth() {
        assert_eq!(delta_pcp(0.736, 0.7), 3.6);
        assert_eq!(delta_pcp(0.5, 0.75), -25.0);
    }
}
