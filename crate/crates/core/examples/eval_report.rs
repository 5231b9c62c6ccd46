//! Per-class ROC-AUC with deltas against a baseline, on hand-made scores.
//!
//! ```text
//! cargo run --example eval_report
//! ```

use coldguess::eval::{per_class_report, roc_auc};
use coldguess::graph::Label;
use coldguess::tensor::Tensor;
use coldguess::NUM_CLASSES;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> coldguess::Result<()> {
    // ties count half
    println!(
        "AUC of [0.1, 0.4, 0.4, 0.8] vs [0, 1, 0, 1]: {:?}",
        roc_auc(&[0.1, 0.4, 0.4, 0.8], &[0, 1, 0, 1])
    );

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 2000;
    let labels: Vec<Label> = (0..n)
        .map(|_| {
            let mut l = [0u8; NUM_CLASSES];
            l[rng.random_range(0..NUM_CLASSES)] = 1;
            l
        })
        .collect();
    let noisy = |rng: &mut ChaCha8Rng, signal: f32| {
        let mut t = Tensor::<f32>::zeros(n, NUM_CLASSES);
        for (r, l) in labels.iter().enumerate() {
            for (c, &v) in l.iter().enumerate() {
                t.set(r, c, signal * v as f32 + rng.random::<f32>());
            }
        }
        t
    };
    let weak = noisy(&mut rng, 0.2);
    let strong = noisy(&mut rng, 0.6);

    let base = per_class_report(&weak, &labels, None)?;
    let report = per_class_report(&strong, &labels, Some(&base))?;
    print!("{}", report.to_csv());
    Ok(())
}
