use super::Tensor;
use crate::Result;

/// Outcome of comparing reverse-mode gradients against central differences.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
    /// `(parameter, element)` with the largest relative error.
    pub worst: Option<(usize, usize)>,
    pub coordinates: usize,
}

/// `|a - n| / max(|a|, |n|, floor)`; zero when both are exactly equal.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff == 0.0 {
        return 0.0;
    }
    diff / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares the gradients returned by `f` with `(f(p+h) - f(p-h)) / 2h`
/// on every coordinate. `f` maps parameters to `(loss, gradients)`.
///
/// `floor` bounds the denominator of the relative error so coordinates whose
/// true gradient is zero are judged on absolute error against `floor`.
pub fn finite_diff_check<F>(
    mut f: F,
    params: &[Tensor<f64>],
    h: f64,
    floor: f64,
) -> Result<GradCheck>
where
    F: FnMut(&[Tensor<f64>]) -> Result<(f64, Vec<Tensor<f64>>)>,
{
    assert!(h > 0.0, "step must be positive");
    let (_, analytic) = f(params)?;
    let mut work = params.to_vec();
    let mut out = GradCheck {
        max_relative_error: 0.0,
        max_absolute_error: 0.0,
        worst: None,
        coordinates: 0,
    };
    for p in 0..params.len() {
        for e in 0..params[p].len() {
            let orig = params[p].data()[e];
            work[p].data_mut()[e] = orig + h;
            let (plus, _) = f(&work)?;
            work[p].data_mut()[e] = orig - h;
            let (minus, _) = f(&work)?;
            work[p].data_mut()[e] = orig;

            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[p].data()[e];
            let rel = relative_error(a, numeric, floor);
            out.coordinates += 1;
            out.max_absolute_error = out.max_absolute_error.max((a - numeric).abs());
            if rel > out.max_relative_error || out.worst.is_none() {
                out.max_relative_error = rel.max(out.max_relative_error);
                out.worst = Some((p, e));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tape;

    #[test]
    fn quadratic_in_five_params() {
        // f = sum_i (i+1) * w_i^2 + w_0 * w_4
        let f = |ps: &[Tensor<f64>]| {
            let mut tape = Tape::<f64>::new();
            let w = tape.param(ps[0].clone());
            let coef =
                tape.constant(Tensor::from_vec(5, 1, vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap());
            let mut terms = Vec::new();
            for i in 0..5u32 {
                let wi = tape.gather_rows(w, std::sync::Arc::from(vec![i]))?;
                let ci = tape.gather_rows(coef, std::sync::Arc::from(vec![i]))?;
                let wci = tape.matmul(wi, ci)?;
                terms.push(tape.matmul(wci, wi)?);
            }
            let w0 = tape.gather_rows(w, std::sync::Arc::from(vec![0u32]))?;
            let w4 = tape.gather_rows(w, std::sync::Arc::from(vec![4u32]))?;
            terms.push(tape.matmul(w0, w4)?);
            let loss = tape.sum(&terms)?;
            let g = tape.backward(loss)?;
            Ok((tape.value(loss).get(0, 0), vec![g.get_or_zeros(w, (5, 1))]))
        };
        let params = vec![Tensor::from_vec(5, 1, vec![0.3, -1.2, 2.0, 0.7, -0.4]).unwrap()];
        let check = finite_diff_check(f, &params, 1e-4, 1e-8).unwrap();
        assert!(check.max_relative_error < 1e-8, "{check:?}");
        assert_eq!(check.coordinates, 5);
    }

    #[test]
    fn constant_function() {
        let f = |ps: &[Tensor<f64>]| {
            Ok((
                4.2,
                ps.iter()
                    .map(|p| Tensor::zeros(p.rows(), p.cols()))
                    .collect(),
            ))
        };
        let params = vec![Tensor::row(&[1.0, 2.0]), Tensor::zeros(2, 2)];
        let check = finite_diff_check(f, &params, 1e-3, 1e-8).unwrap();
        assert_eq!(check.max_relative_error, 0.0);
        assert_eq!(check.max_absolute_error, 0.0);
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(1.0, 1.0, 1e-6), 0.0);
        assert!((relative_error(2.0, 1.0, 1e-6) - 0.5).abs() < 1e-15);
        assert!((relative_error(1e-9, 0.0, 1e-3) - 1e-6).abs() < 1e-15);
    }
}
