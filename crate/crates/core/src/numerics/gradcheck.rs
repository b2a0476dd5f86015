//! Central finite-difference oracle for gradient tests.
//!
//! Only forward values are used here, so the check is independent of the
//! reverse pass it validates.

use super::{ParamId, ParamStore, Tensor};

/// Step used by the checks.
pub const STEP: f64 = 1e-4;

/// Smallest gradient norm the relative error divides by. Central differences
/// at [`STEP`] carry roundoff near `1e-12 * |f|`, so smaller norms are noise.
pub const SCALE_FLOOR: f64 = 1e-8;

/// Numeric gradient of `f` with respect to every coordinate of `inputs[which]`.
pub fn numeric_input_grad(
    inputs: &[Tensor],
    which: usize,
    f: impl Fn(&[Tensor]) -> f64,
) -> Vec<f64> {
    let mut work = inputs.to_vec();
    let n = work[which].numel();
    (0..n)
        .map(|i| {
            let orig = work[which].data()[i];
            work[which].data_mut()[i] = orig + STEP;
            let up = f(&work);
            work[which].data_mut()[i] = orig - STEP;
            let down = f(&work);
            work[which].data_mut()[i] = orig;
            (up - down) / (2.0 * STEP)
        })
        .collect()
}

/// Numeric gradient of `f` with respect to a stored parameter.
pub fn numeric_param_grad(
    store: &ParamStore,
    id: ParamId,
    f: impl Fn(&ParamStore) -> f64,
) -> Vec<f64> {
    let mut work = store.clone();
    let n = work.get(id).numel();
    (0..n)
        .map(|i| {
            let orig = work.get(id).data()[i];
            work.get_mut(id).data_mut()[i] = orig + STEP;
            let up = f(&work);
            work.get_mut(id).data_mut()[i] = orig - STEP;
            let down = f(&work);
            work.get_mut(id).data_mut()[i] = orig;
            (up - down) / (2.0 * STEP)
        })
        .collect()
}

/// Relative error `||a - n|| / max(||a||, ||n||, SCALE_FLOOR)` over a whole
/// gradient.
pub fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, n)| a - n).collect();
    norm(&diff) / norm(analytic).max(norm(numeric)).max(SCALE_FLOOR)
}
