//! Central finite-difference gradients for checking hand-derived backward passes.

use super::Parameterized;

/// Smallest magnitude used as the denominator of a relative error.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

/// Central differences of `loss` with respect to every parameter of `p`.
///
/// The result has the same layout as `p` and can be compared with an
/// analytic gradient through [`max_rel_error`].
pub fn numerical_grad<P, F>(p: &mut P, mut loss: F, eps: f64) -> P
where
    P: Parameterized,
    F: FnMut(&P) -> f64,
{
    let mut out = p.zeros_like();
    let sizes: Vec<usize> = p.params().iter().map(|t| t.len()).collect();
    for (ti, &n) in sizes.iter().enumerate() {
        for i in 0..n {
            let orig = p.params()[ti].data()[i];
            p.params_mut()[ti].data_mut()[i] = orig + eps;
            let plus = loss(p);
            p.params_mut()[ti].data_mut()[i] = orig - eps;
            let minus = loss(p);
            p.params_mut()[ti].data_mut()[i] = orig;
            out.params_mut()[ti].data_mut()[i] = (plus - minus) / (2.0 * eps);
        }
    }
    out
}

/// Central difference of a scalar function of a vector argument.
pub fn numerical_grad_vec<F>(x: &[f64], mut f: F, eps: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + eps;
            let plus = f(&x);
            x[i] = orig - eps;
            let minus = f(&x);
            x[i] = orig;
            (plus - minus) / (2.0 * eps)
        })
        .collect()
}

/// `|a − n| / max(|a|, |n|, REL_ERROR_FLOOR)` for a pair of scalars.
pub fn rel_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(REL_ERROR_FLOOR)
}

/// Largest elementwise relative error between two same-shaped gradients.
pub fn max_rel_error<P: Parameterized>(analytic: &P, numeric: &P) -> f64 {
    max_rel_error_slices(&analytic.flat(), &numeric.flat())
}

pub fn max_rel_error_slices(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| rel_error(a, n))
        .fold(0.0, f64::max)
}
