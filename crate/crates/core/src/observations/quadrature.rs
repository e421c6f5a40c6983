use crate::error::{invalid_arg, Result};

/// Weights of the local rule `Q(w) = Σ_j ω_j w(t_j)` on `[0, 1]` for sorted
/// sample parameters `t_1 < … < t_m`.
///
/// With `t_0 = 0`, `t_{m+1} = 1` and `Δt_j = t_j − t_{j−1}`:
///
/// ```text
/// ω_1 = Δt_1 + Δt_2 / 2
/// ω_j = (Δt_j + Δt_{j+1}) / 2        1 < j < m
/// ω_m = Δt_m / 2 + Δt_{m+1}
/// ```
///
/// A single sample gets weight one and an empty element gets no weights, so
/// the weights sum to one whenever `m ≥ 1`.
pub fn quadrature_weights(t: &[f64]) -> Result<Vec<f64>> {
    for (j, &tj) in t.iter().enumerate() {
        if !(0.0..=1.0).contains(&tj) {
            return invalid_arg(format!("parameter t[{j}] = {tj} outside [0, 1]"));
        }
        if j > 0 && tj <= t[j - 1] {
            return invalid_arg(format!("parameters not strictly increasing at index {j}"));
        }
    }
    let mut w = vec![0.0; t.len()];
    weights_into(t, &mut w);
    Ok(w)
}

pub(crate) fn weights_into(t: &[f64], w: &mut [f64]) {
    let m = t.len();
    debug_assert_eq!(w.len(), m);
    match m {
        0 => {}
        1 => w[0] = 1.0,
        _ => {
            let dt = |j: usize| -> f64 {
                // Δt_j for j in 1..=m+1
                let hi = if j == m + 1 { 1.0 } else { t[j - 1] };
                let lo = if j == 1 { 0.0 } else { t[j - 2] };
                hi - lo
            };
            w[0] = dt(1) + 0.5 * dt(2);
            for j in 2..m {
                w[j - 1] = 0.5 * (dt(j) + dt(j + 1));
            }
            w[m - 1] = 0.5 * dt(m) + dt(m + 1);
        }
    }
}

/// `<a, b>_n = Σ_i α_i a_i b_i`
pub fn empirical_inner_product(a: &[f64], b: &[f64], alpha: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() != alpha.len() {
        return invalid_arg(format!(
            "length mismatch: {} values, {} values, {} weights",
            a.len(),
            b.len(),
            alpha.len()
        ));
    }
    Ok(a.iter().zip(b).zip(alpha).map(|((x, y), w)| w * x * y).sum())
}

/// `‖a‖_n = <a, a>_n^{1/2}`, a semi-norm on functions sampled at the sites.
pub fn empirical_norm(a: &[f64], alpha: &[f64]) -> Result<f64> {
    Ok(empirical_inner_product(a, a, alpha)?.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15)
    }

    #[test]
    fn two_thirds() {
        assert!(close(&quadrature_weights(&[1.0 / 3.0, 2.0 / 3.0]).unwrap(), &[0.5, 0.5]));
    }

    #[test]
    fn single_and_empty() {
        assert_eq!(quadrature_weights(&[0.5]).unwrap(), vec![1.0]);
        assert!(quadrature_weights(&[]).unwrap().is_empty());
    }

    #[test]
    fn uneven_four_points() {
        let w = quadrature_weights(&[0.1, 0.2, 0.4, 0.9]).unwrap();
        assert!(close(&w, &[0.15, 0.15, 0.35, 0.35]), "{w:?}");
    }

    #[test]
    fn rejects_unsorted() {
        assert!(quadrature_weights(&[0.3, 0.3]).is_err());
        assert!(quadrature_weights(&[0.5, 0.2]).is_err());
        assert!(quadrature_weights(&[1.2]).is_err());
    }

    #[test]
    fn inner_product_basics() {
        let alpha = [0.5, 0.25, 0.25];
        assert_eq!(empirical_inner_product(&[1.0; 3], &[0.0; 3], &alpha).unwrap(), 0.0);
        assert_eq!(empirical_inner_product(&[1.0; 3], &[1.0; 3], &alpha).unwrap(), 1.0);
        assert_eq!(empirical_norm(&[2.0, 0.0, 0.0], &alpha).unwrap(), 2f64.sqrt());
        assert!(empirical_inner_product(&[1.0; 2], &[1.0; 3], &alpha).is_err());
    }
}
