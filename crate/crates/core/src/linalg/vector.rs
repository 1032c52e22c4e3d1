use crate::error::{invalid, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four accumulators let the compiler vectorize without reassociating.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `(Σ|x_i|^p)^{1/p}`, or `max |x_i|` for `p = ∞`.
pub fn lp_norm(x: &[f64], p: f64) -> Result<f64> {
    if p.is_nan() || p <= 0.0 {
        return invalid(format!("lp_norm needs p > 0, got {p}"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return invalid("lp_norm input must be finite");
    }
    if p.is_infinite() {
        return Ok(x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    if p == 2.0 {
        return Ok(norm2(x));
    }
    if p == 1.0 {
        return Ok(x.iter().map(|v| v.abs()).sum());
    }
    Ok(x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p))
}

/// Keeps the `k` largest-magnitude entries of `x` and zeroes the rest.
/// Among equal magnitudes the smaller index wins.
pub fn best_k_term(x: &[f64], k: usize) -> Result<Vec<f64>> {
    if k > x.len() {
        return invalid(format!("best_k_term: K={k} exceeds length {}", x.len()));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    let mut out = vec![0.0; x.len()];
    for &i in &order[..k] {
        out[i] = x[i];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_norm_examples() {
        assert_eq!(lp_norm(&[3.0, 4.0], 2.0).unwrap(), 5.0);
        assert_eq!(lp_norm(&[1.0; 4], 1.0).unwrap(), 4.0);
        assert_eq!(lp_norm(&[1.0, -2.0], f64::INFINITY).unwrap(), 2.0);
        assert!((lp_norm(&[1.0, 1.0], 0.5).unwrap() - 4.0).abs() < 1e-12);
        assert!(lp_norm(&[1.0], 0.0).is_err());
        assert!(lp_norm(&[f64::NAN], 2.0).is_err());
    }

    #[test]
    fn best_k_term_examples() {
        assert_eq!(best_k_term(&[3.0, -1.0, 2.0], 2).unwrap(), vec![3.0, 0.0, 2.0]);
        assert_eq!(best_k_term(&[3.0, -1.0, 2.0], 3).unwrap(), vec![3.0, -1.0, 2.0]);
        assert_eq!(best_k_term(&[1.0, 1.0, 1.0], 1).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(best_k_term(&[1.0, -4.0], 0).unwrap(), vec![0.0, 0.0]);
        assert!(best_k_term(&[1.0], 2).is_err());
    }
}
