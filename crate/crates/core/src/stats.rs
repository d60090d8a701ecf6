//! Order-independent floating-point aggregation and small estimators.
//!
//! Summing f64 values is not associative, so a sum over a row subset would
//! normally depend on row order. Every aggregate here first sorts its
//! operands into a canonical order, which makes cohort-level results
//! invariant under patient permutations and parallel scheduling.

/// Sum after sorting into a canonical (total) order.
pub fn stable_sum(values: &mut Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// Order-independent mean; `None` on an empty slice.
pub fn stable_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    Some(stable_sum(&mut v) / values.len() as f64)
}

/// Mean and population (n-denominator) standard deviation.
///
/// Returns `None` on an empty slice. Uses the two-pass formula over
/// canonically sorted values.
pub fn stable_mean_pop_std(values: &[f64]) -> Option<(f64, f64)> {
    let mean = stable_mean(values)?;
    let mut sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = stable_sum(&mut sq) / values.len() as f64;
    Some((mean, var.sqrt()))
}

/// Linear-interpolation quantile (the common "type 7" definition) of an
/// unsorted sample. `q` in [0, 1]. `None` on an empty slice.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        return Some(v[lo]);
    }
    let w = h - lo as f64;
    Some(v[lo] * (1.0 - w) + v[hi] * w)
}

/// Values that are present (non-NaN) in a missing-aware slice.
pub fn present(values: &[f64]) -> Vec<f64> {
    values.iter().copied().filter(|v| !v.is_nan()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_sum_is_order_independent() {
        let mut a = vec![1e16, 1.0, -1e16, 3.5, 0.25];
        let mut b = vec![0.25, -1e16, 3.5, 1e16, 1.0];
        assert_eq!(stable_sum(&mut a).to_bits(), stable_sum(&mut b).to_bits());
    }

    #[test]
    fn population_std_of_two_points_is_half_gap() {
        let (mean, std) = stable_mean_pop_std(&[-1.0, 1.0]).unwrap();
        assert_eq!(mean, 0.0);
        assert_eq!(std, 1.0);
    }

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), Some(1.0));
        assert_eq!(quantile(&v, 1.0), Some(4.0));
        assert_eq!(quantile(&v, 0.5), Some(2.5));
        assert_eq!(quantile(&[], 0.5), None);
    }

    #[test]
    fn present_filters_nan() {
        assert_eq!(present(&[1.0, f64::NAN, 2.0]), vec![1.0, 2.0]);
    }
}
