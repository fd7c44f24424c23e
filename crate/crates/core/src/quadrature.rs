//! Composite trapezoid rule on grid samples.

/// Integral of the samples `values` taken at the ascending points `grid`.
pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(grid.len(), values.len());
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Like [`trapezoid`], with the integrand produced on the fly.
pub fn trapezoid_by<F: FnMut(usize) -> f64>(grid: &[f64], mut f: F) -> f64 {
    let mut total = 0.0;
    let mut prev = match grid.first() {
        Some(_) => f(0),
        None => return 0.0,
    };
    for j in 1..grid.len() {
        let cur = f(j);
        total += 0.5 * (grid[j] - grid[j - 1]) * (prev + cur);
        prev = cur;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_linear_integrands() {
        let grid: std::vec::Vec<f64> = (0..11).map(|j| j as f64 / 10.0).collect();
        let values: std::vec::Vec<f64> = grid.iter().map(|t| 3.0 * t + 1.0).collect();
        assert!((trapezoid(&grid, &values) - 2.5).abs() < 1e-14);
        assert!((trapezoid_by(&grid, |j| values[j]) - 2.5).abs() < 1e-14);
    }

    #[test]
    fn empty_and_single_point() {
        assert_eq!(trapezoid(&[], &[]), 0.0);
        assert_eq!(trapezoid_by(&[0.3], |_| 5.0), 0.0);
    }
}
