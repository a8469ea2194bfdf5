//! Deterministic reductions and sample statistics.

use num_complex::Complex64;
use std::ops::Add;

const LEAF: usize = 64;

/// Pairwise summation with a fixed split pattern. The result depends only on
/// the order of `xs`, never on how the values were produced.
pub fn pairwise_sum<T>(xs: &[T]) -> T
where
    T: Copy + Add<Output = T> + Default,
{
    if xs.len() <= LEAF {
        return xs.iter().fold(T::default(), |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean and standard error of the mean for real samples.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Mean and standard error of the mean for complex samples; the error is
/// taken from `E|z - mean|^2`.
pub fn complex_mean_se(zs: &[Complex64]) -> (Complex64, f64) {
    let n = zs.len();
    if n == 0 {
        return (Complex64::new(f64::NAN, f64::NAN), f64::NAN);
    }
    let mean = pairwise_sum(zs) / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let dev: Vec<f64> = zs.iter().map(|z| (z - mean).norm_sqr()).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_of_ones_is_exact() {
        let ones = vec![1.0f64; 100_003];
        assert_eq!(pairwise_sum(&ones), 100_003.0);
        let (m, se) = mean_se(&ones);
        assert_eq!(m, 1.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn mean_se_matches_textbook() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let (m, se) = mean_se(&xs);
        assert_eq!(m, 2.5);
        // sample variance 5/3
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn complex_constant_has_zero_error() {
        let zs = vec![Complex64::new(0.25, -0.5); 1000];
        let (m, se) = complex_mean_se(&zs);
        assert_eq!(m, Complex64::new(0.25, -0.5));
        assert_eq!(se, 0.0);
    }
}
