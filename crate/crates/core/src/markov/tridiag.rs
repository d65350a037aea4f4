//! Sturm-bisection eigensolver for symmetric tridiagonal matrices.
//!
//! Counts eigenvalues below a shift via the LDL^T pivot signs (Sturm
//! sequence), then bisects for the k largest. Machine-precision accurate for
//! the near-degenerate top pairs that dense solvers resolve poorly at large
//! dimension.

/// Number of eigenvalues strictly less than `shift`.
fn count_below(diagonal: &[f64], off: &[f64], shift: f64) -> usize {
    let n = diagonal.len();
    let mut count = 0;
    let mut pivot = diagonal[0] - shift;
    if pivot < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let guarded = if pivot.abs() < 1e-300 {
            if pivot >= 0.0 { 1e-300 } else { -1e-300 }
        } else {
            pivot
        };
        pivot = (diagonal[i] - shift) - off[i - 1] * off[i - 1] / guarded;
        if pivot < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k` largest eigenvalues, descending.
pub fn largest_eigenvalues(diagonal: &[f64], off: &[f64], k: usize) -> Vec<f64> {
    let n = diagonal.len();
    assert!(k <= n, "asked for more eigenvalues than the dimension");
    assert_eq!(off.len(), n - 1);

    // Gershgorin interval containing the whole spectrum.
    let mut lo = f64::MAX;
    let mut hi = f64::MIN;
    for i in 0..n {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diagonal[i] - left - right);
        hi = hi.max(diagonal[i] + left + right);
    }
    let span = (hi - lo).max(1e-300);
    lo -= 1e-12 * span;
    hi += 1e-12 * span;

    (0..k)
        .map(|j| {
            // Eigenvalue with exactly n-1-j below it.
            let wanted = n - 1 - j;
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if b - a <= f64::EPSILON * mid.abs().max(1.0) {
                    break;
                }
                if count_below(diagonal, off, mid) <= wanted {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}
