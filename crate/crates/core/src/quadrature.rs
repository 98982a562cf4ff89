//! Composite Simpson weights on a uniform grid.

/// Weights `q_k` with `∫f ≈ Σ q_k f(x_k)` for `n` uniformly spaced samples of
/// step `h`. An odd number of intervals closes with a 3/8 panel.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut q = vec![0.0; n];
    match n {
        0 | 1 => return q,
        2 => {
            q[0] = 0.5 * h;
            q[1] = 0.5 * h;
            return q;
        }
        _ => {}
    }
    let intervals = n - 1;
    let simpson_intervals = if intervals.is_multiple_of(2) {
        intervals
    } else {
        intervals - 3
    };
    for k in (0..simpson_intervals).step_by(2) {
        q[k] += h / 3.0;
        q[k + 1] += 4.0 * h / 3.0;
        q[k + 2] += h / 3.0;
    }
    if simpson_intervals != intervals {
        let s = simpson_intervals;
        q[s] += 3.0 * h / 8.0;
        q[s + 1] += 9.0 * h / 8.0;
        q[s + 2] += 9.0 * h / 8.0;
        q[s + 3] += 3.0 * h / 8.0;
    }
    q
}
