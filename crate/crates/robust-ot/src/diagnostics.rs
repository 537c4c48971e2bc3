//! Convergence-rate estimates from recorded error sequences.

/// Per-2-iteration contraction over the trailing half of the resolvable
/// window. `samples` are `(iteration, error)` pairs in increasing
/// iteration order; the window ends before the first error below `floor`.
/// Returns `None` when fewer than two samples are resolvable.
pub fn trailing_rate(samples: &[(usize, f64)], floor: f64) -> Option<f64> {
    let end = samples.iter().position(|(_, e)| !(*e >= floor)).unwrap_or(samples.len());
    let window = &samples[..end];
    if window.len() < 2 {
        return None;
    }
    let (k0, _) = window[0];
    let (k1, e1) = window[window.len() - 1];
    let mid = k0 + (k1 - k0) / 2;
    let &(km, em) = window.iter().find(|(k, _)| *k >= mid)?;
    if km == k1 {
        let (kp, ep) = window[window.len() - 2];
        return Some((e1 / ep).powf(2.0 / (k1 - kp) as f64));
    }
    Some((e1 / em).powf(2.0 / (k1 - km) as f64))
}

/// Largest per-2-iteration ratio between consecutive resolvable samples
/// of the trailing half.
pub fn trailing_max_ratio(samples: &[(usize, f64)], floor: f64) -> Option<f64> {
    let end = samples.iter().position(|(_, e)| !(*e >= floor)).unwrap_or(samples.len());
    let window = &samples[..end];
    if window.len() < 2 {
        return None;
    }
    let start = window.len() / 2;
    window[start.saturating_sub(1)..]
        .windows(2)
        .map(|w| (w[1].1 / w[0].1).powf(2.0 / (w[1].0 - w[0].0) as f64))
        .reduce(f64::max)
}
