//! Bernoulli KL-UCB index, computed by bisection.

/// Bernoulli KL divergence d(p, q) with the usual closed forms at the
/// boundaries: d(0,q) = ln(1/(1-q)), d(1,q) = ln(1/q).
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q));
    if (p - q).abs() < f64::EPSILON {
        return 0.0;
    }
    if q <= 0.0 || q >= 1.0 {
        // p != q here, so the divergence is infinite
        return f64::INFINITY;
    }
    let left = if p > 0.0 { p * (p / q).ln() } else { 0.0 };
    let right = if p < 1.0 {
        (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln()
    } else {
        0.0
    };
    left + right
}

/// Largest mean statistically compatible with `count` observations of
/// empirical mean `mean` under an exploration budget `f`:
/// max { q in [mean, 1] : count * d(mean, q) <= f }.
///
/// Bisection to absolute tolerance 1e-9. The index is always >= mean,
/// non-decreasing in `f` and non-increasing in `count`.
pub fn kl_ucb_index(mean: f64, count: u64, f: f64) -> f64 {
    debug_assert!(count >= 1);
    let mean = mean.clamp(0.0, 1.0);
    if f <= 0.0 {
        return mean;
    }
    if mean >= 1.0 {
        return 1.0;
    }
    let budget = f / count as f64;
    // d(mean, q) is increasing in q on [mean, 1); check the open boundary
    if bernoulli_kl(mean, 1.0 - 1e-12) <= budget {
        return 1.0;
    }
    let (mut lo, mut hi) = (mean, 1.0);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if bernoulli_kl(mean, mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_mean_matches_closed_form() {
        // N * ln(1/(1-q)) = f  =>  q = 1 - exp(-f/N)
        let idx = kl_ucb_index(0.0, 1, 2.0);
        assert_abs_diff_eq!(idx, 1.0 - (-2.0f64).exp(), epsilon = 1e-6);
        let idx = kl_ucb_index(0.0, 5, 1.5);
        assert_abs_diff_eq!(idx, 1.0 - (-0.3f64).exp(), epsilon = 1e-6);
    }

    #[test]
    fn zero_budget_returns_the_mean() {
        assert_eq!(kl_ucb_index(0.3, 4, 0.0), 0.3);
    }

    #[test]
    fn mean_one_pins_the_index() {
        assert_eq!(kl_ucb_index(1.0, 3, 5.0), 1.0);
    }

    #[test]
    fn monotone_in_budget_and_count() {
        let mut prev = 0.0;
        for f in [0.1, 0.5, 1.0, 2.0, 4.0] {
            let idx = kl_ucb_index(0.4, 10, f);
            assert!(idx >= prev && idx >= 0.4);
            prev = idx;
        }
        let mut prev = 1.0;
        for n in [1, 2, 5, 20, 100] {
            let idx = kl_ucb_index(0.4, n, 1.0);
            assert!(idx <= prev);
            prev = idx;
        }
    }

    #[test]
    fn divergence_edge_cases() {
        assert_eq!(bernoulli_kl(0.5, 0.5), 0.0);
        assert_eq!(bernoulli_kl(0.5, 0.0), f64::INFINITY);
        assert_eq!(bernoulli_kl(0.5, 1.0), f64::INFINITY);
        assert_abs_diff_eq!(bernoulli_kl(0.0, 0.5), std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(bernoulli_kl(1.0, 0.5), std::f64::consts::LN_2, epsilon = 1e-12);
    }
}
