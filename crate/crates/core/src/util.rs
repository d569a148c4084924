//! Small numeric helpers shared by the engines.

/// Quantile by nearest rank on a copy of `data` (`q` in `[0, 1]`).
pub(crate) fn quantile(data: &[f64], q: f64) -> f64 {
    debug_assert!(!data.is_empty());
    let mut buf = data.to_vec();
    let idx = ((buf.len() - 1) as f64 * q.clamp(0.0, 1.0)).round() as usize;
    let (_, v, _) = buf.select_nth_unstable_by(idx, f64::total_cmp);
    *v
}

/// Centered running maximum over `2 * half + 1` samples (monotone deque,
/// O(n)). Windows are truncated at the edges.
pub(crate) fn running_max(data: &[f64], half: usize) -> Vec<f64> {
    use std::collections::VecDeque;
    let n = data.len();
    let mut out = vec![0.0; n];
    if half == 0 {
        out.copy_from_slice(data);
        return out;
    }
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0usize;
    for (i, slot) in out.iter_mut().enumerate() {
        let hi = (i + half).min(n - 1);
        while next <= hi {
            while dq.back().is_some_and(|&j| data[j] <= data[next]) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        let lo = i.saturating_sub(half);
        while dq.front().is_some_and(|&j| j < lo) {
            dq.pop_front();
        }
        *slot = data[dq[0]];
    }
    out
}

#[inline]
pub(crate) fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_max_matches_brute_force() {
        let data: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        for half in [0, 1, 3, 17] {
            let fast = running_max(&data, half);
            for (i, &got) in fast.iter().enumerate() {
                let lo = i.saturating_sub(half);
                let hi = (i + half).min(data.len() - 1);
                let brute = data[lo..=hi].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(got, brute);
            }
        }
    }

    #[test]
    fn median_of_odd_set() {
        assert_eq!(quantile(&[5.0, 1.0, 3.0], 0.5), 3.0);
        assert_eq!(quantile(&[5.0, 1.0, 3.0], 0.0), 1.0);
        assert_eq!(quantile(&[5.0, 1.0, 3.0], 1.0), 5.0);
    }
}
