//! Workers computing stochastic gradients back to back.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::SimError;

#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    /// Completed gradients per worker, in the order of `h`.
    pub counts: Vec<u64>,
    pub elapsed: f64,
}

#[derive(Debug, PartialEq)]
struct Next(f64, usize);

impl Eq for Next {}

impl PartialOrd for Next {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Next {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Runs workers with compute times `h` from time 0 until `stop` holds on the
/// completed counts, checking after every completion. Simultaneous
/// completions are processed by worker index; infinite `h` never completes.
pub fn run_gradient_computation(
    h: &[f64],
    mut stop: impl FnMut(&[u64]) -> bool,
    max_time: f64,
) -> Result<Collection, SimError> {
    let mut counts = vec![0u64; h.len()];
    if stop(&counts) {
        return Ok(Collection { counts, elapsed: 0.0 });
    }
    let mut heap: BinaryHeap<Reverse<Next>> =
        h.iter().enumerate().filter(|(_, x)| x.is_finite()).map(|(i, &x)| Reverse(Next(x, i))).collect();
    while let Some(Reverse(Next(t, i))) = heap.pop() {
        if t > max_time {
            break;
        }
        counts[i] += 1;
        if stop(&counts) {
            return Ok(Collection { counts, elapsed: t });
        }
        // count * h avoids accumulating rounding error
        heap.push(Reverse(Next((counts[i] + 1) as f64 * h[i], i)));
    }
    Err(SimError::Timeout { max_time })
}

/// Collects `target` gradients in total.
pub fn collect_batch(h: &[f64], target: u64, max_time: f64) -> Result<Collection, SimError> {
    run_gradient_computation(h, |c| c.iter().sum::<u64>() >= target, max_time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::{leon_stop_rule, ProblemParams};

    #[test]
    fn parallel_and_sequential() {
        let c = collect_batch(&[1.0, 1.0], 2, 100.0).unwrap();
        assert_eq!((c.counts, c.elapsed), (vec![1, 1], 1.0));
        let c = collect_batch(&[1.0], 5, 100.0).unwrap();
        assert_eq!((c.counts, c.elapsed), (vec![5], 5.0));
    }

    #[test]
    fn leon_rule_stops_at_two_each() {
        let p = ProblemParams::new(1.0, 4.0, 1.0, 1.0, 1.0).unwrap();
        let c = run_gradient_computation(&[1.0, 1.0], |b| leon_stop_rule(b, &p), 100.0).unwrap();
        assert_eq!((c.counts, c.elapsed), (vec![2, 2], 2.0));
    }

    #[test]
    fn unsatisfiable_times_out() {
        let err = run_gradient_computation(&[1.0], |_| false, 10.0).unwrap_err();
        assert_eq!(err, SimError::Timeout { max_time: 10.0 });
        assert!(collect_batch(&[f64::INFINITY], 1, 10.0).is_err());
    }

    #[test]
    fn zero_target_is_immediate() {
        assert_eq!(collect_batch(&[3.0], 0, 1.0).unwrap().elapsed, 0.0);
    }
}
