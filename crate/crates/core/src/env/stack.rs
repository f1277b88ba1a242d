//! Frame stacking and observation noise.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::EnvError;

/// The `n_r` most recent observation frames, oldest first. Frames that
/// precede the episode are zero-filled.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationStack {
    n_m: usize,
    frames: VecDeque<Vec<f64>>,
}

impl ObservationStack {
    pub fn zeros(n_m: usize, n_r: usize) -> Self {
        let frames = (0..n_r).map(|_| vec![0.0; n_m]).collect();
        Self { n_m, frames }
    }

    pub fn frame_len(&self) -> usize {
        self.n_m
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        self.frames.iter().map(|f| f.as_slice())
    }

    /// Flat input vector for the value network: frames concatenated oldest
    /// first, length `n_m * n_r`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_m * self.frames.len());
        for f in &self.frames {
            out.extend_from_slice(f);
        }
        out
    }
}

/// Evict the oldest frame and append `frame`; depth is preserved.
pub fn push_frame(stack: &ObservationStack, frame: Vec<f64>) -> Result<ObservationStack, EnvError> {
    if frame.len() != stack.n_m {
        return Err(EnvError::FrameLength {
            expected: stack.n_m,
            got: frame.len(),
        });
    }
    let mut next = stack.clone();
    next.frames.pop_front();
    next.frames.push_back(frame);
    Ok(next)
}

/// Multiplicative Gaussian measurement noise: x -> x * (1 + e),
/// e ~ N(0, sigma). Deterministic under a seeded generator.
pub fn add_observation_noise(frame: &[f64], sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if sigma <= 0.0 {
        return frame.to_vec();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated nonnegative");
    frame
        .iter()
        .map(|&x| x * (1.0 + normal.sample(rng)))
        .collect()
}

/// Uniform action index, used by the epsilon branch of action selection.
pub fn uniform_action(n: usize, rng: &mut ChaCha8Rng) -> usize {
    rng.gen_range(0..n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn push_is_fifo_with_eviction() {
        let stack = ObservationStack::zeros(2, 3);
        assert_eq!(stack.flatten(), vec![0.0; 6]);
        let s1 = push_frame(&stack, vec![1.0, 1.5]).unwrap();
        assert_eq!(s1.flatten(), vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.5]);
        let s2 = push_frame(&s1, vec![2.0, 2.5]).unwrap();
        let s3 = push_frame(&s2, vec![3.0, 3.5]).unwrap();
        // three distinct frames in order
        assert_eq!(s3.flatten(), vec![1.0, 1.5, 2.0, 2.5, 3.0, 3.5]);
        // a fourth push evicts the first
        let s4 = push_frame(&s3, vec![4.0, 4.5]).unwrap();
        assert_eq!(s4.flatten(), vec![2.0, 2.5, 3.0, 3.5, 4.0, 4.5]);
    }

    #[test]
    fn push_rejects_wrong_length() {
        let stack = ObservationStack::zeros(3, 2);
        assert!(matches!(
            push_frame(&stack, vec![1.0]),
            Err(EnvError::FrameLength {
                expected: 3,
                got: 1
            })
        ));
    }

    #[test]
    fn zero_sigma_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let frame = vec![0.5, -1.0, 2.0];
        assert_eq!(add_observation_noise(&frame, 0.0, &mut rng), frame);
    }

    #[test]
    fn noise_statistics_match_request() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let v = add_observation_noise(&[1.0], 0.01, &mut rng)[0];
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let std = (sumsq / n as f64 - mean * mean).sqrt();
        assert!((mean - 1.0).abs() < 0.001, "mean {mean}");
        assert!((std - 0.01).abs() < 0.001, "std {std}");
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let frame = vec![1.0, 2.0, 3.0];
        let a = add_observation_noise(&frame, 0.05, &mut ChaCha8Rng::seed_from_u64(42));
        let b = add_observation_noise(&frame, 0.05, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }
}
