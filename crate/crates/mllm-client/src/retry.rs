use std::time::Duration;

use rand::Rng;

/// Exponential backoff with multiplicative jitter. Each delay is capped at
/// `cap`, so a full schedule waits at most `cap * max_retries`.
#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub base: Duration,
    pub factor: f64,
    /// Delays are scaled by a uniform factor in `[1 - jitter, 1 + jitter]`.
    pub jitter: f64,
    pub cap: Duration,
    pub max_retries: usize,
}

impl RetryPolicy {
    /// Base 1 s, factor 2, ±25 % jitter, capped at the request timeout.
    pub fn standard(timeout: Duration, max_retries: usize) -> Self {
        Self {
            base: Duration::from_secs(1),
            factor: 2.0,
            jitter: 0.25,
            cap: timeout,
            max_retries,
        }
    }

    /// Delay before retry number `retry` (0-based).
    pub fn delay(&self, retry: usize, rng: &mut impl Rng) -> Duration {
        let nominal = self.base.as_secs_f64() * self.factor.powi(retry.min(64) as i32);
        let scale = if self.jitter > 0.0 {
            rng.random_range(1.0 - self.jitter..=1.0 + self.jitter)
        } else {
            1.0
        };
        Duration::from_secs_f64((nominal * scale).max(0.0)).min(self.cap)
    }

    pub fn schedule(&self, rng: &mut impl Rng) -> Vec<Duration> {
        (0..self.max_retries).map(|i| self.delay(i, rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubles_without_jitter() {
        let p = RetryPolicy { jitter: 0.0, ..RetryPolicy::standard(Duration::from_secs(60), 4) };
        let mut rng = rand::rng();
        let s: Vec<u64> = p.schedule(&mut rng).iter().map(|d| d.as_secs()).collect();
        assert_eq!(s, [1, 2, 4, 8]);
    }

    #[test]
    fn envelope_holds() {
        let p = RetryPolicy::standard(Duration::from_secs(3), 8);
        let mut rng = rand::rng();
        for _ in 0..50 {
            let total: Duration = p.schedule(&mut rng).iter().sum();
            assert!(total <= Duration::from_secs(3) * 8);
        }
    }
}
