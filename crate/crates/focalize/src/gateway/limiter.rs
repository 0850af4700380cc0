use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

/// Token bucket shared by the annotation workers.
#[derive(Debug)]
pub struct TokenBucket {
    rate: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    /// `rate` tokens per second, holding at most `capacity` (at least 1).
    pub fn new(rate: f64, capacity: f64) -> Self {
        let capacity = capacity.max(1.0);
        Self {
            rate,
            capacity,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    /// Block until a token is available and take it.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().expect("limiter lock");
                let now = Instant::now();
                let (tokens, last) = *state;
                let tokens = (tokens + now.duration_since(last).as_secs_f64() * self.rate)
                    .min(self.capacity);
                if tokens >= 1.0 {
                    *state = (tokens - 1.0, now);
                    return;
                }
                *state = (tokens, now);
                Duration::from_secs_f64((1.0 - tokens) / self.rate)
            };
            thread::sleep(wait);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paces_after_burst() {
        let b = TokenBucket::new(50.0, 2.0);
        let start = Instant::now();
        for _ in 0..6 {
            b.acquire();
        }
        // 2 burst tokens, then 4 at 20 ms each.
        assert!(start.elapsed() >= Duration::from_millis(70));
    }
}
