use std::time::Duration;

use super::ClientResult;
#[cfg(test)]
use super::ClientError;

/// Exponential backoff shared by every client.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_millis(250),
            max_delay: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        RetryPolicy {
            max_retries: 0,
            ..Self::default()
        }
    }

    pub fn immediate(max_retries: u32) -> Self {
        RetryPolicy {
            max_retries,
            base_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
        }
    }

    pub fn delay_for(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }

    /// Runs `op` until it succeeds, fails permanently, or retries run out.
    pub fn run<T>(&self, mut op: impl FnMut(u32) -> ClientResult<T>) -> ClientResult<T> {
        let mut attempt = 0;
        loop {
            match op(attempt) {
                Ok(v) => return Ok(v),
                Err(e) if e.is_retryable() && attempt < self.max_retries => {
                    log::debug!("attempt {attempt} failed: {e}; retrying");
                    let d = self.delay_for(attempt);
                    if !d.is_zero() {
                        std::thread::sleep(d);
                    }
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retries_transient_then_succeeds() {
        let p = RetryPolicy::immediate(3);
        let mut calls = 0;
        let r = p.run(|_| {
            calls += 1;
            if calls < 3 {
                Err(ClientError::Timeout)
            } else {
                Ok(7)
            }
        });
        assert_eq!(r, Ok(7));
        assert_eq!(calls, 3);
    }

    #[test]
    fn gives_up_after_max_retries() {
        let p = RetryPolicy::immediate(2);
        let mut calls = 0;
        let r: ClientResult<()> = p.run(|_| {
            calls += 1;
            Err(ClientError::Transport("down".into()))
        });
        assert!(r.is_err());
        assert_eq!(calls, 3);
    }

    #[test]
    fn permanent_errors_not_retried() {
        let p = RetryPolicy::immediate(5);
        let mut calls = 0;
        let _: ClientResult<()> = p.run(|_| {
            calls += 1;
            Err(ClientError::BadResponse("nope".into()))
        });
        assert_eq!(calls, 1);
    }

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy::default();
        assert_eq!(p.delay_for(0), Duration::from_millis(250));
        assert_eq!(p.delay_for(2), Duration::from_millis(1000));
        assert_eq!(p.delay_for(10), Duration::from_secs(8));
        assert_eq!(p.delay_for(40), Duration::from_secs(8));
    }
}
