//! Time source used for solver budgets.

/// Monotone seconds since some fixed origin.
pub trait Clock {
    fn now(&self) -> f64;
}

/// A clock that never advances. Time limits never fire under it.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn now(&self) -> f64 {
        0.0
    }
}

impl<C: Clock + ?Sized> Clock for &C {
    fn now(&self) -> f64 {
        (**self).now()
    }
}

#[cfg(feature = "std")]
pub use std_clock::StdClock;

#[cfg(feature = "std")]
mod std_clock {
    use std::time::Instant;

    /// Wall clock backed by [`Instant`].
    #[derive(Debug, Clone, Copy)]
    pub struct StdClock {
        origin: Instant,
    }

    impl Default for StdClock {
        fn default() -> Self {
            Self {
                origin: Instant::now(),
            }
        }
    }

    impl super::Clock for StdClock {
        fn now(&self) -> f64 {
            self.origin.elapsed().as_secs_f64()
        }
    }
}
