//! Process-wide resource limits and execution mode.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

/// Default cap on the number of lattice points per filter component.
pub const DEFAULT_SUPPORT_CAP: usize = 1 << 26;

static CAP_OVERRIDE: AtomicUsize = AtomicUsize::new(0);
static CAP_ENV: OnceLock<usize> = OnceLock::new();

/// Current support cap. `VECSUB_SUPPORT_CAP` overrides the default.
pub fn support_cap() -> usize {
    let o = CAP_OVERRIDE.load(Ordering::Relaxed);
    if o != 0 {
        return o;
    }
    *CAP_ENV.get_or_init(|| {
        std::env::var("VECSUB_SUPPORT_CAP")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .filter(|&v: &usize| v > 0)
            .unwrap_or(DEFAULT_SUPPORT_CAP)
    })
}

/// Override the cap for the rest of the process; 0 restores the env/default value.
pub fn set_support_cap(cap: usize) {
    CAP_OVERRIDE.store(cap, Ordering::Relaxed);
}

/// Kernel execution strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Data-parallel over output slabs; equals `Sequential` without the `parallel` feature.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}
