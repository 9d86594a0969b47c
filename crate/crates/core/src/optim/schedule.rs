//! Learning-rate multipliers over a run of `T` steps.
//!
//! With `W = round(warmup_ratio·T)` warmup steps, step `t < W` uses
//! `(t+1)/W`; afterwards the shape decides. Every decaying shape reaches 0
//! exactly at `t = T`.

use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LrSchedule {
    Constant,
    /// Warmup, then `½(1 + cos(π·progress))`.
    Cosine { warmup_ratio: f64 },
    /// Warmup, then linear decay to 0.
    LinearWarmup { warmup_ratio: f64 },
    /// Flat for the first `hold_ratio·T` steps, then linear decay to 0.
    ConstantThenLinear { hold_ratio: f64 },
}

impl LrSchedule {
    pub fn validate(&self) -> Result<(), String> {
        let ratio = match *self {
            LrSchedule::Constant => return Ok(()),
            LrSchedule::Cosine { warmup_ratio } | LrSchedule::LinearWarmup { warmup_ratio } => warmup_ratio,
            LrSchedule::ConstantThenLinear { hold_ratio } => hold_ratio,
        };
        if (0.0..=1.0).contains(&ratio) {
            Ok(())
        } else {
            Err(format!("schedule ratio must lie in [0, 1], got {ratio}"))
        }
    }

    /// Multiplier of the peak learning rate at step `t` of `total`.
    pub fn factor(&self, t: usize, total: usize) -> f64 {
        let boundary = |ratio: f64| ((ratio * total as f64).round() as usize).min(total);
        match *self {
            LrSchedule::Constant => 1.0,
            LrSchedule::Cosine { warmup_ratio } => {
                let w = boundary(warmup_ratio);
                if t < w {
                    (t + 1) as f64 / w as f64
                } else {
                    let progress = progress(t, w, total);
                    0.5 * (1.0 + (PI * progress).cos())
                }
            }
            LrSchedule::LinearWarmup { warmup_ratio } => {
                let w = boundary(warmup_ratio);
                if t < w {
                    (t + 1) as f64 / w as f64
                } else {
                    1.0 - progress(t, w, total)
                }
            }
            LrSchedule::ConstantThenLinear { hold_ratio } => {
                let h = boundary(hold_ratio);
                if t < h {
                    1.0
                } else {
                    1.0 - progress(t, h, total)
                }
            }
        }
    }
}

/// Fraction of the decay phase `[start, total]` completed at `t`.
fn progress(t: usize, start: usize, total: usize) -> f64 {
    if total <= start {
        return 1.0;
    }
    (t.min(total) - start) as f64 / (total - start) as f64
}
