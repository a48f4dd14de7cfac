/// Learning-rate schedule shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleShape {
    /// Linear ramp 0 -> peak over the warmup, cosine decay peak -> 0 after.
    WarmupCosine,
    Constant,
}

#[derive(Debug, Clone)]
pub struct LrSchedule {
    pub peak_lr: f64,
    pub warmup_steps: u64,
    pub total_steps: u64,
    pub shape: ScheduleShape,
}

impl LrSchedule {
    pub fn warmup_cosine(peak_lr: f64, warmup_steps: u64, total_steps: u64) -> Self {
        assert!(warmup_steps <= total_steps);
        LrSchedule {
            peak_lr,
            warmup_steps,
            total_steps,
            shape: ScheduleShape::WarmupCosine,
        }
    }

    pub fn constant(lr: f64) -> Self {
        LrSchedule {
            peak_lr: lr,
            warmup_steps: 0,
            total_steps: u64::MAX,
            shape: ScheduleShape::Constant,
        }
    }
}

/// Learning rate at `step`. Steps beyond `total_steps` clamp to the final
/// value.
pub fn lr_at(schedule: &LrSchedule, step: u64) -> f64 {
    match schedule.shape {
        ScheduleShape::Constant => schedule.peak_lr,
        ScheduleShape::WarmupCosine => {
            let step = step.min(schedule.total_steps);
            if step < schedule.warmup_steps {
                schedule.peak_lr * step as f64 / schedule.warmup_steps as f64
            } else if schedule.total_steps == schedule.warmup_steps {
                schedule.peak_lr
            } else {
                let span = (schedule.total_steps - schedule.warmup_steps) as f64;
                let frac = (step - schedule.warmup_steps) as f64 / span;
                schedule.peak_lr * 0.5 * (1.0 + (std::f64::consts::PI * frac).cos())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched() -> LrSchedule {
        LrSchedule::warmup_cosine(1e-4, 64, 640)
    }

    #[test]
    fn ramp_endpoints() {
        let s = sched();
        assert_eq!(lr_at(&s, 0), 0.0);
        assert!((lr_at(&s, 64) - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn cosine_midpoint_is_half_peak() {
        let s = sched();
        let mid = 64 + (640 - 64) / 2;
        assert!((lr_at(&s, mid) - 0.5e-4).abs() < 1e-12);
    }

    #[test]
    fn clamps_past_the_end() {
        let s = sched();
        assert!(lr_at(&s, 640).abs() < 1e-18);
        assert_eq!(lr_at(&s, 10_000), lr_at(&s, 640));
    }

    #[test]
    fn continuous_at_warmup_and_nonnegative() {
        let s = sched();
        let before = lr_at(&s, 63);
        let at = lr_at(&s, 64);
        assert!((at - before) < 1e-4 / 64.0 + 1e-12);
        for step in 0..=700 {
            assert!(lr_at(&s, step) >= 0.0);
        }
    }
}
