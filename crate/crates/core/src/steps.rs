/// Uniform time stepping to `t_final`, with a shortened last step when `dt`
/// does not divide `t_final`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Schedule {
    pub dt: f64,
    pub t_final: f64,
    pub steps: usize,
}

impl Schedule {
    pub fn new(dt: f64, t_final: f64) -> Self {
        let ratio = t_final / dt;
        let nearest = ratio.round();
        // Accept an exact divisor up to a few ulps of the ratio.
        let steps = if (ratio - nearest).abs() <= 4.0 * f64::EPSILON * ratio.max(1.0) {
            nearest as usize
        } else {
            ratio.ceil() as usize
        };
        Self {
            dt,
            t_final,
            steps: steps.max(1),
        }
    }

    /// Start time of step `i`, computed as `i * dt` rather than accumulated.
    pub fn time(&self, i: usize) -> f64 {
        if i >= self.steps {
            self.t_final
        } else {
            i as f64 * self.dt
        }
    }

    pub fn step_size(&self, i: usize) -> f64 {
        self.time(i + 1) - self.time(i)
    }

    pub fn is_uniform_step(&self, i: usize) -> bool {
        i + 1 < self.steps || (self.t_final - self.time(i) - self.dt).abs() <= 1e-12 * self.dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_divisor() {
        let s = Schedule::new(0.4 / 256.0, 0.4);
        assert_eq!(s.steps, 256);
        assert_eq!(s.time(256), 0.4);
        assert!((s.time(128) - 0.2).abs() < 1e-15);
        assert!(s.is_uniform_step(255));
    }

    #[test]
    fn partial_last_step() {
        let s = Schedule::new(0.3, 1.0);
        assert_eq!(s.steps, 4);
        assert!((s.step_size(3) - 0.1).abs() < 1e-12);
        assert!(!s.is_uniform_step(3));
    }
}
