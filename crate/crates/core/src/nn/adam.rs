/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment estimates for one flat parameter buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], cfg: &AdamConfig) {
        assert_eq!(params.len(), self.m.len(), "parameter length changed");
        assert_eq!(grads.len(), self.m.len(), "gradient length mismatch");
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for (((w, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *w -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut w = vec![0.3, -1.2];
        let mut st = AdamState::new(2);
        for _ in 0..3 {
            st.step(&mut w, &[0.0, 0.0], &AdamConfig::with_lr(0.1));
        }
        assert_eq!(w, vec![0.3, -1.2]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut w = vec![0.0];
        let mut st = AdamState::new(1);
        st.step(&mut w, &[1.0], &AdamConfig::with_lr(0.1));
        // m_hat = 1, v_hat = 1
        assert!((w[0] + 0.1 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn two_steps_match_scripted_trace() {
        let cfg = AdamConfig::with_lr(0.1);
        let mut w = vec![0.0];
        let mut st = AdamState::new(1);
        st.step(&mut w, &[1.0], &cfg);
        st.step(&mut w, &[1.0], &cfg);
        // m = 0.19, v = 0.001999; corrections 0.19, 0.001999 -> m_hat = v_hat = 1
        let m2: f64 = 0.9 * 0.1 + 0.1;
        let v2: f64 = 0.999 * 0.001 + 0.001;
        let step2 = 0.1 * (m2 / 0.19) / ((v2 / (1.0 - 0.999f64.powi(2))).sqrt() + 1e-8);
        let expected = -0.1 / (1.0 + 1e-8) - step2;
        assert!((w[0] - expected).abs() < 1e-15);
        assert!((w[0] + 0.2).abs() < 1e-6);
        assert_eq!(st.steps(), 2);
    }
}
