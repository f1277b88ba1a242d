//! Parameter update rules.

use serde::{Deserialize, Serialize};

use super::mlp::{MlpGradients, MlpParameters};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    /// theta <- theta - eta * grad
    PlainSgd,
    /// First/second-moment adaptive rule with bias correction.
    AdaptiveMoment,
}

impl OptimizerKind {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "plain-sgd" | "sgd" => Some(Self::PlainSgd),
            "adaptive-moment" | "adam" => Some(Self::AdaptiveMoment),
            _ => None,
        }
    }
}

/// Optimizer state. Deterministic: the update is a pure function of the
/// state, parameters, and gradients.
#[derive(Debug, Clone)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step_count: usize,
    m: Option<MlpGradients>,
    v: Option<MlpGradients>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Self {
        Self {
            kind,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step_count: 0,
            m: None,
            v: None,
        }
    }
}

/// Apply one update and return the new parameters.
pub fn optimizer_step(
    params: &MlpParameters,
    gradients: &MlpGradients,
    opt: &mut Optimizer,
) -> MlpParameters {
    let mut next = params.clone();
    match opt.kind {
        OptimizerKind::PlainSgd => {
            let eta = opt.learning_rate;
            next.zip_apply(gradients, |p, g| *p -= eta * g);
        }
        OptimizerKind::AdaptiveMoment => {
            opt.step_count += 1;
            let (n_i, h1, h2, n_o) = params.dims();
            let mut m = opt
                .m
                .take()
                .unwrap_or_else(|| MlpParameters::zeros(n_i, h1, h2, n_o));
            let mut v = opt
                .v
                .take()
                .unwrap_or_else(|| MlpParameters::zeros(n_i, h1, h2, n_o));
            let b1 = opt.beta1;
            let b2 = opt.beta2;
            m.zip_apply(gradients, |m, g| *m = b1 * *m + (1.0 - b1) * g);
            v.zip_apply(gradients, |v, g| *v = b2 * *v + (1.0 - b2) * g * g);
            let bc1 = 1.0 - b1.powi(opt.step_count as i32);
            let bc2 = 1.0 - b2.powi(opt.step_count as i32);
            let eta = opt.learning_rate;
            let eps = opt.epsilon;
            // theta -= eta * m_hat / (sqrt(v_hat) + eps)
            let mut update = m.clone();
            update.zip_apply(&v, |u, vv| {
                let m_hat = *u / bc1;
                let v_hat = vv / bc2;
                *u = eta * m_hat / (v_hat.sqrt() + eps);
            });
            next.zip_apply(&update, |p, u| *p -= u);
            opt.m = Some(m);
            opt.v = Some(v);
        }
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_identity() {
        let params = {
            let mut p = MlpParameters::zeros(1, 1, 1, 1);
            p.w1[(0, 0)] = 0.3;
            p
        };
        let grads = MlpParameters::zeros(1, 1, 1, 1);
        let mut opt = Optimizer::new(OptimizerKind::PlainSgd, 0.1);
        let next = optimizer_step(&params, &grads, &mut opt);
        assert_eq!(next, params);
    }

    #[test]
    fn sgd_single_weight_arithmetic() {
        // w = 1, g = 2, eta = 0.1 -> w' = 0.8
        let mut params = MlpParameters::zeros(1, 1, 1, 1);
        params.w1[(0, 0)] = 1.0;
        let mut grads = MlpParameters::zeros(1, 1, 1, 1);
        grads.w1[(0, 0)] = 2.0;
        let mut opt = Optimizer::new(OptimizerKind::PlainSgd, 0.1);
        let next = optimizer_step(&params, &grads, &mut opt);
        assert!((next.w1[(0, 0)] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn adaptive_moment_descends_a_quadratic() {
        // minimize f(w) = (w - 3)^2 through the w1 slot
        let mut params = MlpParameters::zeros(1, 1, 1, 1);
        params.w1[(0, 0)] = -2.0;
        let mut opt = Optimizer::new(OptimizerKind::AdaptiveMoment, 0.05);
        let mut last = (params.w1[(0, 0)] - 3.0_f64).powi(2);
        for _ in 0..200 {
            let mut grads = MlpParameters::zeros(1, 1, 1, 1);
            grads.w1[(0, 0)] = 2.0 * (params.w1[(0, 0)] - 3.0);
            params = optimizer_step(&params, &grads, &mut opt);
            let loss = (params.w1[(0, 0)] - 3.0_f64).powi(2);
            assert!(loss <= last + 1e-12, "loss rose: {last} -> {loss}");
            last = loss;
        }
        assert!(last < 1.0, "final loss {last}");
    }

    #[test]
    fn parses_both_names() {
        assert_eq!(OptimizerKind::parse("plain-sgd"), Some(OptimizerKind::PlainSgd));
        assert_eq!(
            OptimizerKind::parse("adaptive-moment"),
            Some(OptimizerKind::AdaptiveMoment)
        );
        assert_eq!(OptimizerKind::parse("rmsprop"), None);
    }
}
