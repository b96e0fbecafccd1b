use crate::error::{Error, Result};
use crate::mlp::ParamSet;

/// Plain SGD configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sgd {
    pub lr: f64,
}

/// theta <- theta - lr * grad. Errors if any gradient buffer is missing.
pub fn sgd_step(params: &mut ParamSet, lr: f64) -> Result<()> {
    // validate first so a partial update never happens
    for (name, t) in params.tensors() {
        if t.grad().is_none() {
            return Err(Error::MissingGrad(name.clone()));
        }
    }
    for (_, t) in params.tensors_mut() {
        let grad = t.grad().unwrap().to_vec();
        for (v, g) in t.data_mut().iter_mut().zip(grad.iter()) {
            *v -= lr * g;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{Activation, MlpArch};

    #[test]
    fn zero_lr_leaves_params_unchanged() {
        let arch = MlpArch::new(vec![2, 2], Activation::Identity).unwrap();
        let mut params = ParamSet::init(&arch, 1);
        let before = params.flatten();
        params.zero_grads();
        for (_, t) in params.tensors_mut() {
            t.grad_mut().unwrap().fill(3.0);
        }
        sgd_step(&mut params, 0.0).unwrap();
        assert_eq!(params.flatten(), before);
    }

    #[test]
    fn analytic_single_step() {
        // theta=1, grad=2, lr=0.5 -> theta=0
        let arch = MlpArch::new(vec![1, 1], Activation::Identity).unwrap();
        let mut params = ParamSet::zeros(&arch);
        for (_, t) in params.tensors_mut() {
            t.data_mut().fill(1.0);
            t.zero_grad();
            t.grad_mut().unwrap().fill(2.0);
        }
        sgd_step(&mut params, 0.5).unwrap();
        assert!(params.flatten().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn three_steps_match_hand_unrolled() {
        let arch = MlpArch::new(vec![1, 1], Activation::Identity).unwrap();
        let mut params = ParamSet::zeros(&arch);
        for (_, t) in params.tensors_mut() {
            t.data_mut().fill(1.0);
        }
        let grads = [0.4, -0.2, 1.5];
        let lr = 0.1;
        let mut expect = 1.0;
        for g in grads {
            for (_, t) in params.tensors_mut() {
                t.zero_grad();
                t.grad_mut().unwrap().fill(g);
            }
            sgd_step(&mut params, lr).unwrap();
            expect -= lr * g;
        }
        for v in params.flatten() {
            assert!((v - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn missing_grads_error() {
        let arch = MlpArch::new(vec![1, 1], Activation::Identity).unwrap();
        let mut params = ParamSet::zeros(&arch);
        assert!(matches!(sgd_step(&mut params, 0.1), Err(Error::MissingGrad(_))));
    }
}
