use crate::error::{Error, Result};
use crate::mlp::ParamSet;

/// Prior over the flattened parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorSpec {
    /// Improper flat prior: log density is constant, gradient zero.
    Uniform,
    /// Isotropic zero-mean Gaussian with standard deviation sigma.
    Gaussian { sigma: f64 },
}

impl PriorSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if sigma <= 0.0 {
            return Err(Error::InvalidSigma(sigma));
        }
        Ok(PriorSpec::Gaussian { sigma })
    }
}

/// Gradient of the log prior density at `params`, shaped like `params`.
/// Uniform -> zeros; Gaussian(sigma) -> -theta / sigma^2 per component.
pub fn prior_logdensity_grad(prior: PriorSpec, params: &ParamSet) -> Vec<f64> {
    let flat = params.flatten();
    match prior {
        PriorSpec::Uniform => vec![0.0; flat.len()],
        PriorSpec::Gaussian { sigma } => {
            let inv_var = 1.0 / (sigma * sigma);
            flat.iter().map(|&v| -v * inv_var).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{Activation, MlpArch};

    fn arch() -> MlpArch {
        MlpArch::new(vec![2, 3], Activation::Identity).unwrap()
    }

    #[test]
    fn uniform_is_zero() {
        let params = ParamSet::init(&arch(), 3);
        assert!(prior_logdensity_grad(PriorSpec::Uniform, &params).iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gaussian_at_origin_is_zero() {
        let params = ParamSet::zeros(&arch());
        let prior = PriorSpec::gaussian(1.0).unwrap();
        assert!(prior_logdensity_grad(prior, &params).iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gaussian_matches_hand_derivative() {
        // d/d theta of -theta^2/(2 sigma^2) at theta=8, sigma=2 is -2
        let mut params = ParamSet::zeros(&arch());
        for (_, t) in params.tensors_mut() {
            t.data_mut().fill(8.0);
        }
        let prior = PriorSpec::gaussian(2.0).unwrap();
        assert!(prior_logdensity_grad(prior, &params).iter().all(|&g| g == -2.0));
    }

    #[test]
    fn gaussian_grad_is_linear_in_theta() {
        let params = ParamSet::init(&arch(), 9);
        let prior = PriorSpec::gaussian(0.7).unwrap();
        let g1 = prior_logdensity_grad(prior, &params);
        let scaled = params.unflatten(&params.flatten().iter().map(|v| 3.0 * v).collect::<Vec<_>>()).unwrap();
        let g3 = prior_logdensity_grad(prior, &scaled);
        for (a, b) in g1.iter().zip(g3.iter()) {
            assert!((3.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn nonpositive_sigma_rejected() {
        assert!(PriorSpec::gaussian(0.0).is_err());
        assert!(PriorSpec::gaussian(-1.0).is_err());
    }
}
