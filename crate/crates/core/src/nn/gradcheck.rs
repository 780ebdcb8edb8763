//! Central finite-difference gradient checking for [`Mlp`] in 64-bit precision.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mlp::Mlp;
use crate::error::{Error, Result};

pub const DEFAULT_STEP: f64 = 1e-5;
const DENOM_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Maximum relative error per parameter tensor, in network order.
    pub per_tensor: Vec<(String, f64)>,
    pub max_rel_error: f64,
}

impl GradCheckReport {
    pub fn worst(&self) -> Option<&(String, f64)> {
        self.per_tensor.iter().max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(DENOM_FLOOR)
}

/// Compares backprop gradients of `L = Σ out ⊙ R` (fixed random `R`) with
/// central differences. Errors name the first tensor above `tolerance`.
pub fn grad_check(net: &mut Mlp<f64>, input: &Array2<f64>, tolerance: f64) -> Result<GradCheckReport> {
    let report = grad_check_report(net, input, DEFAULT_STEP)?;
    if let Some((name, err)) = report.per_tensor.iter().find(|(_, e)| *e >= tolerance) {
        return Err(Error::Numeric(format!(
            "gradient check failed in {name}: relative error {err:.3e} >= {tolerance:.1e}"
        )));
    }
    Ok(report)
}

pub fn grad_check_report(net: &mut Mlp<f64>, input: &Array2<f64>, h: f64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let upstream = Array2::from_shape_fn((input.nrows(), net.output_dim()), |_| rng.random_range(-1.0..1.0));
    let loss = |net: &Mlp<f64>| -> Result<f64> { Ok((&net.predict(input)? * &upstream).sum()) };

    net.zero_grad();
    net.forward(input)?;
    net.backward(&upstream)?;

    let names: Vec<String> = net.named_params().into_iter().map(|(n, _)| n).collect();
    let analytic: Vec<Array2<f64>> = net.named_params().iter().map(|(_, p)| p.grads.clone()).collect();
    let mut per_tensor = Vec::with_capacity(names.len());
    for (t, name) in names.into_iter().enumerate() {
        let len = analytic[t].len();
        let mut worst = 0.0f64;
        for k in 0..len {
            let original = net.params_mut()[t].values.as_slice().expect("contiguous")[k];
            net.params_mut()[t].values.as_slice_mut().expect("contiguous")[k] = original + h;
            let plus = loss(net)?;
            net.params_mut()[t].values.as_slice_mut().expect("contiguous")[k] = original - h;
            let minus = loss(net)?;
            net.params_mut()[t].values.as_slice_mut().expect("contiguous")[k] = original;
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[t].as_slice().expect("contiguous")[k];
            worst = worst.max(relative_error(a, numeric));
        }
        per_tensor.push((name, worst));
    }
    net.zero_grad();
    let max_rel_error = per_tensor.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    Ok(GradCheckReport {
        per_tensor,
        max_rel_error,
    })
}
