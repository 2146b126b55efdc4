use super::DenseNet;
use crate::error::Result;

/// A scalar function of a network's output vector together with its gradient.
pub trait ScalarLoss {
    fn value(&self, output: &[f64]) -> f64;
    fn grad(&self, output: &[f64]) -> Vec<f64>;
}

/// Common losses used by tests and the gradient checker.
#[derive(Debug, Clone, PartialEq)]
pub enum LossDescriptor {
    /// 0.5 * ||output - target||^2
    SquaredError { target: Vec<f64> },
    /// -ln(output[index]); meant for softmax outputs.
    NegLogLikelihood { index: usize },
    /// Weighted sum of outputs.
    Linear { weights: Vec<f64> },
}

impl ScalarLoss for LossDescriptor {
    fn value(&self, output: &[f64]) -> f64 {
        match self {
            LossDescriptor::SquaredError { target } => {
                0.5 * output
                    .iter()
                    .zip(target)
                    .map(|(o, t)| (o - t) * (o - t))
                    .sum::<f64>()
            }
            LossDescriptor::NegLogLikelihood { index } => -output[*index].ln(),
            LossDescriptor::Linear { weights } => {
                output.iter().zip(weights).map(|(o, w)| o * w).sum()
            }
        }
    }

    fn grad(&self, output: &[f64]) -> Vec<f64> {
        match self {
            LossDescriptor::SquaredError { target } => {
                output.iter().zip(target).map(|(o, t)| o - t).collect()
            }
            LossDescriptor::NegLogLikelihood { index } => {
                let mut g = vec![0.0; output.len()];
                g[*index] = -1.0 / output[*index];
                g
            }
            LossDescriptor::Linear { weights } => weights.clone(),
        }
    }
}

const FD_STEP: f64 = 1e-5;
const OUTPUT_STEP: f64 = 1e-6;

fn relative(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-8)
}

/// Max relative error `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`
/// between analytic gradients and central finite differences.
///
/// Each parameter is perturbed by 1e-5 and the resulting change in the
/// network output is contracted with the loss gradient at the midpoint
/// output. This has the same truncation order as differencing the loss
/// itself but avoids cancellation in the loss value, which otherwise
/// swamps gradients near 1e-8. The loss gradient is checked separately
/// against differences of the loss value.
pub fn gradcheck(net: &DenseNet, input: &[f64], loss: &dyn ScalarLoss) -> Result<f64> {
    let output = net.forward(input)?;
    let out_grad = loss.grad(&output);
    let analytic = net.backward(input, &out_grad)?;

    let mut worst: f64 = 0.0;
    let mut shifted = output.clone();
    for (k, g) in out_grad.iter().enumerate() {
        shifted[k] = output[k] + OUTPUT_STEP;
        let plus = loss.value(&shifted);
        shifted[k] = output[k] - OUTPUT_STEP;
        let minus = loss.value(&shifted);
        shifted[k] = output[k];
        worst = worst.max(relative(*g, (plus - minus) / (2.0 * OUTPUT_STEP)));
    }

    let mut probe = net.clone();
    for (i, a) in analytic.values().enumerate() {
        let original = *probe.param_mut(i);
        *probe.param_mut(i) = original + FD_STEP;
        let plus = probe.forward(input)?;
        *probe.param_mut(i) = original - FD_STEP;
        let minus = probe.forward(input)?;
        *probe.param_mut(i) = original;

        let mid: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| 0.5 * (p + m)).collect();
        let numeric = loss
            .grad(&mid)
            .iter()
            .zip(plus.iter().zip(&minus))
            .map(|(g, (p, m))| g * (p - m))
            .sum::<f64>()
            / (2.0 * FD_STEP);
        worst = worst.max(relative(a, numeric));
    }
    Ok(worst)
}
