use super::{check_pair, AnalyzerError, Warning};
use crate::problem::{OutputVector, SampleMatrix};
use crate::result::SensitivityResult;
use crate::samplers::Layout;

#[derive(Debug, Clone, PartialEq)]
pub struct MorrisIndices {
    pub mu: Vec<f64>,
    pub mu_star: Vec<f64>,
    /// Population standard deviation of the elementary effects.
    pub sigma: Vec<f64>,
    pub warning: Option<Warning>,
}

impl MorrisIndices {
    pub fn to_result(&self, names: &[String]) -> SensitivityResult {
        SensitivityResult::new("morris", names)
            .with_index("mu", self.mu.clone(), None)
            .with_index("mu_star", self.mu_star.clone(), None)
            .with_index("sigma", self.sigma.clone(), None)
            .with_warning(self.warning)
    }
}

/// Elementary effects `(y_next - y_prev) / (sign * delta)` in normalized
/// units, one per factor and trajectory, summarized by their mean, mean
/// absolute value and standard deviation.
pub fn analyze_morris(
    samples: &SampleMatrix,
    outputs: &OutputVector,
) -> Result<MorrisIndices, AnalyzerError> {
    check_pair(samples, outputs)?;
    let Layout::Morris(layout) = samples.layout() else {
        return Err(AnalyzerError::WrongLayout {
            analyzer: "Morris",
            expected: "Morris trajectory",
            got: samples.kind(),
        });
    };
    let r = layout.trajectories;
    if r < 2 {
        return Err(AnalyzerError::TooFewTrajectories(r));
    }
    let k = layout.num_factors;
    let y = &outputs.values;
    let mut effects = vec![Vec::with_capacity(r); k];
    for t in 0..r {
        let start = layout.start(t);
        for (s, step) in layout.trajectory_steps(t).iter().enumerate() {
            let ee = (y[start + s + 1] - y[start + s]) / (step.sign * layout.delta);
            effects[step.factor].push(ee);
        }
    }
    let mut mu = Vec::with_capacity(k);
    let mut mu_star = Vec::with_capacity(k);
    let mut sigma = Vec::with_capacity(k);
    for ee in &effects {
        let m = crate::stats::mean(ee);
        mu.push(m);
        mu_star.push(ee.iter().map(|e| e.abs()).sum::<f64>() / ee.len() as f64);
        sigma.push(crate::stats::variance(ee).sqrt());
    }
    let constant = y.iter().all(|&v| v == y[0]);
    Ok(MorrisIndices {
        mu,
        mu_star,
        sigma,
        warning: constant.then_some(Warning::ConstantOutput),
    })
}
