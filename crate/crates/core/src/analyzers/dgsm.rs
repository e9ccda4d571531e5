use super::{check_pair, AnalyzerError, Warning};
use crate::problem::{OutputVector, SampleMatrix};
use crate::result::SensitivityResult;
use crate::samplers::Layout;

#[derive(Debug, Clone, PartialEq)]
pub struct DgsmIndices {
    pub v: Vec<f64>,
    pub warning: Option<Warning>,
}

impl DgsmIndices {
    pub fn to_result(&self, names: &[String]) -> SensitivityResult {
        SensitivityResult::new("dgsm", names)
            .with_index("v", self.v.clone(), None)
            .with_warning(self.warning)
    }
}

/// Mean squared finite-difference derivative per factor, with steps measured
/// on normalized coordinates.
pub fn analyze_dgsm(
    samples: &SampleMatrix,
    outputs: &OutputVector,
) -> Result<DgsmIndices, AnalyzerError> {
    check_pair(samples, outputs)?;
    let Layout::FiniteDifference(layout) = samples.layout() else {
        return Err(AnalyzerError::WrongLayout {
            analyzer: "DGSM",
            expected: "finite-difference",
            got: samples.kind(),
        });
    };
    let y = &outputs.values;
    let n = layout.base_n;
    let v = (0..layout.num_factors)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d =
                        (y[layout.perturbed_row(j, i)] - y[layout.base_row(j)]) / layout.step(j, i);
                    d * d
                })
                .sum::<f64>()
                / n as f64
        })
        .collect();
    let constant = y.iter().all(|&v| v == y[0]);
    Ok(DgsmIndices {
        v,
        warning: constant.then_some(Warning::ConstantOutput),
    })
}
