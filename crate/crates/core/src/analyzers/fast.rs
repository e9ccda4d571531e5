use rustfft::FftPlanner;

use super::spectrum::Spectrum;
use super::{check_pair, AnalyzerError, Warning};
use crate::problem::{OutputVector, SampleMatrix};
use crate::result::SensitivityResult;
use crate::samplers::Layout;

/// First and total order indices from a spectral design. RBD designs fill
/// `s1` only.
#[derive(Debug, Clone, PartialEq)]
pub struct FastIndices {
    pub s1: Vec<f64>,
    pub st: Option<Vec<f64>>,
    pub warning: Option<Warning>,
}

impl FastIndices {
    pub fn to_result(&self, method: &str, names: &[String]) -> SensitivityResult {
        let mut r = SensitivityResult::new(method, names).with_index("S1", self.s1.clone(), None);
        if let Some(st) = &self.st {
            r = r.with_index("ST", st.clone(), None);
        }
        r.with_warning(self.warning)
    }
}

/// Extended FAST.
///
/// On the curve studying factor `i` with primary frequency `w`:
/// `S1_i = sum_{q<=M} power(q w) / V` and `ST_i = 1 - power(1..=w/2) / V`,
/// the low band holding everything the complementary factors explain.
pub fn analyze_fast(
    samples: &SampleMatrix,
    outputs: &OutputVector,
) -> Result<FastIndices, AnalyzerError> {
    check_pair(samples, outputs)?;
    let Layout::Fast(layout) = samples.layout() else {
        return Err(AnalyzerError::WrongLayout {
            analyzer: "FAST",
            expected: "FAST",
            got: samples.kind(),
        });
    };
    let k = layout.num_factors;
    let omega = layout.frequencies.primary as usize;
    let mut planner = FftPlanner::new();
    let mut s1 = vec![0.0; k];
    let mut st = vec![0.0; k];
    let mut degenerate = 0;
    for i in 0..k {
        let y = &outputs.values[layout.curve_rows(i)];
        let spec = Spectrum::compute(&mut planner, y);
        if crate::stats::is_degenerate(spec.variance, y) {
            degenerate += 1;
            continue;
        }
        s1[i] = (spec.harmonic_variance(omega, layout.harmonics) / spec.variance).clamp(0.0, 1.0);
        st[i] = (1.0 - spec.band_variance(omega / 2) / spec.variance).clamp(0.0, 1.0);
    }
    let warning = (degenerate == k).then_some(Warning::ConstantOutput);
    Ok(FastIndices {
        s1,
        st: Some(st),
        warning,
    })
}
