use rustfft::FftPlanner;

use super::fast::FastIndices;
use super::spectrum::Spectrum;
use super::{check_pair, AnalyzerError, Warning};
use crate::problem::{OutputVector, SampleMatrix};
use crate::samplers::Layout;

/// First order indices from an RBD or hybrid FAST-RBD design.
///
/// For each factor the outputs are put back into curve order through the
/// inverse of that column's permutation; the power at the first `M`
/// harmonics of the group frequency is the raw partial variance. The raw
/// estimate carries the noise of the other factors spread evenly over the
/// spectrum, so the mean power of the non-harmonic frequencies is subtracted
/// once per harmonic before dividing by the variance; negative results clamp
/// to zero.
pub fn analyze_rbd(
    samples: &SampleMatrix,
    outputs: &OutputVector,
) -> Result<FastIndices, AnalyzerError> {
    check_pair(samples, outputs)?;
    let Layout::Balanced(layout) = samples.layout() else {
        return Err(AnalyzerError::WrongLayout {
            analyzer: "RBD",
            expected: "RBD or hybrid FAST-RBD",
            got: samples.kind(),
        });
    };
    let n = layout.samples;
    let k = layout.group_of.len();
    let m = layout.harmonics;
    let total = crate::stats::variance(&outputs.values);
    if crate::stats::is_degenerate(total, &outputs.values) {
        return Ok(FastIndices {
            s1: vec![0.0; k],
            st: None,
            warning: Some(Warning::ConstantOutput),
        });
    }
    let mut planner = FftPlanner::new();
    let mut curve_order = vec![0.0; n];
    let top = (n - 1) / 2;
    let s1 = (0..k)
        .map(|i| {
            for (row, &point) in layout.permutations[i].iter().enumerate() {
                curve_order[point] = outputs.values[row];
            }
            let spec = Spectrum::compute(&mut planner, &curve_order);
            let omega = layout.frequency(i) as usize;
            let harmonic = spec.harmonic_variance(omega, m);
            let (mut floor, mut count) = (0.0, 0usize);
            for p in 1..=top {
                if p % omega == 0 && p / omega <= m {
                    continue;
                }
                floor += 2.0 * spec.power[p];
                count += 1;
            }
            let noise = if count > 0 {
                m as f64 * floor / count as f64
            } else {
                0.0
            };
            ((harmonic - noise) / spec.variance).clamp(0.0, 1.0)
        })
        .collect();
    Ok(FastIndices {
        s1,
        st: None,
        warning: None,
    })
}
