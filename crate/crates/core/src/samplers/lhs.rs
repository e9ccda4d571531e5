use rand::seq::SliceRandom;
use rand::Rng;

use super::{seeded_rng, Layout, SamplerError, SamplerKind};
use crate::problem::{ProblemSpec, SampleMatrix};

/// Latin hypercube: each column has exactly one point in each of `n` equal bins.
pub fn latin_hypercube_sample(
    spec: &ProblemSpec,
    n: usize,
    seed: u64,
) -> Result<SampleMatrix, SamplerError> {
    if n == 0 {
        return Err(SamplerError::TooSmall {
            what: "samples",
            min: 1,
            got: 0,
        });
    }
    let k = spec.num_factors();
    let mut rng = seeded_rng(seed, 2);
    let mut values = vec![0.0; n * k];
    let mut strata: Vec<usize> = (0..n).collect();
    for i in 0..k {
        strata.shuffle(&mut rng);
        for (row, &bin) in strata.iter().enumerate() {
            let u: f64 = rng.random();
            let unit = ((bin as f64 + u) / n as f64).min(f64::from_bits(1f64.to_bits() - 1));
            values[row * k + i] = spec.scale(i, unit);
        }
    }
    Ok(SampleMatrix::new(
        spec,
        n,
        values,
        SamplerKind::LatinHypercube,
        seed,
        Layout::LatinHypercube,
    )?)
}
