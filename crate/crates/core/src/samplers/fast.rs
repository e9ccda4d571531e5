//! Extended FAST search curves.
//!
//! One curve of `N` points is generated per factor. On curve `i` factor `i`
//! oscillates at the high primary frequency while every other factor uses a
//! low complementary frequency, so the spectrum separates the power owed to
//! factor `i` (harmonics of the primary) from the power owed to the rest
//! (the low band).

use super::{curve_parameter, search_curve, Layout, SamplerError, SamplerKind};
use crate::problem::{ProblemSpec, SampleMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct FastFrequencies {
    pub primary: u32,
    /// Frequencies handed, in order, to the factors not under study on a curve.
    pub complementary: Vec<u32>,
}

impl FastFrequencies {
    /// Largest primary frequency the sample count resolves, with complementary
    /// frequencies spread over `1..=primary / (2M)`.
    pub fn auto(samples_per_curve: usize, harmonics: usize, num_factors: usize) -> Self {
        let primary = ((samples_per_curve.saturating_sub(1)) / (2 * harmonics.max(1))) as u32;
        let max_comp = (primary as usize / (2 * harmonics.max(1))).max(1) as u32;
        let n_comp = num_factors.saturating_sub(1);
        let complementary = if n_comp == 0 {
            Vec::new()
        } else if max_comp as usize >= n_comp {
            if n_comp == 1 {
                vec![1]
            } else {
                // evenly spaced, distinct, endpoints 1 and max_comp
                let step = (max_comp - 1) as f64 / (n_comp - 1) as f64;
                (0..n_comp)
                    .map(|j| 1 + (j as f64 * step).floor() as u32)
                    .collect()
            }
        } else {
            (0..n_comp).map(|j| (j as u32 % max_comp) + 1).collect()
        };
        Self {
            primary,
            complementary,
        }
    }

    /// Frequency assigned to each factor on the curve studying `factor`.
    pub fn curve(&self, factor: usize, num_factors: usize) -> Vec<u32> {
        let mut comp = self.complementary.iter();
        (0..num_factors)
            .map(|i| {
                if i == factor {
                    self.primary
                } else {
                    *comp
                        .next()
                        .expect("one complementary frequency per other factor")
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FastConfig {
    pub samples_per_curve: usize,
    /// Harmonics `M` of the primary frequency credited to the studied factor.
    pub harmonics: usize,
    /// `None` selects frequencies automatically from the sample count.
    pub frequencies: Option<FastFrequencies>,
}

impl FastConfig {
    pub fn new(samples_per_curve: usize) -> Self {
        Self {
            samples_per_curve,
            harmonics: 4,
            frequencies: None,
        }
    }

    pub fn resolve(&self, num_factors: usize) -> Result<FastFrequencies, SamplerError> {
        let freqs = self.frequencies.clone().unwrap_or_else(|| {
            FastFrequencies::auto(self.samples_per_curve, self.harmonics, num_factors)
        });
        validate(&freqs, self.samples_per_curve, self.harmonics, num_factors)?;
        Ok(freqs)
    }
}

fn validate(
    freqs: &FastFrequencies,
    n: usize,
    harmonics: usize,
    num_factors: usize,
) -> Result<(), SamplerError> {
    if harmonics == 0 {
        return Err(SamplerError::InvalidConfig(
            "harmonics must be positive".into(),
        ));
    }
    if freqs.complementary.len() != num_factors - 1 {
        return Err(SamplerError::InvalidConfig(format!(
            "{} complementary frequencies for {} other factors",
            freqs.complementary.len(),
            num_factors - 1
        )));
    }
    if freqs.primary == 0 || freqs.complementary.contains(&0) {
        return Err(SamplerError::InvalidConfig(
            "frequencies must be positive".into(),
        ));
    }
    let required = 2 * harmonics * freqs.primary as usize;
    if n <= required {
        return Err(SamplerError::Nyquist {
            samples: n,
            harmonics,
            frequency: freqs.primary,
            required,
        });
    }
    // The complement band 1..=primary/2 must hold every harmonic up to M of
    // each complementary frequency, away from the primary's harmonics.
    if let Some(&w) = freqs
        .complementary
        .iter()
        .find(|&&w| 2 * harmonics as u64 * w as u64 > freqs.primary as u64)
    {
        return Err(SamplerError::Interference(format!(
            "harmonic {harmonics}*{w} = {} of a complementary frequency reaches past half the primary frequency {}",
            harmonics as u64 * w as u64,
            freqs.primary,
        )));
    }
    Ok(())
}

/// Row structure of an extended FAST design: `k` consecutive curves.
#[derive(Debug, Clone, PartialEq)]
pub struct FastLayout {
    pub samples_per_curve: usize,
    pub harmonics: usize,
    pub num_factors: usize,
    pub frequencies: FastFrequencies,
}

impl FastLayout {
    pub fn curve_rows(&self, factor: usize) -> std::ops::Range<usize> {
        factor * self.samples_per_curve..(factor + 1) * self.samples_per_curve
    }

    pub(crate) fn check(&self, rows: usize, cols: usize) -> Result<(), String> {
        if cols != self.num_factors || rows != self.samples_per_curve * self.num_factors {
            return Err(format!(
                "{rows}x{cols} matrix for {} curves of {} points",
                self.num_factors, self.samples_per_curve
            ));
        }
        Ok(())
    }
}

/// Builds one search curve per factor, `N * k` rows in total.
///
/// Point `j` of every curve sits at `s_j = -pi + pi (2j + 1) / N`; column `i`
/// on that curve is `G(sin(w_i s_j))` rescaled to the factor's bounds.
pub fn fast_sample(spec: &ProblemSpec, config: &FastConfig) -> Result<SampleMatrix, SamplerError> {
    let k = spec.num_factors();
    let n = config.samples_per_curve;
    let freqs = config.resolve(k)?;
    let mut values = Vec::with_capacity(n * k * k);
    for factor in 0..k {
        let omega = freqs.curve(factor, k);
        for j in 0..n {
            let s = curve_parameter(j, n);
            for (i, &w) in omega.iter().enumerate() {
                values.push(spec.scale(i, search_curve(w as f64, s, 0.0)));
            }
        }
    }
    let layout = FastLayout {
        samples_per_curve: n,
        harmonics: config.harmonics,
        num_factors: k,
        frequencies: freqs,
    };
    Ok(SampleMatrix::new(
        spec,
        n * k,
        values,
        SamplerKind::Fast,
        0,
        Layout::Fast(layout),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_factor_is_symmetric() {
        let spec = ProblemSpec::uniform(1, 2.0, 6.0).unwrap();
        let cfg = FastConfig {
            samples_per_curve: 8,
            harmonics: 1,
            frequencies: Some(FastFrequencies {
                primary: 1,
                complementary: vec![],
            }),
        };
        let m = fast_sample(&spec, &cfg).unwrap();
        let mut col: Vec<f64> = m.column(0).collect();
        col.sort_by(f64::total_cmp);
        for (lo, hi) in col.iter().zip(col.iter().rev()) {
            assert!((lo + hi - 8.0).abs() < 1e-12, "{lo} + {hi}");
        }
    }

    #[test]
    fn auto_frequencies_are_separated() {
        let spec = ProblemSpec::uniform(3, 0.0, 1.0).unwrap();
        let cfg = FastConfig::new(1024);
        let m = fast_sample(&spec, &cfg).unwrap();
        let Layout::Fast(l) = m.layout() else {
            panic!()
        };
        assert_eq!(l.frequencies.primary, 127);
        assert_eq!(l.frequencies.complementary, vec![1, 15]);
        for f in 0..3 {
            let w = l.frequencies.curve(f, 3);
            for a in 0..3 {
                for b in 0..3 {
                    for c in 0..3 {
                        if a != b && b != c && a != c {
                            assert_ne!(w[a], w[b] + w[c]);
                            assert_ne!(w[a] as i64, w[b] as i64 - w[c] as i64);
                        }
                    }
                }
            }
        }
        assert_eq!(m.rows(), 3 * 1024);
    }

    #[test]
    fn nyquist_and_interference_errors() {
        let spec = ProblemSpec::uniform(2, 0.0, 1.0).unwrap();
        let bad_n = FastConfig {
            samples_per_curve: 64,
            harmonics: 4,
            frequencies: Some(FastFrequencies {
                primary: 8,
                complementary: vec![1],
            }),
        };
        assert!(matches!(
            fast_sample(&spec, &bad_n),
            Err(SamplerError::Nyquist { required: 64, .. })
        ));
        let collide = FastConfig {
            samples_per_curve: 1024,
            harmonics: 4,
            frequencies: Some(FastFrequencies {
                primary: 40,
                complementary: vec![9],
            }),
        };
        match fast_sample(&spec, &collide) {
            Err(SamplerError::Interference(msg)) => assert!(msg.contains("9"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn many_factors_cycle_low_frequencies() {
        let f = FastFrequencies::auto(100, 4, 784);
        assert_eq!(f.primary, 12);
        assert!(f.complementary.iter().all(|&w| w == 1));
        assert!(FastConfig::new(100).resolve(784).is_ok());
    }
}
