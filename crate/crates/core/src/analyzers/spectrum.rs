//! One-sided power spectrum of an output series along a search curve.

use rustfft::{num_complex::Complex, FftPlanner};

pub(crate) struct Spectrum {
    /// `power[p] = |Y_p|^2 / N^2` for `p = 0 ..= N/2`.
    pub power: Vec<f64>,
    /// Population variance of the series; equals the spectral power
    /// excluding `p = 0` (Parseval).
    pub variance: f64,
}

impl Spectrum {
    pub fn compute(planner: &mut FftPlanner<f64>, y: &[f64]) -> Self {
        let n = y.len();
        let mean = y.iter().sum::<f64>() / n as f64;
        let mut buf: Vec<Complex<f64>> = y.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
        planner.plan_fft_forward(n).process(&mut buf);
        let norm = (n * n) as f64;
        let power: Vec<f64> = buf[..=n / 2].iter().map(|c| c.norm_sqr() / norm).collect();
        let variance = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        Self { power, variance }
    }

    /// Variance carried by frequencies `q * omega`, `q = 1..=harmonics`.
    pub fn harmonic_variance(&self, omega: usize, harmonics: usize) -> f64 {
        (1..=harmonics)
            .map(|q| q * omega)
            .take_while(|&p| p < self.power.len())
            .map(|p| 2.0 * self.power[p])
            .sum()
    }

    /// Variance carried by frequencies `1..=upper`.
    pub fn band_variance(&self, upper: usize) -> f64 {
        (1..=upper.min(self.power.len() - 1))
            .map(|p| 2.0 * self.power[p])
            .sum()
    }
}
