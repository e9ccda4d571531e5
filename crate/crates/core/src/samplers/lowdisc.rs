//! Owen-scrambled Sobol points of arbitrary dimension.

const DIMS_PER_BLOCK: usize = 256;

/// Coordinate `dim` of Sobol point `index`, scrambled by `seed`.
///
/// The underlying generator provides 256 stratified dimensions; higher
/// dimensions are padded with independently seeded 256-dimension blocks.
/// Returns a value in [0, 1).
pub fn sobol_point(index: usize, dim: usize, seed: u64) -> f64 {
    assert!(index < (1 << 16), "Sobol index {index} exceeds 2^16");
    let block = (dim / DIMS_PER_BLOCK) as u64;
    let folded = (seed ^ (seed >> 32)) as u32;
    let block_seed = folded.wrapping_add((block as u32).wrapping_mul(0x9e37_79b9));
    sobol_burley::sample(index as u32, (dim % DIMS_PER_BLOCK) as u32, block_seed) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_points_stratify_each_dimension() {
        // A (0, m, 1)-net per coordinate: 16 points land in 16 distinct bins.
        for dim in [0, 3, 255, 256, 700] {
            let mut bins: Vec<usize> = (0..16)
                .map(|i| (sobol_point(i, dim, 11) * 16.0) as usize)
                .collect();
            bins.sort_unstable();
            assert_eq!(bins, (0..16).collect::<Vec<_>>(), "dim {dim}");
        }
    }

    #[test]
    fn seeds_differ() {
        let a: Vec<f64> = (0..8).map(|i| sobol_point(i, 1, 1)).collect();
        let b: Vec<f64> = (0..8).map(|i| sobol_point(i, 1, 2)).collect();
        assert_ne!(a, b);
    }
}
