//! Saltelli cross-sampling for Sobol indices.

use super::{lowdisc::sobol_point, Layout, SamplerError, SamplerKind};
use crate::problem::{ProblemSpec, RowStore, SampleMatrix};

/// Block structure of a Saltelli design.
///
/// Each base row `j` expands into one contiguous block laid out as
/// `A_j, AB_1j .. AB_kj, [BA_1j .. BA_kj], B_j`, where `AB_ij` is `A_j` with
/// column `i` taken from `B_j` and `BA_ij` the converse.
#[derive(Debug, Clone, PartialEq)]
pub struct SaltelliLayout {
    pub base_n: usize,
    pub num_factors: usize,
    pub second_order: bool,
}

impl SaltelliLayout {
    pub fn block_len(&self) -> usize {
        if self.second_order {
            2 * self.num_factors + 2
        } else {
            self.num_factors + 2
        }
    }

    pub fn a(&self, j: usize) -> usize {
        j * self.block_len()
    }

    pub fn ab(&self, j: usize, i: usize) -> usize {
        j * self.block_len() + 1 + i
    }

    /// Row of `BA_ij`; only valid for second-order designs.
    pub fn ba(&self, j: usize, i: usize) -> usize {
        debug_assert!(self.second_order);
        j * self.block_len() + 1 + self.num_factors + i
    }

    pub fn b(&self, j: usize) -> usize {
        (j + 1) * self.block_len() - 1
    }

    pub(crate) fn check(&self, rows: usize, cols: usize) -> Result<(), String> {
        if cols != self.num_factors {
            return Err(format!("{cols} columns for {} factors", self.num_factors));
        }
        if rows != self.base_n * self.block_len() {
            return Err(format!(
                "{rows} rows, expected {} base rows x {} per block",
                self.base_n,
                self.block_len()
            ));
        }
        Ok(())
    }
}

/// Builds the A/B/AB (and optionally BA) design from a scrambled Sobol sequence.
///
/// `A` uses Sobol dimensions `0..k`, `B` dimensions `k..2k`. Powers of two for
/// `base_n` keep the base points a balanced net.
pub fn saltelli_sample(
    spec: &ProblemSpec,
    base_n: usize,
    second_order: bool,
    seed: u64,
) -> Result<SampleMatrix, SamplerError> {
    if base_n < 2 {
        return Err(SamplerError::TooSmall {
            what: "base_n",
            min: 2,
            got: base_n,
        });
    }
    if base_n > 1 << 16 {
        return Err(SamplerError::InvalidConfig(format!(
            "base_n {base_n} exceeds the 65536-point sequence limit"
        )));
    }
    let k = spec.num_factors();
    let layout = SaltelliLayout {
        base_n,
        num_factors: k,
        second_order,
    };
    let mut store = RowStore::new(k);
    for j in 0..base_n {
        let a: Vec<f64> = (0..k)
            .map(|i| spec.scale(i, sobol_point(j, i, seed)))
            .collect();
        let b: Vec<f64> = (0..k)
            .map(|i| spec.scale(i, sobol_point(j, k + i, seed)))
            .collect();
        let a_row = store.push_dense(&a);
        for i in 0..k {
            store.push_patch(a_row, i, b[i]);
        }
        if second_order {
            for i in 0..k {
                store.push_patch(layout.b(j), i, a[i]);
            }
        }
        store.push_dense(&b);
    }
    Ok(SampleMatrix::from_store(
        spec,
        store,
        SamplerKind::Saltelli,
        seed,
        Layout::Saltelli(layout),
    )?)
}
