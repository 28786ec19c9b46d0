//! Contraction backend.
//!
//! Evaluates Tr(U rho^(x)k) without materializing the k-copy space. There is
//! one index variable per (copy, subsystem) pair and one rho factor per copy;
//! copies are absorbed in order while a boundary tensor tracks the variables
//! still shared with copies not yet processed. For cyclic permutations the
//! boundary stays at a handful of variables, so the cost is polynomial in the
//! local dimensions and k.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::SubsystemShape;
use crate::states::DensityMatrix;

use super::PermutationSpec;

const COST_CAP: u128 = 100_000_000;

pub(super) fn permutation_expectation(
    spec: &PermutationSpec,
    shape: &SubsystemShape,
    rho: &DensityMatrix,
) -> Result<Complex64> {
    let k = spec.copies();
    let s = spec.subsystem_count();
    debug_assert_eq!(s, shape.subsystem_count());
    let dims = shape.dims().to_vec();
    let shape_strides = shape.strides();
    let inv = spec.inverses();
    let matrix = rho.matrix();

    // variable id v = copy * s + subsystem, both 0-based
    let var_dim = |v: usize| dims[v % s];

    // last factor touching each variable: copy c reads it as a row index,
    // copy sigma_j(c) reads it as a column index
    let mut last_use = vec![0usize; k * s];
    for c in 0..k {
        for j in 0..s {
            let col_factor = spec.perms()[j][c] - 1;
            last_use[c * s + j] = c.max(col_factor);
        }
    }

    let mut boundary_vars: Vec<usize> = Vec::new();
    let mut boundary: Vec<Complex64> = vec![Complex64::ONE];
    let mut cost: u128 = 0;

    for c in 0..k {
        let mut all: Vec<usize> = boundary_vars.clone();
        for j in 0..s {
            all.push(c * s + j);
            all.push(inv[j][c] * s + j);
        }
        all.sort_unstable();
        all.dedup();

        let total: usize = all.iter().map(|&v| var_dim(v)).product();
        cost += total as u128;
        if cost > COST_CAP {
            return Err(Error::CostCapExceeded {
                cost,
                cap: COST_CAP,
            });
        }

        let keep: Vec<usize> = all.iter().copied().filter(|&v| last_use[v] > c).collect();
        let keep_total: usize = keep.iter().map(|&v| var_dim(v)).product();
        let mut out = vec![Complex64::ZERO; keep_total];

        let strides_over = |vars: &[usize]| -> Vec<usize> {
            let mut strides = vec![1usize; vars.len()];
            for p in (0..vars.len().saturating_sub(1)).rev() {
                strides[p] = strides[p + 1] * var_dim(vars[p + 1]);
            }
            strides
        };
        let all_strides = strides_over(&all);
        let b_strides = strides_over(&boundary_vars);
        let keep_strides = strides_over(&keep);

        let pos = |v: usize| all.binary_search(&v).expect("variable present");
        let b_pos: Vec<usize> = boundary_vars.iter().map(|&v| pos(v)).collect();
        let keep_pos: Vec<usize> = keep.iter().map(|&v| pos(v)).collect();
        let row_pos: Vec<usize> = (0..s).map(|j| pos(c * s + j)).collect();
        let col_pos: Vec<usize> = (0..s).map(|j| pos(inv[j][c] * s + j)).collect();

        let mut values = vec![0usize; all.len()];
        for lin in 0..total {
            let mut rem = lin;
            for p in 0..all.len() {
                values[p] = rem / all_strides[p];
                rem %= all_strides[p];
            }
            let b_idx: usize = b_pos
                .iter()
                .zip(&b_strides)
                .map(|(&p, &st)| values[p] * st)
                .sum();
            let weight = boundary[b_idx];
            if weight == Complex64::ZERO {
                continue;
            }
            let row: usize = row_pos
                .iter()
                .zip(&shape_strides)
                .map(|(&p, &st)| values[p] * st)
                .sum();
            let col: usize = col_pos
                .iter()
                .zip(&shape_strides)
                .map(|(&p, &st)| values[p] * st)
                .sum();
            let k_idx: usize = keep_pos
                .iter()
                .zip(&keep_strides)
                .map(|(&p, &st)| values[p] * st)
                .sum();
            out[k_idx] += weight * matrix[(row, col)];
        }

        boundary_vars = keep;
        boundary = out;
    }
    debug_assert!(boundary_vars.is_empty());
    Ok(boundary[0])
}
