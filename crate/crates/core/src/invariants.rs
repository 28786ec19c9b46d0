//! Polynomial local-unitary invariants as contraction diagrams.
//!
//! A diagram assigns one permutation of the k copies to each subsystem: the
//! downstairs (ket) index of subsystem j on copy c is contracted with the
//! upstairs (bra) index of subsystem j on copy sigma_j(c). Every such
//! pattern is invariant under local basis changes by construction, and is in
//! one-to-one correspondence with a controlled-permutation circuit.
//!
//! The evaluator here is the deliberately naive nested summation over all
//! indices, capped in cost; it is the trust anchor the fast circuit backends
//! are compared against, not a performance path.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuits::{Circuit, Handedness, MeasuredPart, PermutationSpec};
use crate::error::{Error, Result};
use crate::jsonfmt;
use crate::linalg::SubsystemShape;
use crate::states::{DensityMatrix, PureState};

/// Cost cap for the brute-force evaluator, in scalar multiply-adds.
pub const EVAL_COST_CAP: u128 = 100_000_000;

/// A contraction diagram: `perms[j][c-1]` is the 1-based copy whose upstairs
/// index receives the downstairs index of subsystem j+1 on copy c.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractionDiagram {
    copies: usize,
    dims: Vec<usize>,
    perms: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct DiagramFile {
    copies: usize,
    dims: Vec<usize>,
    perms: Vec<Vec<usize>>,
}

impl ContractionDiagram {
    pub fn new(copies: usize, dims: Vec<usize>, perms: Vec<Vec<usize>>) -> Result<Self> {
        let shape = SubsystemShape::new(dims)?;
        if perms.len() != shape.subsystem_count() {
            return Err(Error::InvalidParameter(format!(
                "{} permutations for {} subsystems",
                perms.len(),
                shape.subsystem_count()
            )));
        }
        if copies == 0 {
            return Err(Error::InvalidParameter("need at least one copy".into()));
        }
        for perm in &perms {
            if perm.len() != copies {
                return Err(Error::InvalidPermutation {
                    perm: perm.clone(),
                    n: copies,
                });
            }
            let mut seen = vec![false; copies];
            for &image in perm {
                if image == 0 || image > copies || seen[image - 1] {
                    return Err(Error::InvalidPermutation {
                        perm: perm.clone(),
                        n: copies,
                    });
                }
                seen[image - 1] = true;
            }
        }
        Ok(Self {
            copies,
            dims: shape.dims().to_vec(),
            perms,
        })
    }

    /// All-identity diagram: every copy closes on itself, so the value is
    /// (Tr rho)^k.
    pub fn identity(copies: usize, dims: Vec<usize>) -> Result<Self> {
        let perms = vec![(1..=copies).collect::<Vec<_>>(); dims.len()];
        Self::new(copies, dims, perms)
    }

    /// Cyclic diagram with a per-subsystem handedness, mirroring the moment
    /// circuits: all-forward gives Tr(rho^k), forward/inverse on a bipartite
    /// shape gives Tr((rho^T2)^k).
    pub fn cyclic(copies: usize, dims: Vec<usize>, handedness: &[Handedness]) -> Result<Self> {
        if handedness.len() != dims.len() {
            return Err(Error::InvalidParameter(
                "one handedness per subsystem".into(),
            ));
        }
        let forward: Vec<usize> = (1..=copies).map(|c| c % copies + 1).collect();
        let inverse: Vec<usize> = (1..=copies)
            .map(|c| (c + copies - 2) % copies + 1)
            .collect();
        let perms = handedness
            .iter()
            .map(|h| match h {
                Handedness::Forward => forward.clone(),
                Handedness::Inverse => inverse.clone(),
            })
            .collect();
        Self::new(copies, dims, perms)
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }

    /// Brute-force cost in multiply-adds: one product chain per assignment of
    /// all (copy, subsystem) index variables.
    pub fn cost(&self) -> u128 {
        let mut assignments: u128 = 1;
        for _ in 0..self.copies {
            for &d in &self.dims {
                assignments = assignments.saturating_mul(d as u128);
            }
        }
        assignments.saturating_mul(self.copies as u128)
    }

    /// Convenience wrapper pairing the value with the diagram it came from.
    pub fn evaluate(&self, rho: &DensityMatrix) -> Result<InvariantValue> {
        Ok(InvariantValue {
            value: evaluate_diagram(self, rho)?,
            diagram: self.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        let file = DiagramFile {
            copies: self.copies,
            dims: self.dims.clone(),
            perms: self.perms.clone(),
        };
        jsonfmt::to_string(&serde_json::to_value(&file).expect("diagram serializes"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DiagramFile = serde_json::from_str(text)?;
        Self::new(file.copies, file.dims, file.perms)
    }
}

/// A diagram value together with its diagram.
#[derive(Clone, Debug)]
pub struct InvariantValue {
    pub value: Complex64,
    pub diagram: ContractionDiagram,
}

/// The degree-6 three-qubit invariant: three copies, a forward 3-cycle on
/// qubit 1, an inverse 3-cycle on qubit 2, and qubit 3 traced out in place.
/// Equals the third moment of the partially transposed two-qubit reduced
/// state.
pub fn kempe_diagram() -> ContractionDiagram {
    ContractionDiagram::new(
        3,
        vec![2, 2, 2],
        vec![vec![2, 3, 1], vec![3, 1, 2], vec![1, 2, 3]],
    )
    .expect("fixed diagram is well formed")
}

/// Opposite-handed cycles on a bipartite shape: evaluates to
/// Tr((rho^T2)^k).
pub fn pt_moment_diagram(copies: usize, shape: &SubsystemShape) -> Result<ContractionDiagram> {
    if shape.subsystem_count() != 2 {
        return Err(Error::NotBipartite(shape.subsystem_count()));
    }
    ContractionDiagram::cyclic(
        copies,
        shape.dims().to_vec(),
        &[Handedness::Forward, Handedness::Inverse],
    )
}

fn evaluate_entries(
    diagram: &ContractionDiagram,
    entry: impl Fn(usize, usize) -> Complex64,
) -> Result<Complex64> {
    let cost = diagram.cost();
    if cost > EVAL_COST_CAP {
        return Err(Error::CostCapExceeded {
            cost,
            cap: EVAL_COST_CAP,
        });
    }
    let k = diagram.copies;
    let s = diagram.dims.len();
    let dims = &diagram.dims;

    // strides within one copy's composite index
    let mut shape_strides = vec![1usize; s];
    for j in (0..s.saturating_sub(1)).rev() {
        shape_strides[j] = shape_strides[j + 1] * dims[j + 1];
    }
    // 0-based inverses: inv[j][c] is the copy whose downstairs index lands
    // upstairs on copy c
    let mut inv = vec![vec![0usize; k]; s];
    for (j, perm) in diagram.perms.iter().enumerate() {
        for (c, &image) in perm.iter().enumerate() {
            inv[j][image - 1] = c;
        }
    }

    // one variable per (copy, subsystem), row-major
    let nvars = k * s;
    let var_dim = |v: usize| dims[v % s];
    let total: usize = (0..nvars).map(var_dim).product();
    let mut values = vec![0usize; nvars];
    let mut sum = Complex64::ZERO;
    for _ in 0..total {
        let mut prod = Complex64::ONE;
        for c in 0..k {
            let mut row = 0;
            let mut col = 0;
            for j in 0..s {
                row += values[c * s + j] * shape_strides[j];
                col += values[inv[j][c] * s + j] * shape_strides[j];
            }
            prod *= entry(row, col);
            if prod == Complex64::ZERO {
                break;
            }
        }
        sum += prod;

        // odometer increment
        for v in (0..nvars).rev() {
            values[v] += 1;
            if values[v] < var_dim(v) {
                break;
            }
            values[v] = 0;
        }
    }
    Ok(sum)
}

/// Literal nested-index evaluation of a diagram on a mixed state: each copy
/// contributes one rho entry.
pub fn evaluate_diagram(diagram: &ContractionDiagram, rho: &DensityMatrix) -> Result<Complex64> {
    if rho.shape().dims() != diagram.dims() {
        return Err(Error::StateShapeMismatch {
            state: rho.shape().dims().to_vec(),
            expected: diagram.dims().to_vec(),
        });
    }
    let m = rho.matrix();
    evaluate_entries(diagram, |row, col| m[(row, col)])
}

/// Literal nested-index evaluation on a pure state: each copy contributes a
/// psi / conjugate-psi pair.
pub fn evaluate_diagram_pure(
    diagram: &ContractionDiagram,
    psi: &PureState,
) -> Result<Complex64> {
    if psi.shape().dims() != diagram.dims() {
        return Err(Error::StateShapeMismatch {
            state: psi.shape().dims().to_vec(),
            expected: diagram.dims().to_vec(),
        });
    }
    let amps = psi.amplitudes();
    evaluate_entries(diagram, |row, col| amps[row] * amps[col].conj())
}

/// Rotates a diagram into its interferometer circuit: the diagram's
/// permutations become the controlled payload, so the circuit's exact
/// expectation equals the diagram value.
pub fn diagram_to_circuit(diagram: &ContractionDiagram) -> Result<Circuit> {
    let shape = SubsystemShape::new(diagram.dims().to_vec())?;
    let spec = PermutationSpec::new(diagram.perms().to_vec())?;
    Circuit::new(diagram.copies(), shape, spec, MeasuredPart::Real)
}
