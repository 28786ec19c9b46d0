//! Construction, random generation, and serialization of density matrices.
//!
//! Randomness is always confined to an explicit 64-bit seed driving a ChaCha8
//! stream, so every generated state is reproducible bit for bit. Random mixed
//! states use the Ginibre (Gram) construction G G^dagger / Tr(G G^dagger),
//! which covers all ranks with full support.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::jsonfmt;
use crate::linalg::{
    hermitian_eigenvalues, kron, partial_trace, partial_transpose, ComplexMatrix, SubsystemShape,
    PHYS_TOL,
};

/// A validated density matrix: Hermitian, unit trace, positive semidefinite,
/// with its subsystem shape.
///
/// Construction symmetrizes away Hermitian deviations below [`PHYS_TOL`]
/// (tolerating file-format rounding) and rejects anything worse.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    shape: SubsystemShape,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix, shape: SubsystemShape) -> Result<Self> {
        shape.check_matrix(&matrix)?;
        let dev = matrix.hermitian_deviation();
        if dev > PHYS_TOL {
            return Err(Error::NotHermitian {
                deviation: dev,
                tolerance: PHYS_TOL,
            });
        }
        let matrix = matrix.hermitized();
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > PHYS_TOL {
            return Err(Error::InvalidTrace { trace: trace.re });
        }
        let eigs = hermitian_eigenvalues(&matrix)?;
        let min = eigs.last().copied().unwrap_or(0.0);
        if min < -PHYS_TOL {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
        Ok(Self { matrix, shape })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn shape(&self) -> &SubsystemShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.total_dim()
    }

    /// Tr(rho^2).
    pub fn purity(&self) -> f64 {
        crate::linalg::power_trace(&self.matrix, 2).re
    }

    /// Partial transpose on a 1-based subsystem. The result is generally not a
    /// density matrix (it may have negative eigenvalues), so it is returned as
    /// a plain matrix.
    pub fn partial_transpose(&self, subsystem: usize) -> Result<ComplexMatrix> {
        partial_transpose(&self.matrix, &self.shape, subsystem)
    }

    /// Reduced state with one 1-based subsystem traced out.
    pub fn partial_trace(&self, subsystem: usize) -> Result<DensityMatrix> {
        if self.shape.subsystem_count() < 2 {
            return Err(Error::InvalidParameter(
                "cannot trace out the only subsystem".into(),
            ));
        }
        let pos = self.shape.subsystem_position(subsystem)?;
        let reduced = partial_trace(&self.matrix, &self.shape, subsystem)?;
        let mut dims = self.shape.dims().to_vec();
        dims.remove(pos);
        DensityMatrix::new(reduced, SubsystemShape::new(dims)?)
    }
}

/// A normalized pure state vector with its subsystem shape.
#[derive(Clone, Debug)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
    shape: SubsystemShape,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>, shape: SubsystemShape) -> Result<Self> {
        if amplitudes.len() != shape.total_dim() {
            return Err(Error::ShapeMismatch {
                matrix_dim: amplitudes.len(),
                dims: shape.dims().to_vec(),
            });
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > PHYS_TOL {
            return Err(Error::InvalidParameter(format!(
                "pure state norm is {norm}, expected 1"
            )));
        }
        Ok(Self { amplitudes, shape })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn shape(&self) -> &SubsystemShape {
        &self.shape
    }

    /// |psi><psi| as a density matrix.
    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::new(ComplexMatrix::outer(&self.amplitudes), self.shape.clone())
            .expect("outer product of a unit vector is a valid state")
    }
}

/// |Phi+><Phi+| on two qubits, with exact 1/2 entries.
pub fn bell_state() -> DensityMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    for i in [0, 3] {
        for j in [0, 3] {
            m[(i, j)] = Complex64::new(0.5, 0.0);
        }
    }
    DensityMatrix::new(m, SubsystemShape::bipartite(2, 2).unwrap())
        .expect("Bell state is a valid state")
}

/// p |Phi+><Phi+| + (1-p) I/4 for p in [0, 1].
///
/// The partial transpose has eigenvalues {(1+p)/4 (threefold), (1-3p)/4},
/// so the state is NPT exactly when p > 1/3.
pub fn werner_state(p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "Werner parameter {p} outside [0, 1]"
        )));
    }
    let bell = bell_state();
    let mixed = ComplexMatrix::identity(4).scaled(Complex64::new((1.0 - p) / 4.0, 0.0));
    let m = bell.matrix().scaled(Complex64::new(p, 0.0)).add(&mixed);
    DensityMatrix::new(m, SubsystemShape::bipartite(2, 2).unwrap())
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Random mixed state of the given rank: G G^dagger / Tr(G G^dagger) with G a
/// (dim x rank) matrix of independent standard complex Gaussian entries drawn
/// from ChaCha8 seeded with `seed`. Deterministic per seed.
pub fn random_density(shape: &SubsystemShape, rank: usize, seed: u64) -> Result<DensityMatrix> {
    let dim = shape.total_dim();
    if rank == 0 || rank > dim {
        return Err(Error::InvalidRank { rank, dim });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ComplexMatrix::from_fn(dim, rank, |_, _| complex_gaussian(&mut rng));
    let gram = g.matmul(&g.dagger());
    let trace = gram.trace().re;
    let rho = gram.scaled(Complex64::new(1.0 / trace, 0.0));
    DensityMatrix::new(rho, shape.clone())
}

/// Random pure state: a normalized vector of standard complex Gaussian
/// amplitudes from ChaCha8 seeded with `seed`. Deterministic per seed.
pub fn random_pure(shape: &SubsystemShape, seed: u64) -> PureState {
    let dim = shape.total_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut amps: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(&mut rng)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    PureState::new(amps, shape.clone()).expect("normalized vector")
}

/// Random unitary: a Ginibre sample orthonormalized by modified Gram-Schmidt.
/// Used for local-basis-change fuzzing; deterministic per seed.
pub fn random_unitary(dim: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // columns[j] is the j-th column vector
    let mut columns: Vec<Vec<Complex64>> = (0..dim)
        .map(|_| (0..dim).map(|_| complex_gaussian(&mut rng)).collect())
        .collect();
    for j in 0..dim {
        for prev in 0..j {
            let overlap: Complex64 = columns[prev]
                .iter()
                .zip(&columns[j])
                .map(|(p, c)| p.conj() * c)
                .sum();
            for i in 0..dim {
                let correction = overlap * columns[prev][i];
                columns[j][i] -= correction;
            }
        }
        let norm = columns[j].iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut columns[j] {
            *a /= norm;
        }
    }
    ComplexMatrix::from_fn(dim, dim, |i, j| columns[j][i])
}

/// Product state rho_A (x) rho_B from two factors.
pub fn product_state(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    let mut dims = a.shape().dims().to_vec();
    dims.extend_from_slice(b.shape().dims());
    DensityMatrix::new(kron(a.matrix(), b.matrix()), SubsystemShape::new(dims)?)
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    dims: Vec<usize>,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

/// Serializes a state to the normative JSON form
/// `{dims: [..], re: [[..]], im: [[..]]}` with row-major nested arrays.
pub fn state_to_json(rho: &DensityMatrix) -> String {
    let n = rho.dim();
    let m = rho.matrix();
    let file = StateFile {
        dims: rho.shape().dims().to_vec(),
        re: (0..n)
            .map(|i| (0..n).map(|j| m[(i, j)].re).collect())
            .collect(),
        im: (0..n)
            .map(|i| (0..n).map(|j| m[(i, j)].im).collect())
            .collect(),
    };
    jsonfmt::to_string(&serde_json::to_value(&file).expect("state serializes"))
}

/// Parses the JSON state form and validates all density-matrix invariants
/// (including the Hermitization policy).
pub fn state_from_json(text: &str) -> Result<DensityMatrix> {
    let file: StateFile = serde_json::from_str(text)?;
    let shape = SubsystemShape::new(file.dims)?;
    let n = shape.total_dim();
    if file.re.len() != n
        || file.im.len() != n
        || file.re.iter().any(|row| row.len() != n)
        || file.im.iter().any(|row| row.len() != n)
    {
        return Err(Error::ShapeMismatch {
            matrix_dim: file.re.len(),
            dims: shape.dims().to_vec(),
        });
    }
    let matrix = ComplexMatrix::from_fn(n, n, |i, j| Complex64::new(file.re[i][j], file.im[i][j]));
    DensityMatrix::new(matrix, shape)
}

pub fn save_state(path: impl AsRef<Path>, rho: &DensityMatrix) -> Result<()> {
    std::fs::write(path, state_to_json(rho) + "\n")?;
    Ok(())
}

pub fn load_state(path: impl AsRef<Path>) -> Result<DensityMatrix> {
    let text = std::fs::read_to_string(path)?;
    state_from_json(&text)
}
