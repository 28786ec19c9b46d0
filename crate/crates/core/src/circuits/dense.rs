//! Dense interferometer backend.
//!
//! Simulates the full joint density matrix (ancilla qubit + k copies of the
//! state) gate by gate: Hadamards and the adjoint phase gate act on the
//! ancilla, controlled-SWAP gates permute basis states on the ancilla-1
//! branch. The ancilla's <Z> after the final Hadamard is the measured part.

use num_complex::Complex64;

use crate::error::Result;
use crate::linalg::{kron, ComplexMatrix};
use crate::states::DensityMatrix;

use super::{Circuit, Gate, MeasuredPart};

/// Full complex expectation Tr(U rho^(x)k): the real part from the plain
/// interferometer, the imaginary part from the phase-gated variant.
pub(super) fn expectation(circuit: &Circuit, rho: &DensityMatrix) -> Result<Complex64> {
    let re = simulate_part(circuit, rho, MeasuredPart::Real)?;
    let im = simulate_part(circuit, rho, MeasuredPart::Imaginary)?;
    Ok(Complex64::new(re, im))
}

/// Runs the interferometer measuring the requested quadrature: Hadamard,
/// controlled payload, optionally the adjoint phase gate, Hadamard, <Z>.
pub(super) fn simulate_part(
    circuit: &Circuit,
    rho: &DensityMatrix,
    part: MeasuredPart,
) -> Result<f64> {
    let k = circuit.copies();
    let mut data = rho.matrix().clone();
    for _ in 1..k {
        data = kron(&data, rho.matrix());
    }
    let d = data.rows();
    let jd = 2 * d;

    // joint = |0><0| (x) rho^(x)k
    let mut joint = ComplexMatrix::zeros(jd, jd);
    for i in 0..d {
        for j in 0..d {
            joint[(i, j)] = data[(i, j)];
        }
    }

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let hadamard = [
        [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
        [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
    ];
    let phase_adjoint = [
        [Complex64::ONE, Complex64::ZERO],
        [Complex64::ZERO, Complex64::new(0.0, -1.0)],
    ];

    let layout = circuit.layout();
    apply_ancilla_gate(&mut joint, d, &hadamard);
    for gate in circuit.gates() {
        if let Gate::ControlledSwap { rail_a, rail_b } = gate {
            let pa = layout.rail_position(rail_a.copy, rail_a.subsystem);
            let pb = layout.rail_position(rail_b.copy, rail_b.subsystem);
            apply_controlled_swap(&mut joint, d, |y| layout.swap_components(y, pa, pb));
        }
    }
    if part == MeasuredPart::Imaginary {
        apply_ancilla_gate(&mut joint, d, &phase_adjoint);
    }
    apply_ancilla_gate(&mut joint, d, &hadamard);

    let mut z = 0.0;
    for x in 0..d {
        z += joint[(x, x)].re;
        z -= joint[(d + x, d + x)].re;
    }
    Ok(z)
}

/// rho -> (g (x) I) rho (g (x) I)^dagger for a single-qubit gate g on the ancilla.
fn apply_ancilla_gate(joint: &mut ComplexMatrix, d: usize, g: &[[Complex64; 2]; 2]) {
    let jd = 2 * d;
    let mut out = ComplexMatrix::zeros(jd, jd);
    for a in 0..2 {
        for b in 0..2 {
            for ap in 0..2 {
                let ga = g[a][ap];
                if ga == Complex64::ZERO {
                    continue;
                }
                for bp in 0..2 {
                    let w = ga * g[b][bp].conj();
                    if w == Complex64::ZERO {
                        continue;
                    }
                    for x in 0..d {
                        for y in 0..d {
                            out[(a * d + x, b * d + y)] += w * joint[(ap * d + x, bp * d + y)];
                        }
                    }
                }
            }
        }
    }
    *joint = out;
}

/// rho -> P rho P^dagger for the involution P that applies `swap` to the data
/// index on the ancilla-1 branch and leaves the ancilla-0 branch alone.
fn apply_controlled_swap(joint: &mut ComplexMatrix, d: usize, swap: impl Fn(usize) -> usize) {
    let jd = 2 * d;
    let mut pi: Vec<usize> = (0..jd).collect();
    for x in 0..d {
        pi[d + x] = d + swap(x);
    }
    let mut out = ComplexMatrix::zeros(jd, jd);
    for u in 0..jd {
        for v in 0..jd {
            out[(u, v)] = joint[(pi[u], pi[v])];
        }
    }
    *joint = out;
}
