//! Interferometer circuits with controlled-permutation payloads.
//!
//! A circuit holds an ancilla qubit plus `k` copies of the state, one rail
//! per (copy, subsystem) pair. The ancilla is prepared with a Hadamard, the
//! payload applies a permutation of rails as controlled-SWAP gates, and a
//! final Hadamard (optionally preceded by an adjoint phase gate) turns the
//! ancilla's <Z> into the real (or imaginary) part of Tr(U rho^(x)k).
//!
//! Two independent execution backends are provided: a dense simulation of
//! the joint density matrix including the ancilla, and a tensor-contraction
//! evaluation that never materializes the joint space. They must agree; the
//! tests hold them to 1e-10.

mod contract;
mod dense;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::jsonfmt;
use crate::linalg::{ComplexMatrix, SubsystemShape};
use crate::states::DensityMatrix;

/// Upper bound on the joint dimension (ancilla included) the dense backend
/// will materialize.
pub const DENSE_JOINT_CAP: usize = 4096;
/// Upper bound on the data dimension for materializing a payload unitary.
pub const UNITARY_DIM_CAP: usize = 4096;
/// `Backend::Auto` prefers the dense simulation up to this joint dimension.
const AUTO_DENSE_MAX_JOINT: usize = 1024;

/// Address of one input rail: copy and subsystem are both 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rail {
    pub copy: usize,
    pub subsystem: usize,
    pub local_dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    AncillaHadamard,
    AncillaPhaseAdjoint,
    ControlledSwap { rail_a: Rail, rail_b: Rail },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasuredPart {
    Real,
    Imaginary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Handedness {
    Forward,
    Inverse,
}

/// What a moment circuit measures: plain moments Tr(rho^k) or moments of the
/// partial transpose Tr((rho^T2)^k).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentTarget {
    Plain,
    PartialTranspose,
}

/// One permutation of copy indices per subsystem, stored as 1-based forward
/// maps: subsystem j sends the content of copy c to copy sigma_j(c).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationSpec {
    perms: Vec<Vec<usize>>,
}

impl PermutationSpec {
    pub fn new(perms: Vec<Vec<usize>>) -> Result<Self> {
        if perms.is_empty() {
            return Err(Error::InvalidParameter(
                "permutation spec needs at least one subsystem".into(),
            ));
        }
        let k = perms[0].len();
        for perm in &perms {
            if perm.len() != k || k == 0 {
                return Err(Error::InvalidParameter(
                    "all subsystem permutations must cover the same copies".into(),
                ));
            }
            let mut seen = vec![false; k];
            for &image in perm {
                if image == 0 || image > k || seen[image - 1] {
                    return Err(Error::InvalidPermutation {
                        perm: perm.clone(),
                        n: k,
                    });
                }
                seen[image - 1] = true;
            }
        }
        Ok(Self { perms })
    }

    pub fn identity(copies: usize, subsystems: usize) -> Self {
        Self {
            perms: vec![(1..=copies).collect(); subsystems],
        }
    }

    pub fn copies(&self) -> usize {
        self.perms[0].len()
    }

    pub fn subsystem_count(&self) -> usize {
        self.perms.len()
    }

    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }

    pub fn is_identity(&self) -> bool {
        self.perms
            .iter()
            .all(|perm| perm.iter().enumerate().all(|(i, &v)| v == i + 1))
    }

    /// 0-based inverse maps: `inv[j][c]` is the copy whose content lands on
    /// copy `c` of subsystem `j`.
    pub(crate) fn inverses(&self) -> Vec<Vec<usize>> {
        self.perms
            .iter()
            .map(|perm| {
                let mut inv = vec![0; perm.len()];
                for (c, &image) in perm.iter().enumerate() {
                    inv[image - 1] = c;
                }
                inv
            })
            .collect()
    }

    /// The permutation of composite data basis states implemented by this
    /// spec: basis state y maps to the state whose (copy c, subsystem j)
    /// component is y's component at (sigma_j^{-1}(c), j).
    pub fn basis_permutation(&self, shape: &SubsystemShape) -> Vec<usize> {
        let k = self.copies();
        let s = self.subsystem_count();
        assert_eq!(s, shape.subsystem_count());
        let layout = RailLayout::new(k, shape);
        let inv = self.inverses();
        let mut out = Vec::with_capacity(layout.data_dim);
        let mut comps = vec![0usize; k * s];
        for y in 0..layout.data_dim {
            layout.decode(y, &mut comps);
            let mut z = 0;
            for c in 0..k {
                for j in 0..s {
                    z += comps[inv[j][c] * s + j] * layout.strides[c * s + j];
                }
            }
            out.push(z);
        }
        out
    }
}

/// Rail ordering: ancilla first (handled by the backends), then copies in
/// increasing index, subsystems in increasing index within a copy.
pub(crate) struct RailLayout {
    pub subsystems: usize,
    pub dims: Vec<usize>,
    pub strides: Vec<usize>,
    pub data_dim: usize,
}

impl RailLayout {
    pub fn new(copies: usize, shape: &SubsystemShape) -> Self {
        let subsystems = shape.subsystem_count();
        let mut dims = Vec::with_capacity(copies * subsystems);
        for _ in 0..copies {
            dims.extend_from_slice(shape.dims());
        }
        let mut strides = vec![1usize; dims.len()];
        for p in (0..dims.len().saturating_sub(1)).rev() {
            strides[p] = strides[p + 1] * dims[p + 1];
        }
        let data_dim = dims.iter().product();
        Self {
            subsystems,
            dims,
            strides,
            data_dim,
        }
    }

    pub fn rail_position(&self, copy: usize, subsystem: usize) -> usize {
        (copy - 1) * self.subsystems + (subsystem - 1)
    }

    pub fn decode(&self, index: usize, comps: &mut [usize]) {
        for p in 0..self.dims.len() {
            comps[p] = (index / self.strides[p]) % self.dims[p];
        }
    }

    /// Exchanges the components of two rails within a composite index.
    pub fn swap_components(&self, index: usize, pos_a: usize, pos_b: usize) -> usize {
        let (sa, da) = (self.strides[pos_a], self.dims[pos_a]);
        let (sb, db) = (self.strides[pos_b], self.dims[pos_b]);
        debug_assert_eq!(da, db);
        let a = (index / sa) % da;
        let b = (index / sb) % db;
        index - a * sa - b * sb + b * sa + a * sb
    }
}

/// An interferometer circuit over an ancilla and `copies` copies of a state
/// with the given subsystem shape.
#[derive(Clone, Debug)]
pub struct Circuit {
    copies: usize,
    shape: SubsystemShape,
    gates: Vec<Gate>,
    measured_part: MeasuredPart,
    spec: PermutationSpec,
}

impl Circuit {
    /// Builds the circuit realizing `spec` as controlled-SWAP gates between
    /// the interferometer's Hadamard brackets.
    pub fn new(
        copies: usize,
        shape: SubsystemShape,
        spec: PermutationSpec,
        measured_part: MeasuredPart,
    ) -> Result<Self> {
        if spec.copies() != copies || spec.subsystem_count() != shape.subsystem_count() {
            return Err(Error::InvalidParameter(format!(
                "permutation spec covers {} copies x {} subsystems, circuit wants {} x {}",
                spec.copies(),
                spec.subsystem_count(),
                copies,
                shape.subsystem_count()
            )));
        }
        let mut gates = vec![Gate::AncillaHadamard];
        for (j, perm) in spec.perms().iter().enumerate() {
            let local_dim = shape.dims()[j];
            for (a, b) in decompose_into_swaps(perm) {
                gates.push(Gate::ControlledSwap {
                    rail_a: Rail {
                        copy: a,
                        subsystem: j + 1,
                        local_dim,
                    },
                    rail_b: Rail {
                        copy: b,
                        subsystem: j + 1,
                        local_dim,
                    },
                });
            }
        }
        if measured_part == MeasuredPart::Imaginary {
            gates.push(Gate::AncillaPhaseAdjoint);
        }
        gates.push(Gate::AncillaHadamard);
        Ok(Self {
            copies,
            shape,
            gates,
            measured_part,
            spec,
        })
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn shape(&self) -> &SubsystemShape {
        &self.shape
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn measured_part(&self) -> MeasuredPart {
        self.measured_part
    }

    pub fn permutation_spec(&self) -> &PermutationSpec {
        &self.spec
    }

    /// Dimension of the data space (all rails, ancilla excluded).
    pub fn data_dim(&self) -> usize {
        self.shape.total_dim().pow(self.copies as u32)
    }

    /// Dimension of the joint space including the ancilla.
    pub fn joint_dim(&self) -> usize {
        2 * self.data_dim()
    }

    pub(crate) fn layout(&self) -> RailLayout {
        RailLayout::new(self.copies, &self.shape)
    }

    /// Number of controlled-SWAP gates in the payload.
    pub fn cswap_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, Gate::ControlledSwap { .. }))
            .count()
    }

    /// The permutation of data basis states obtained by composing the
    /// controlled-SWAP payload with the ancilla fixed to 1.
    pub fn payload_permutation(&self) -> Vec<usize> {
        let layout = self.layout();
        (0..layout.data_dim)
            .map(|y| {
                let mut z = y;
                for gate in &self.gates {
                    if let Gate::ControlledSwap { rail_a, rail_b } = gate {
                        let pa = layout.rail_position(rail_a.copy, rail_a.subsystem);
                        let pb = layout.rail_position(rail_b.copy, rail_b.subsystem);
                        z = layout.swap_components(z, pa, pb);
                    }
                }
                z
            })
            .collect()
    }

    /// Structural invariants: Hadamard brackets, phase-gate placement, and
    /// well-formed controlled-SWAP rails.
    pub fn validate(&self) -> Result<()> {
        let n = self.gates.len();
        if n < 2
            || self.gates[0] != Gate::AncillaHadamard
            || self.gates[n - 1] != Gate::AncillaHadamard
        {
            return Err(Error::InvalidParameter(
                "circuit must begin and end with an ancilla Hadamard".into(),
            ));
        }
        let phase_positions: Vec<usize> = self
            .gates
            .iter()
            .enumerate()
            .filter(|(_, g)| **g == Gate::AncillaPhaseAdjoint)
            .map(|(i, _)| i)
            .collect();
        match self.measured_part {
            MeasuredPart::Real => {
                if !phase_positions.is_empty() {
                    return Err(Error::InvalidParameter(
                        "real-part circuit must not contain a phase gate".into(),
                    ));
                }
            }
            MeasuredPart::Imaginary => {
                if phase_positions != [n - 2] {
                    return Err(Error::InvalidParameter(
                        "imaginary-part circuit needs exactly one phase gate before the final Hadamard"
                            .into(),
                    ));
                }
            }
        }
        for gate in &self.gates[1..n - 1] {
            match gate {
                Gate::AncillaHadamard => {
                    return Err(Error::InvalidParameter(
                        "ancilla Hadamard inside the payload".into(),
                    ))
                }
                Gate::AncillaPhaseAdjoint => {}
                Gate::ControlledSwap { rail_a, rail_b } => {
                    for rail in [rail_a, rail_b] {
                        if rail.copy == 0
                            || rail.copy > self.copies
                            || rail.subsystem == 0
                            || rail.subsystem > self.shape.subsystem_count()
                            || rail.local_dim != self.shape.dims()[rail.subsystem - 1]
                        {
                            return Err(Error::InvalidParameter(format!(
                                "rail (copy {}, subsystem {}) out of range",
                                rail.copy, rail.subsystem
                            )));
                        }
                    }
                    if rail_a.subsystem != rail_b.subsystem {
                        return Err(Error::InvalidParameter(
                            "controlled swaps must pair rails of the same subsystem".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Export format: `{copies, dims, measured_part, gates: [...]}` with the
    /// gates in application order.
    pub fn to_json_value(&self) -> serde_json::Value {
        let gates: Vec<serde_json::Value> = self
            .gates
            .iter()
            .map(|gate| match gate {
                Gate::AncillaHadamard => json!({"kind": "AncillaHadamard"}),
                Gate::AncillaPhaseAdjoint => json!({"kind": "AncillaPhaseAdjoint"}),
                Gate::ControlledSwap { rail_a, rail_b } => json!({
                    "kind": "ControlledSwap",
                    "railA": {"copy": rail_a.copy, "subsystem": rail_a.subsystem},
                    "railB": {"copy": rail_b.copy, "subsystem": rail_b.subsystem},
                }),
            })
            .collect();
        json!({
            "copies": self.copies,
            "dims": self.shape.dims(),
            "measured_part": match self.measured_part {
                MeasuredPart::Real => "Real",
                MeasuredPart::Imaginary => "Imaginary",
            },
            "gates": gates,
        })
    }

    pub fn to_json(&self) -> String {
        jsonfmt::to_string(&self.to_json_value())
    }
}

/// Decomposes a 1-based permutation of copies into transpositions, returned
/// in application order.
///
/// The forward k-cycle (1 -> 2 -> ... -> k -> 1) becomes the adjacent swaps
/// (k-1,k) ... (2,3) (1,2); its inverse uses the reversed order. Any other
/// permutation is split into cycles anchored at their smallest element, each
/// decomposed by the same cascade.
fn decompose_into_swaps(perm: &[usize]) -> Vec<(usize, usize)> {
    let k = perm.len();
    let is_inverse_cycle =
        k >= 2 && (1..=k).all(|c| perm[c - 1] == if c == 1 { k } else { c - 1 });
    if is_inverse_cycle {
        return (1..k).map(|c| (c, c + 1)).collect();
    }
    let mut swaps = Vec::new();
    let mut seen = vec![false; k + 1];
    for start in 1..=k {
        if seen[start] || perm[start - 1] == start {
            seen[start] = true;
            continue;
        }
        let mut cycle = vec![start];
        seen[start] = true;
        let mut cur = perm[start - 1];
        while cur != start {
            cycle.push(cur);
            seen[cur] = true;
            cur = perm[cur - 1];
        }
        for i in (1..cycle.len()).rev() {
            let (a, b) = (cycle[i - 1], cycle[i]);
            swaps.push((a.min(b), a.max(b)));
        }
    }
    swaps
}

/// Cyclic permutation spec: each subsystem gets the k-cycle
/// (1 -> 2 -> ... -> k -> 1) or its inverse, per its handedness.
pub fn cyclic_spec(copies: usize, subsystems: usize, handedness: &[Handedness]) -> PermutationSpec {
    assert!(copies >= 1, "need at least one copy");
    assert_eq!(handedness.len(), subsystems, "one handedness per subsystem");
    let forward: Vec<usize> = (1..=copies).map(|c| c % copies + 1).collect();
    let inverse: Vec<usize> = (1..=copies).map(|c| (c + copies - 2) % copies + 1).collect();
    let perms = handedness
        .iter()
        .map(|h| match h {
            Handedness::Forward => forward.clone(),
            Handedness::Inverse => inverse.clone(),
        })
        .collect();
    PermutationSpec::new(perms).expect("cycles are bijections")
}

/// Builds the k-th moment circuit.
///
/// Plain moments use same-handed cycles on every subsystem; partial-transpose
/// moments (bipartite only) use a forward cycle on subsystem 1 and an inverse
/// cycle on subsystem 2. k = 1 is rejected: the first moment is fixed at 1 by
/// trace preservation and needs no circuit.
pub fn build_moment_circuit(
    copies: usize,
    shape: &SubsystemShape,
    target: MomentTarget,
    part: MeasuredPart,
) -> Result<Circuit> {
    if copies < 2 {
        return Err(Error::TooFewCopies(copies));
    }
    let s = shape.subsystem_count();
    let handedness = match target {
        MomentTarget::Plain => vec![Handedness::Forward; s],
        MomentTarget::PartialTranspose => {
            if s != 2 {
                return Err(Error::NotBipartite(s));
            }
            vec![Handedness::Forward, Handedness::Inverse]
        }
    };
    let spec = cyclic_spec(copies, s, &handedness);
    Circuit::new(copies, shape.clone(), spec, part)
}

/// Materializes the payload permutation as a 0/1 matrix on the data space
/// (ancilla excluded).
pub fn circuit_unitary(circuit: &Circuit) -> Result<ComplexMatrix> {
    let dim = circuit.data_dim();
    if dim > UNITARY_DIM_CAP {
        return Err(Error::DenseCapExceeded {
            dim,
            cap: UNITARY_DIM_CAP,
        });
    }
    let perm = circuit.payload_permutation();
    let mut u = ComplexMatrix::zeros(dim, dim);
    for (y, &image) in perm.iter().enumerate() {
        u[(image, y)] = Complex64::ONE;
    }
    Ok(u)
}

/// Execution backend for [`run_exact`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    /// Dense when the joint dimension is small, contraction otherwise.
    Auto,
    Dense,
    Contraction,
}

/// Exact interferometer expectation Tr(U rho^(x)k) with the default backend.
pub fn run_exact(circuit: &Circuit, rho: &DensityMatrix) -> Result<Complex64> {
    run_exact_with(circuit, rho, Backend::Auto)
}

/// Exact interferometer expectation with an explicit backend choice.
pub fn run_exact_with(
    circuit: &Circuit,
    rho: &DensityMatrix,
    backend: Backend,
) -> Result<Complex64> {
    if rho.shape() != circuit.shape() {
        return Err(Error::StateShapeMismatch {
            state: rho.shape().dims().to_vec(),
            expected: circuit.shape().dims().to_vec(),
        });
    }
    match backend {
        Backend::Dense => {
            let joint = circuit.joint_dim();
            if joint > DENSE_JOINT_CAP {
                return Err(Error::DenseCapExceeded {
                    dim: joint,
                    cap: DENSE_JOINT_CAP,
                });
            }
            dense::expectation(circuit, rho)
        }
        Backend::Contraction => {
            contract::permutation_expectation(circuit.permutation_spec(), circuit.shape(), rho)
        }
        Backend::Auto => {
            if circuit.joint_dim() <= AUTO_DENSE_MAX_JOINT {
                dense::expectation(circuit, rho)
            } else {
                contract::permutation_expectation(
                    circuit.permutation_spec(),
                    circuit.shape(),
                    rho,
                )
            }
        }
    }
}

/// A finite-shot estimate of the circuit's measured part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShotEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Samples the ancilla measurement `shots` times.
///
/// The ancilla outcome is exactly Bernoulli with success probability
/// (1 + m) / 2 where m is the circuit's measured part of the exact
/// expectation, so the sampler draws from that distribution directly instead
/// of trajectory-simulating every gate. Deterministic per seed (ChaCha8).
pub fn run_shots(
    circuit: &Circuit,
    rho: &DensityMatrix,
    shots: u64,
    seed: u64,
) -> Result<ShotEstimate> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let value = run_exact(circuit, rho)?;
    let m = match circuit.measured_part() {
        MeasuredPart::Real => value.re,
        MeasuredPart::Imaginary => value.im,
    };
    let q = ((1.0 + m) / 2.0).clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut successes: u64 = 0;
    for _ in 0..shots {
        if rng.random::<f64>() < q {
            successes += 1;
        }
    }
    let estimate = 2.0 * (successes as f64 / shots as f64) - 1.0;
    let stderr = ((1.0 - estimate * estimate).max(0.0) / shots as f64).sqrt();
    Ok(ShotEstimate { estimate, stderr })
}

/// Copies of the state consumed by one run of the k-th moment circuit.
pub fn copies_consumed(k: usize) -> usize {
    k
}

/// Total copies consumed by a full campaign k = 2..=d1*d2 on a bipartite
/// shape: sum k = d1^2 d2^2 / 2 + d1 d2 / 2 - 1.
pub fn total_copies(shape: &SubsystemShape) -> Result<usize> {
    if shape.subsystem_count() != 2 {
        return Err(Error::NotBipartite(shape.subsystem_count()));
    }
    let n = shape.total_dim();
    Ok(n * (n + 1) / 2 - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, partial_transpose, power_trace};
    use crate::states::{bell_state, random_density};

    fn shape22() -> SubsystemShape {
        SubsystemShape::bipartite(2, 2).unwrap()
    }

    #[test]
    fn cyclic_spec_cases() {
        // k = 2: both handednesses give the transposition (1 2)
        let f = cyclic_spec(2, 1, &[Handedness::Forward]);
        let i = cyclic_spec(2, 1, &[Handedness::Inverse]);
        assert_eq!(f.perms(), i.perms());
        assert_eq!(f.perms()[0], vec![2, 1]);

        // k = 3: forward (1->2, 2->3, 3->1), inverse is its inverse
        let f = cyclic_spec(3, 1, &[Handedness::Forward]);
        let i = cyclic_spec(3, 1, &[Handedness::Inverse]);
        assert_eq!(f.perms()[0], vec![2, 3, 1]);
        assert_eq!(i.perms()[0], vec![3, 1, 2]);

        // composing forward and inverse gives the identity
        let mut composed = vec![0usize; 3];
        for c in 1..=3 {
            composed[c - 1] = f.perms()[0][i.perms()[0][c - 1] - 1];
        }
        assert_eq!(composed, vec![1, 2, 3]);
    }

    #[test]
    fn moment_circuit_gate_counts() {
        // k = 2: partial-transpose and plain circuits are identical
        let pt2 = build_moment_circuit(2, &shape22(), MomentTarget::PartialTranspose, MeasuredPart::Real)
            .unwrap();
        let plain2 =
            build_moment_circuit(2, &shape22(), MomentTarget::Plain, MeasuredPart::Real).unwrap();
        assert_eq!(pt2.gates(), plain2.gates());

        // a 3-cycle needs 2 transpositions per subsystem
        let pt3 = build_moment_circuit(3, &shape22(), MomentTarget::PartialTranspose, MeasuredPart::Real)
            .unwrap();
        assert_eq!(pt3.cswap_count(), 4);

        // a 4-cycle needs 3 transpositions per subsystem
        let pt4 = build_moment_circuit(4, &shape22(), MomentTarget::PartialTranspose, MeasuredPart::Real)
            .unwrap();
        assert_eq!(pt4.cswap_count(), 6);

        pt2.validate().unwrap();
        pt3.validate().unwrap();
        pt4.validate().unwrap();
    }

    #[test]
    fn rejects_too_few_copies_and_non_bipartite_pt() {
        assert!(matches!(
            build_moment_circuit(1, &shape22(), MomentTarget::PartialTranspose, MeasuredPart::Real),
            Err(Error::TooFewCopies(1))
        ));
        let shape3 = SubsystemShape::new(vec![2, 2, 2]).unwrap();
        assert!(matches!(
            build_moment_circuit(2, &shape3, MomentTarget::PartialTranspose, MeasuredPart::Real),
            Err(Error::NotBipartite(3))
        ));
        // plain moments are fine on three subsystems
        build_moment_circuit(2, &shape3, MomentTarget::Plain, MeasuredPart::Real).unwrap();
    }

    #[test]
    fn imaginary_part_circuit_structure() {
        let c = build_moment_circuit(3, &shape22(), MomentTarget::PartialTranspose, MeasuredPart::Imaginary)
            .unwrap();
        c.validate().unwrap();
        let n = c.gates().len();
        assert_eq!(c.gates()[n - 2], Gate::AncillaPhaseAdjoint);
    }

    #[test]
    fn gate_list_matches_permutation_spec() {
        // composing the controlled-SWAP payload reproduces the spec's
        // permutation for every circuit up to k = 4 on two qubits
        for k in 2..=4 {
            for target in [MomentTarget::Plain, MomentTarget::PartialTranspose] {
                let c = build_moment_circuit(k, &shape22(), target, MeasuredPart::Real).unwrap();
                assert_eq!(
                    c.payload_permutation(),
                    c.permutation_spec().basis_permutation(c.shape()),
                    "k = {k}, target {target:?}"
                );
            }
        }
    }

    #[test]
    fn general_permutation_decomposition_is_sound() {
        // a permutation with a fixed point and a 3-cycle: 1->3, 3->4, 4->1, 2 fixed
        let spec = PermutationSpec::new(vec![vec![3, 2, 4, 1]]).unwrap();
        let shape = SubsystemShape::new(vec![2]).unwrap();
        let c = Circuit::new(4, shape.clone(), spec.clone(), MeasuredPart::Real).unwrap();
        assert_eq!(c.payload_permutation(), spec.basis_permutation(&shape));
    }

    #[test]
    fn unitary_of_two_copy_swap() {
        // k = 2 on a single qubit: the payload is SWAP and Tr(rho^(x)2 U) = Tr(rho^2)
        let shape = SubsystemShape::new(vec![2]).unwrap();
        let c = build_moment_circuit(2, &shape, MomentTarget::Plain, MeasuredPart::Real).unwrap();
        let u = circuit_unitary(&c).unwrap();

        let rho = random_density(&shape, 2, 5).unwrap();
        let r2 = kron(rho.matrix(), rho.matrix());
        let lhs = u.matmul(&r2).trace();
        let rhs = power_trace(rho.matrix(), 2);
        assert!((lhs - rhs).norm() < 1e-12);

        // permutation matrices are unitary
        let id = u.dagger().matmul(&u);
        assert!(id.approx_eq(&ComplexMatrix::identity(4), 1e-12));
    }

    #[test]
    fn identity_spec_gives_identity_unitary() {
        let shape = shape22();
        let spec = PermutationSpec::identity(2, 2);
        let c = Circuit::new(2, shape, spec, MeasuredPart::Real).unwrap();
        let u = circuit_unitary(&c).unwrap();
        assert!(u.approx_eq(&ComplexMatrix::identity(16), 0.0));
        assert_eq!(c.cswap_count(), 0);
    }

    #[test]
    fn run_exact_closed_forms() {
        let bell = bell_state();

        // purity of a pure state
        let plain2 =
            build_moment_circuit(2, &shape22(), MomentTarget::Plain, MeasuredPart::Real).unwrap();
        let v = run_exact(&plain2, &bell).unwrap();
        assert!((v.re - 1.0).abs() < 1e-10 && v.im.abs() < 1e-10);

        // third PT moment of the Bell state: 3 (1/2)^3 + (-1/2)^3 = 1/4
        let pt3 = build_moment_circuit(3, &shape22(), MomentTarget::PartialTranspose, MeasuredPart::Real)
            .unwrap();
        let v = run_exact(&pt3, &bell).unwrap();
        assert!((v.re - 0.25).abs() < 1e-10 && v.im.abs() < 1e-10);

        // maximally mixed: PT fixed point, Tr((I/4)^3) = 4^{-2}
        let mixed = werner_mixed();
        let v = run_exact(&pt3, &mixed).unwrap();
        assert!((v.re - 0.0625).abs() < 1e-10);
    }

    fn werner_mixed() -> DensityMatrix {
        crate::states::werner_state(0.0).unwrap()
    }

    #[test]
    fn backends_agree_and_match_oracle() {
        let shape = shape22();
        for seed in 0..8 {
            let rho = random_density(&shape, 4, seed).unwrap();
            let pt = partial_transpose(rho.matrix(), &shape, 2).unwrap();
            for k in 2..=4 {
                for target in [MomentTarget::Plain, MomentTarget::PartialTranspose] {
                    let c = build_moment_circuit(k, &shape, target, MeasuredPart::Real).unwrap();
                    let dense = run_exact_with(&c, &rho, Backend::Dense).unwrap();
                    let contracted = run_exact_with(&c, &rho, Backend::Contraction).unwrap();
                    assert!(
                        (dense - contracted).norm() < 1e-10,
                        "k = {k} seed {seed} target {target:?}"
                    );
                    let oracle = match target {
                        MomentTarget::Plain => power_trace(rho.matrix(), k),
                        MomentTarget::PartialTranspose => power_trace(&pt, k),
                    };
                    assert!((dense - oracle).norm() < 1e-10);
                    assert!(dense.im.abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn contraction_reaches_2x3_moments() {
        let shape = SubsystemShape::bipartite(2, 3).unwrap();
        let rho = random_density(&shape, 4, 9).unwrap();
        let pt = partial_transpose(rho.matrix(), &shape, 2).unwrap();
        for k in 2..=6 {
            let c = build_moment_circuit(k, &shape, MomentTarget::PartialTranspose, MeasuredPart::Real)
                .unwrap();
            let v = run_exact_with(&c, &rho, Backend::Contraction).unwrap();
            let oracle = power_trace(&pt, k);
            assert!((v - oracle).norm() < 1e-10, "k = {k}");
        }
    }

    #[test]
    fn dense_cap_is_enforced() {
        let shape = SubsystemShape::bipartite(2, 3).unwrap();
        let c = build_moment_circuit(5, &shape, MomentTarget::PartialTranspose, MeasuredPart::Real)
            .unwrap();
        let rho = random_density(&shape, 2, 0).unwrap();
        assert!(matches!(
            run_exact_with(&c, &rho, Backend::Dense),
            Err(Error::DenseCapExceeded { .. })
        ));
        // Auto falls back to contraction
        run_exact(&c, &rho).unwrap();
    }

    #[test]
    fn run_exact_rejects_shape_mismatch() {
        let c = build_moment_circuit(2, &shape22(), MomentTarget::Plain, MeasuredPart::Real).unwrap();
        let rho = random_density(&SubsystemShape::bipartite(2, 3).unwrap(), 2, 0).unwrap();
        assert!(matches!(
            run_exact(&c, &rho),
            Err(Error::StateShapeMismatch { .. })
        ));
    }

    #[test]
    fn shot_sampling_contract() {
        let bell = bell_state();
        let plain2 =
            build_moment_circuit(2, &shape22(), MomentTarget::Plain, MeasuredPart::Real).unwrap();
        // m = 1 exactly: degenerate Bernoulli
        let est = run_shots(&plain2, &bell, 1000, 1).unwrap();
        assert_eq!(est.estimate, 1.0);
        assert_eq!(est.stderr, 0.0);

        // Bell k = 3 PT circuit at 1e5 shots: within 5 stderr of 0.25
        let pt3 = build_moment_circuit(3, &shape22(), MomentTarget::PartialTranspose, MeasuredPart::Real)
            .unwrap();
        let est = run_shots(&pt3, &bell, 100_000, 7).unwrap();
        assert!((est.estimate - 0.25).abs() < 5.0 * est.stderr);
        let binom = ((1.0 - 0.25 * 0.25) / 1e5_f64).sqrt();
        assert!((est.stderr - binom).abs() < 0.2 * binom);

        // determinism
        let again = run_shots(&pt3, &bell, 100_000, 7).unwrap();
        assert_eq!(est, again);

        assert!(run_shots(&pt3, &bell, 0, 7).is_err());
    }

    #[test]
    fn copy_accounting() {
        assert_eq!(copies_consumed(3), 3);
        assert_eq!(total_copies(&shape22()).unwrap(), 9);
        assert_eq!(
            total_copies(&SubsystemShape::bipartite(2, 3).unwrap()).unwrap(),
            20
        );
        assert_eq!(
            total_copies(&SubsystemShape::bipartite(3, 3).unwrap()).unwrap(),
            44
        );
        assert!(total_copies(&SubsystemShape::new(vec![2]).unwrap()).is_err());
    }

    #[test]
    fn circuit_json_shape() {
        let c = build_moment_circuit(3, &shape22(), MomentTarget::PartialTranspose, MeasuredPart::Real)
            .unwrap();
        let v = c.to_json_value();
        assert_eq!(v["copies"], 3);
        assert_eq!(v["dims"], serde_json::json!([2, 2]));
        assert_eq!(v["measured_part"], "Real");
        let gates = v["gates"].as_array().unwrap();
        assert_eq!(gates.len(), 6); // H + 4 CSWAPs + H
        assert_eq!(gates[0]["kind"], "AncillaHadamard");
        assert_eq!(gates[1]["kind"], "ControlledSwap");
        assert_eq!(gates[1]["railA"]["copy"], 2);
        assert_eq!(gates[1]["railA"]["subsystem"], 1);
    }

    #[test]
    fn permutation_spec_validation() {
        assert!(PermutationSpec::new(vec![vec![1, 1]]).is_err());
        assert!(PermutationSpec::new(vec![vec![0, 1]]).is_err());
        assert!(PermutationSpec::new(vec![vec![1, 2], vec![1]]).is_err());
        assert!(PermutationSpec::new(vec![]).is_err());
        assert!(PermutationSpec::identity(3, 2).is_identity());
    }
}
