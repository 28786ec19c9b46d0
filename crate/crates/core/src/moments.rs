//! Moment-measurement campaigns.
//!
//! A campaign runs the k-th moment circuit for k = 2..=d1*d2 on a bipartite
//! state and assembles the power sums p_k. The first moment is never
//! measured: the partial transpose preserves the trace, so p_1 = 1 is set
//! directly and one circuit is saved per campaign.

use serde::{Deserialize, Serialize};

use crate::circuits::{
    build_moment_circuit, run_exact, run_shots, total_copies, MeasuredPart, MomentTarget,
};
use crate::error::{Error, Result};
use crate::jsonfmt;
use crate::linalg::{SubsystemShape, ARITH_TOL, PHYS_TOL};
use crate::states::DensityMatrix;

/// Where a moment vector came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Exact,
    Shots,
}

/// How to execute a campaign.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Shots { shots: u64, seed: u64 },
}

/// Power sums p_1..p_n with per-entry standard errors (zero in exact mode).
///
/// Valid moments of a density-matrix partial transpose always satisfy
/// |p_k| <= 1, since the spectrum lies in [-1/2, 1]; construction enforces
/// that bound (with tolerance) along with p_1 = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentVector {
    p: Vec<f64>,
    sigma: Vec<f64>,
    source: Source,
}

impl MomentVector {
    pub fn new(p: Vec<f64>, sigma: Vec<f64>, source: Source) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidMoments("no moments given".into()));
        }
        if sigma.len() != p.len() {
            return Err(Error::InvalidMoments(format!(
                "{} moments but {} standard errors",
                p.len(),
                sigma.len()
            )));
        }
        if (p[0] - 1.0).abs() > ARITH_TOL {
            return Err(Error::InvalidMoments(format!(
                "p_1 is {}, but the first moment is fixed at 1",
                p[0]
            )));
        }
        for (i, &pk) in p.iter().enumerate() {
            if pk.abs() > 1.0 + PHYS_TOL || !pk.is_finite() {
                return Err(Error::InvalidMoments(format!(
                    "p_{} = {} is outside [-1, 1]",
                    i + 1,
                    pk
                )));
            }
        }
        if sigma.iter().any(|&s| s < 0.0 || !s.is_finite()) {
            return Err(Error::InvalidMoments("negative standard error".into()));
        }
        let mut p = p;
        p[0] = 1.0;
        Ok(Self { p, sigma, source })
    }

    /// Number of moments, equal to the spectrum dimension they determine.
    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn source(&self) -> Source {
        self.source
    }

    /// 1-based accessor: moment(k) = p_k.
    pub fn moment(&self, k: usize) -> f64 {
        self.p[k - 1]
    }

    pub fn max_sigma(&self) -> f64 {
        self.sigma.iter().copied().fold(0.0, f64::max)
    }
}

/// Derives the per-circuit sampling seed for circuit k from the campaign
/// seed (one SplitMix64 step, so neighbouring k decorrelate).
fn child_seed(seed: u64, k: usize) -> u64 {
    let mut z = seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn measure_moments(
    rho: &DensityMatrix,
    target: MomentTarget,
    mode: Mode,
) -> Result<MomentVector> {
    let shape = rho.shape();
    if shape.subsystem_count() != 2 {
        return Err(Error::NotBipartite(shape.subsystem_count()));
    }
    let n = shape.total_dim();
    let mut p = vec![0.0; n];
    let mut sigma = vec![0.0; n];
    p[0] = 1.0;
    for k in 2..=n {
        let circuit = build_moment_circuit(k, shape, target, MeasuredPart::Real)?;
        match mode {
            Mode::Exact => {
                p[k - 1] = run_exact(&circuit, rho)?.re;
            }
            Mode::Shots { shots, seed } => {
                let est = run_shots(&circuit, rho, shots, child_seed(seed, k))?;
                p[k - 1] = est.estimate;
                sigma[k - 1] = est.stderr;
            }
        }
    }
    let source = match mode {
        Mode::Exact => Source::Exact,
        Mode::Shots { .. } => Source::Shots,
    };
    MomentVector::new(p, sigma, source)
}

/// Moments of the partial transpose, Tr((rho^T2)^k) for k = 1..=d1*d2.
pub fn measure_pt_moments(rho: &DensityMatrix, mode: Mode) -> Result<MomentVector> {
    measure_moments(rho, MomentTarget::PartialTranspose, mode)
}

/// Plain moments Tr(rho^k) for k = 1..=d1*d2.
pub fn measure_plain_moments(rho: &DensityMatrix, mode: Mode) -> Result<MomentVector> {
    measure_moments(rho, MomentTarget::Plain, mode)
}

/// Copies consumed by a full campaign on this shape.
pub fn campaign_copy_cost(shape: &SubsystemShape) -> Result<usize> {
    total_copies(shape)
}

/// Shots per circuit for a target eigenvalue error, from a conservative
/// uniform moment-error budget eps_p = target / (n 2^n). This is a worst-case
/// heuristic; actual coverage is established empirically by the tests.
pub fn shot_planner(target_eig_error: f64, shape: &SubsystemShape) -> Result<u64> {
    if target_eig_error <= 0.0 || !target_eig_error.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "target eigenvalue error must be positive, got {target_eig_error}"
        )));
    }
    let n = shape.total_dim() as f64;
    let eps = target_eig_error / (n * 2f64.powi(shape.total_dim() as i32));
    let shots = (1.0 / (eps * eps)).ceil();
    Ok((shots as u64).max(100))
}

/// A finished campaign in its export form:
/// `{shape, source, p, sigma, copies_per_run, total_copies}`.
///
/// `copies_per_run` lists the cost of each circuit actually run (k = 2..=n);
/// p_1 consumes no copies.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CampaignResult {
    pub shape: Vec<usize>,
    pub source: Source,
    pub p: Vec<f64>,
    pub sigma: Vec<f64>,
    pub copies_per_run: Vec<usize>,
    pub total_copies: usize,
}

impl CampaignResult {
    pub fn to_json(&self) -> String {
        jsonfmt::to_string(&serde_json::to_value(self).expect("campaign serializes"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let result: CampaignResult = serde_json::from_str(text)?;
        result.moment_vector()?; // validate on load
        result.subsystem_shape()?;
        Ok(result)
    }

    pub fn moment_vector(&self) -> Result<MomentVector> {
        MomentVector::new(self.p.clone(), self.sigma.clone(), self.source)
    }

    pub fn subsystem_shape(&self) -> Result<SubsystemShape> {
        SubsystemShape::new(self.shape.clone())
    }
}

/// Runs a full campaign and packages the result for export.
pub fn measure_campaign(
    rho: &DensityMatrix,
    target: MomentTarget,
    mode: Mode,
) -> Result<CampaignResult> {
    let moments = measure_moments(rho, target, mode)?;
    let n = moments.n();
    Ok(CampaignResult {
        shape: rho.shape().dims().to_vec(),
        source: moments.source(),
        p: moments.p().to_vec(),
        sigma: moments.sigma().to_vec(),
        copies_per_run: (2..=n).collect(),
        total_copies: campaign_copy_cost(rho.shape())?,
    })
}
