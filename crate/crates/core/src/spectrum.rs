//! Spectrum reconstruction from moments, and the Peres verdict.
//!
//! Newton's identities convert the power sums p_1..p_n into the elementary
//! symmetric polynomials e_1..e_n, i.e. into the coefficients of the
//! characteristic polynomial; its roots (via the companion matrix) are the
//! eigenvalues. The verdict follows the Peres criterion: a negative
//! eigenvalue of the partial transpose certifies entanglement, and a
//! positive partial transpose certifies separability only in 2x2 and 2x3
//! dimensions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonfmt;
use crate::linalg::SubsystemShape;
use crate::moments::{MomentVector, Source};

/// Floor of the realness threshold for root extraction.
const REALNESS_FLOOR: f64 = 1e-6;
/// Default verdict threshold in exact mode.
const EXACT_THRESHOLD: f64 = 1e-8;
/// Bootstrap resamples used to propagate moment noise to the eigenvalues.
const BOOTSTRAP_RESAMPLES: usize = 200;

/// How far an n-fold repeated root of a degree-n polynomial can split under
/// coefficient noise of the given size: O(noise^(1/n)), with headroom.
///
/// Repeated eigenvalues are routine here (Bell: triple root; maximally mixed:
/// n-fold root), so the realness threshold must scale with this or every
/// degenerate spectrum would be misreported as complex.
fn multiplicity_allowance(n: usize, noise: f64) -> f64 {
    if noise <= 0.0 {
        return 0.0;
    }
    let delta = n as f64 * noise;
    10.0 * delta.powf(1.0 / n as f64)
}

fn default_realness(moments: &MomentVector) -> f64 {
    let n = moments.n();
    let exact = REALNESS_FLOOR.max(multiplicity_allowance(n, f64::EPSILON));
    match moments.source() {
        Source::Exact => exact,
        // noisy moments split repeated roots by the same law; anything past
        // half the spectral range is rejected as inconsistent regardless
        Source::Shots => exact
            .max(multiplicity_allowance(n, moments.max_sigma()))
            .min(0.5),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "NPT_Entangled")]
    NptEntangled,
    #[serde(rename = "PPT")]
    Ppt,
    #[serde(rename = "PPT_Inconclusive")]
    PptInconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::NptEntangled => "NPT_Entangled",
            Verdict::Ppt => "PPT",
            Verdict::PptInconclusive => "PPT_Inconclusive",
        })
    }
}

/// A reconstructed spectrum with its diagnostics and verdict.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
    /// Largest |imaginary part| discarded during root extraction.
    pub max_imag_residual: f64,
    /// max_k |p_k(reconstructed) - p_k(input)|.
    pub moment_residual: f64,
    pub verdict: Verdict,
    /// Threshold used for the verdict.
    pub threshold: f64,
}

impl SpectrumReport {
    pub fn to_json(&self) -> String {
        jsonfmt::to_string(&serde_json::to_value(self).expect("report serializes"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

/// Elementary symmetric polynomials e_1..e_n from power sums via Newton's
/// identities: k e_k = sum_{i=1..k} (-1)^{i-1} e_{k-i} p_i, with e_0 = 1.
pub fn newton_elementary(moments: &MomentVector) -> Vec<f64> {
    let n = moments.n();
    let p = moments.p();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for k in 1..=n {
        let mut sum = 0.0;
        for i in 1..=k {
            let term = e[k - i] * p[i - 1];
            if i % 2 == 1 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        e[k] = sum / k as f64;
    }
    e.remove(0);
    e
}

/// Roots of the companion matrix of
/// x^n - e_1 x^{n-1} + e_2 x^{n-2} - ... + (-1)^n e_n.
fn companion_roots(elementary: &[f64]) -> Vec<num_complex::Complex64> {
    let n = elementary.len();
    // monic coefficients: coeff of x^{n-j} is (-1)^j e_j
    let mut coeff = vec![0.0; n]; // coeff[i] multiplies x^i, for i = 0..n-1
    for (j, &ej) in elementary.iter().enumerate() {
        let sign = if (j + 1) % 2 == 0 { 1.0 } else { -1.0 };
        coeff[n - (j + 1)] = sign * ej;
    }
    let companion = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -coeff[i]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion
        .complex_eigenvalues()
        .iter()
        .map(|z| num_complex::Complex64::new(z.re, z.im))
        .collect()
}

/// Real roots of the characteristic polynomial built from e_1..e_n, sorted
/// descending, plus the largest imaginary part discarded on the way.
///
/// Any root whose imaginary part exceeds `realness_threshold` means the
/// moments are inconsistent with a Hermitian spectrum and is an error.
pub fn roots_from_elementary(
    elementary: &[f64],
    realness_threshold: f64,
) -> Result<(Vec<f64>, f64)> {
    let roots = companion_roots(elementary);
    let max_imag = roots.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if max_imag > realness_threshold {
        return Err(Error::Reconstruction(format!(
            "complex root (imaginary part {max_imag:.3e} exceeds {realness_threshold:.3e}): \
             moments are inconsistent with a Hermitian spectrum"
        )));
    }
    let mut real: Vec<f64> = roots.iter().map(|z| z.re).collect();
    real.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok((real, max_imag))
}

/// Peres test on a reconstructed partial-transpose spectrum.
///
/// A minimum eigenvalue below `-threshold` certifies entanglement. Otherwise
/// the state is PPT, which implies separability only for 2x2 and 2x3 shapes;
/// for anything larger the PPT outcome is inconclusive.
pub fn peres_verdict(eigenvalues: &[f64], shape: &SubsystemShape, threshold: f64) -> Verdict {
    let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -threshold {
        return Verdict::NptEntangled;
    }
    let mut dims = shape.dims().to_vec();
    dims.sort_unstable();
    if dims == [2, 2] || dims == [2, 3] {
        Verdict::Ppt
    } else {
        Verdict::PptInconclusive
    }
}

/// Spectral shift of the structural physical approximation to the partial
/// transpose on a d x d system: each eigenvalue maps to
/// (d + lambda) / (d^3 + 1).
///
/// The uniform term contributes d/(d^3+1) and the transpose term scales the
/// input by 1/(d^3+1), so a unit-trace input with lambda >= -1/2 (true for
/// every partial-transpose spectrum) maps to a strictly positive probability
/// vector. This is the noise floor the noiseless circuits avoid.
pub fn spa_shift(eigenvalues: &[f64], d: usize) -> Result<Vec<f64>> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "local dimension must be at least 2, got {d}"
        )));
    }
    if eigenvalues.len() != d * d {
        return Err(Error::InvalidParameter(format!(
            "{} eigenvalues cannot come from a {d}x{d} bipartite system",
            eigenvalues.len()
        )));
    }
    let denom = (d * d * d + 1) as f64;
    Ok(eigenvalues
        .iter()
        .map(|&lambda| (d as f64 + lambda) / denom)
        .collect())
}

/// Options for [`reconstruct_with`]. The defaults resolve per the moment
/// source: realness threshold 1e-6 (exact) or max(1e-6, 10 max sigma)
/// (shots); verdict threshold 1e-8 (exact) or three bootstrap standard
/// errors of the minimum eigenvalue (shots).
#[derive(Clone, Debug)]
pub struct ReconstructOptions {
    pub realness_threshold: Option<f64>,
    pub verdict_threshold: Option<f64>,
    pub bootstrap_seed: u64,
    pub bootstrap_resamples: usize,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self {
            realness_threshold: None,
            verdict_threshold: None,
            bootstrap_seed: 0,
            bootstrap_resamples: BOOTSTRAP_RESAMPLES,
        }
    }
}

/// Reconstructs the spectrum behind a moment vector and issues the verdict,
/// with default options.
pub fn reconstruct(moments: &MomentVector, shape: &SubsystemShape) -> Result<SpectrumReport> {
    reconstruct_with(moments, shape, &ReconstructOptions::default())
}

pub fn reconstruct_with(
    moments: &MomentVector,
    shape: &SubsystemShape,
    options: &ReconstructOptions,
) -> Result<SpectrumReport> {
    if shape.total_dim() != moments.n() {
        return Err(Error::InvalidMoments(format!(
            "{} moments cannot determine a dimension-{} spectrum",
            moments.n(),
            shape.total_dim()
        )));
    }
    let realness = options
        .realness_threshold
        .unwrap_or_else(|| default_realness(moments));
    let elementary = newton_elementary(moments);
    let (eigenvalues, max_imag_residual) = roots_from_elementary(&elementary, realness)?;

    let moment_residual = (1..=moments.n())
        .map(|k| {
            let recon: f64 = eigenvalues.iter().map(|x| x.powi(k as i32)).sum();
            (recon - moments.moment(k)).abs()
        })
        .fold(0.0, f64::max);

    // realizing a conjugate pair as two real roots shifts even power sums by
    // O(imag^2); anything beyond that allowance is a numerical failure
    if moments.source() == Source::Exact {
        let residual_gate = 1e-8_f64.max(10.0 * moments.n() as f64 * max_imag_residual.powi(2));
        if moment_residual > residual_gate {
            return Err(Error::Reconstruction(format!(
                "reconstructed roots reproduce the moments only to {moment_residual:.3e}"
            )));
        }
    }

    let sum: f64 = eigenvalues.iter().sum();
    if (sum - 1.0).abs() > 1e-8 {
        return Err(Error::Reconstruction(format!(
            "reconstructed eigenvalues sum to {sum}, not 1"
        )));
    }
    // loose sanity bounds on a partial-transpose spectrum, scaled by noise
    let bound_tol = realness.max(100.0 * moments.max_sigma());
    if eigenvalues
        .iter()
        .any(|&x| x < -0.5 - bound_tol || x > 1.0 + bound_tol)
    {
        return Err(Error::Reconstruction(format!(
            "eigenvalues {eigenvalues:?} leave the partial-transpose range [-1/2, 1]"
        )));
    }

    let threshold = options.verdict_threshold.unwrap_or(match moments.source() {
        Source::Exact => EXACT_THRESHOLD,
        Source::Shots => {
            let std = bootstrap_min_eigenvalue_std(
                moments,
                options.bootstrap_resamples,
                options.bootstrap_seed,
            );
            EXACT_THRESHOLD.max(3.0 * std)
        }
    });
    let verdict = peres_verdict(&eigenvalues, shape, threshold);
    Ok(SpectrumReport {
        eigenvalues,
        max_imag_residual,
        moment_residual,
        verdict,
        threshold,
    })
}

/// Parametric bootstrap: resample each measured moment from a normal with
/// its reported sigma, reconstruct, and take the sample standard deviation
/// of the minimum eigenvalue. Deterministic per seed (ChaCha8).
fn bootstrap_min_eigenvalue_std(moments: &MomentVector, resamples: usize, seed: u64) -> f64 {
    if resamples < 2 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = moments.n();
    let mut minima = Vec::with_capacity(resamples);
    let mut p = vec![0.0; n];
    for _ in 0..resamples {
        p[0] = 1.0;
        for k in 2..=n {
            let noise: f64 = StandardNormal.sample(&mut rng);
            p[k - 1] = (moments.moment(k) + noise * moments.sigma()[k - 1]).clamp(-1.0, 1.0);
        }
        let resampled = MomentVector::new(p.clone(), vec![0.0; n], Source::Exact)
            .expect("clamped resample is a valid moment vector");
        let elementary = newton_elementary(&resampled);
        // keep real parts regardless of imaginary residual: the bootstrap
        // only measures spread, individual resamples may be noisy
        let min = companion_roots(&elementary)
            .iter()
            .map(|z| z.re)
            .fold(f64::INFINITY, f64::min);
        minima.push(min);
    }
    let mean = minima.iter().sum::<f64>() / minima.len() as f64;
    let var = minima.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (minima.len() - 1) as f64;
    var.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigenvalues, partial_transpose};
    use crate::moments::{measure_pt_moments, Mode};
    use crate::states::{bell_state, random_density, werner_state};

    fn moments_exact(p: Vec<f64>) -> MomentVector {
        let n = p.len();
        MomentVector::new(p, vec![0.0; n], Source::Exact).unwrap()
    }

    #[test]
    fn newton_identity_closed_forms() {
        // power sums of {1/2, 1/2, 1/2, -1/2}
        let e = newton_elementary(&moments_exact(vec![1.0, 1.0, 0.25, 0.25]));
        let expected = [1.0, 0.0, -0.25, -0.0625];
        for (a, b) in e.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }

        // maximally mixed: e_k = binom(4, k) / 4^k
        let e = newton_elementary(&moments_exact(vec![1.0, 0.25, 0.0625, 0.015625]));
        let expected = [1.0, 0.375, 0.0625, 0.00390625];
        for (a, b) in e.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }

        // pure state: spectrum {1, 0, 0, 0}
        let e = newton_elementary(&moments_exact(vec![1.0; 4]));
        let expected = [1.0, 0.0, 0.0, 0.0];
        for (a, b) in e.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn roots_recover_known_spectra() {
        // (x - 1/2)^3 (x + 1/2): the triple root splits by O(eps^(1/3))
        let (roots, residual) =
            roots_from_elementary(&[1.0, 0.0, -0.25, -0.0625], 1e-3).unwrap();
        let expected = [0.5, 0.5, 0.5, -0.5];
        for (a, b) in roots.iter().zip(expected) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
        assert!((roots[3] + 0.5).abs() < 1e-8); // the simple root is sharp
        assert!(residual < 1e-4);

        // (x - 1/4)^4: fourfold root, O(eps^(1/4)) splitting
        let (roots, _) =
            roots_from_elementary(&[1.0, 0.375, 0.0625, 0.00390625], 1e-2).unwrap();
        for r in roots {
            assert!((r - 0.25).abs() < 1e-3);
        }
    }

    #[test]
    fn roots_reject_complex_spectra() {
        // p_2 < 0 is impossible for a real spectrum: x^2 - x + 0.75 has
        // complex roots
        let err = roots_from_elementary(&[1.0, 0.75], REALNESS_FLOOR);
        assert!(matches!(err, Err(Error::Reconstruction(_))));
        // still rejected at the default shots-mode ceiling
        let err = roots_from_elementary(&[1.0, 0.75], 0.5);
        assert!(matches!(err, Err(Error::Reconstruction(_))));
    }

    #[test]
    fn root_sensitivity_to_perturbed_moments_is_mild() {
        // Bell case with 1e-3 noise: the triple root splits by O(1e-3 ^ 1/3),
        // the simple root and the cluster mean stay at O(1e-3)
        let noisy = moments_exact(vec![1.0, 1.0 - 1e-3, 0.25 + 1e-3, 0.25 - 1e-3]);
        let e = newton_elementary(&noisy);
        let (roots, _) = roots_from_elementary(&e, 0.3).unwrap();
        for (a, b) in roots.iter().zip([0.5, 0.5, 0.5, -0.5]) {
            assert!((a - b).abs() < 0.15, "{a} vs {b}");
        }
        assert!((roots[3] + 0.5).abs() < 2e-3);
        let cluster_mean = (roots[0] + roots[1] + roots[2]) / 3.0;
        assert!((cluster_mean - 0.5).abs() < 2e-3);
    }

    #[test]
    fn reconstruct_bell_and_mixed() {
        let shape = SubsystemShape::bipartite(2, 2).unwrap();
        let report = reconstruct(
            &measure_pt_moments(&bell_state(), Mode::Exact).unwrap(),
            &shape,
        )
        .unwrap();
        let expected = [0.5, 0.5, 0.5, -0.5];
        for (a, b) in report.eigenvalues.iter().zip(expected) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}"); // triple root
        }
        assert!((report.min_eigenvalue() + 0.5).abs() < 1e-8);
        assert_eq!(report.verdict, Verdict::NptEntangled);
        assert!(report.moment_residual < 1e-8);

        let mixed = werner_state(0.0).unwrap();
        let report = reconstruct(&measure_pt_moments(&mixed, Mode::Exact).unwrap(), &shape).unwrap();
        for a in &report.eigenvalues {
            assert!((a - 0.25).abs() < 1e-3); // fourfold root
        }
        assert_eq!(report.verdict, Verdict::Ppt);
    }

    #[test]
    fn reconstruct_werner_below_threshold() {
        let shape = SubsystemShape::bipartite(2, 2).unwrap();
        let report = reconstruct(
            &measure_pt_moments(&werner_state(0.3).unwrap(), Mode::Exact).unwrap(),
            &shape,
        )
        .unwrap();
        assert!((report.min_eigenvalue() - 0.025).abs() < 1e-8);
        assert_eq!(report.verdict, Verdict::Ppt);
    }

    #[test]
    fn reconstruct_matches_oracle_eigenvalues() {
        let shape = SubsystemShape::bipartite(2, 2).unwrap();
        for seed in 0..10 {
            let rho = random_density(&shape, 3, seed).unwrap();
            let report = reconstruct(
                &measure_pt_moments(&rho, Mode::Exact).unwrap(),
                &shape,
            )
            .unwrap();
            let oracle =
                hermitian_eigenvalues(&partial_transpose(rho.matrix(), &shape, 2).unwrap())
                    .unwrap();
            for (a, b) in report.eigenvalues.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-8, "seed {seed}");
            }
        }
    }

    #[test]
    fn verdict_rules() {
        let shape22 = SubsystemShape::bipartite(2, 2).unwrap();
        let shape33 = SubsystemShape::bipartite(3, 3).unwrap();
        assert_eq!(
            peres_verdict(&[0.5, 0.5, 0.5, -0.5], &shape22, 1e-8),
            Verdict::NptEntangled
        );
        let uniform9 = vec![1.0 / 9.0; 9];
        assert_eq!(
            peres_verdict(&uniform9, &shape33, 1e-8),
            Verdict::PptInconclusive
        );
        // tiny negative values inside the threshold are clamped to PPT
        assert_eq!(
            peres_verdict(&[0.5, 0.3, 0.2, -1e-12], &shape22, 1e-8),
            Verdict::Ppt
        );
        let shape23 = SubsystemShape::bipartite(2, 3).unwrap();
        assert_eq!(
            peres_verdict(&vec![1.0 / 6.0; 6], &shape23, 1e-8),
            Verdict::Ppt
        );
    }

    #[test]
    fn spa_shift_closed_forms() {
        // d = 2: lambda = -1/2 maps to 1/6
        let shifted = spa_shift(&[0.5, 0.5, 0.5, -0.5], 2).unwrap();
        assert!((shifted[3] - 1.0 / 6.0).abs() < 1e-12);
        for s in &shifted[..3] {
            assert!((s - 5.0 / 18.0).abs() < 1e-12);
        }
        let total: f64 = shifted.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(shifted.iter().all(|&s| s > 0.0));

        // uniform input stays uniform
        let shifted = spa_shift(&[0.25; 4], 2).unwrap();
        assert!(shifted.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-15));

        assert!(spa_shift(&[0.5; 4], 1).is_err());
        assert!(spa_shift(&[0.5; 5], 2).is_err());
    }

    #[test]
    fn shots_mode_bootstrap_threshold() {
        let rho = werner_state(0.5).unwrap();
        let shape = SubsystemShape::bipartite(2, 2).unwrap();
        let moments = measure_pt_moments(
            &rho,
            Mode::Shots {
                shots: 100_000,
                seed: 5,
            },
        )
        .unwrap();
        let report = reconstruct(&moments, &shape).unwrap();
        // true minimum is -0.125, far outside three bootstrap sigmas
        assert_eq!(report.verdict, Verdict::NptEntangled);
        assert!(report.threshold > EXACT_THRESHOLD);
        assert!(report.threshold < 0.125);

        // deterministic given the seed
        let again = reconstruct(&moments, &shape).unwrap();
        assert_eq!(report.eigenvalues, again.eigenvalues);
        assert_eq!(report.threshold, again.threshold);
    }

    #[test]
    fn report_json_round_trip() {
        let shape = SubsystemShape::bipartite(2, 2).unwrap();
        let report = reconstruct(
            &measure_pt_moments(&bell_state(), Mode::Exact).unwrap(),
            &shape,
        )
        .unwrap();
        let text = report.to_json();
        assert!(text.contains("\"verdict\": \"NPT_Entangled\""));
        let back = SpectrumReport::from_json(&text).unwrap();
        assert_eq!(back.eigenvalues, report.eigenvalues);
        assert_eq!(back.verdict, report.verdict);
    }
}
