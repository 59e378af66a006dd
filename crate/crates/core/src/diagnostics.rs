//! Simulation from a fitted model and the zero-count goodness-of-fit check.
//!
//! A simulated composition is a latent normal draw in `R^d`, mapped back
//! through the inverse α = 1 transformation and, when it lands outside the
//! simplex, pulled onto the boundary along the ray from the centre.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::MvnParams;
use crate::geometry::{classify, project_to_boundary, Classification};
use crate::rng::{self, StreamRng, REPLICATE_STREAM_BASE};
use crate::sample::CompositionalDataset;
use crate::simplex::{AlphaTransform, Composition};

/// Components whose expected count is below this are pooled into one cell.
pub const EXPECTED_FLOOR: f64 = 0.5;

/// Default Monte Carlo size for zero-rate estimation.
pub const DEFAULT_SIMS: usize = 1_000_000;

/// Smallest accepted Monte Carlo size for zero-rate estimation.
pub const MIN_SIMS: usize = 10_000;

/// Smallest accepted number of replicates for the simulated p-value.
pub const MIN_REPLICATES: usize = 99;

/// What a latent draw becomes after the inverse transformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatentOutcome {
    Interior,
    /// Ends up on the face where the given component is zero.
    Zero(usize),
}

fn check_model(model: &MvnParams, parts: usize) -> Result<AlphaTransform> {
    if model.dim() + 1 != parts {
        return Err(Error::DimensionMismatch {
            expected: parts.saturating_sub(1),
            found: model.dim(),
        });
    }
    AlphaTransform::new(parts, 1.0)
}

/// Classifies a latent point by where its composition lands.
pub fn latent_outcome(transform: &AlphaTransform, y: &DVector<f64>) -> Result<LatentOutcome> {
    let pre = transform.inverse(y)?;
    match classify(&pre.parts)? {
        Classification::Interior => Ok(LatentOutcome::Interior),
        Classification::Face(j) => Ok(LatentOutcome::Zero(j)),
        Classification::OutsideSimplex => Ok(LatentOutcome::Zero(project_to_boundary(&pre.parts)?.zero_index)),
    }
}

/// Maps a latent point to the composition it is observed as.
pub fn latent_to_composition(transform: &AlphaTransform, y: &DVector<f64>) -> Result<Composition> {
    let pre = transform.inverse(y)?;
    match classify(&pre.parts)? {
        Classification::Interior => Composition::new(pre.parts),
        Classification::Face(j) => {
            let mut parts = pre.parts;
            parts[j] = 0.0;
            let sum: f64 = parts.iter().sum();
            Composition::new(parts.into_iter().map(|p| p / sum).collect())
        }
        Classification::OutsideSimplex => Ok(project_to_boundary(&pre.parts)?.composition),
    }
}

/// `n` compositions drawn from the censored model with latent parameters
/// `model`. Latent draws are those of [`crate::gaussian::mvn_sample`] with
/// the same seed.
pub fn simulate_compositions(
    n: usize,
    model: &MvnParams,
    parts: usize,
    seed: u64,
) -> Result<CompositionalDataset> {
    let transform = check_model(model, parts)?;
    let compositions = crate::gaussian::mvn_sample(n, model, seed)
        .iter()
        .map(|y| latent_to_composition(&transform, y))
        .collect::<Result<Vec<_>>>()?;
    CompositionalDataset::new(parts, compositions)
}

fn count_zeros_with(
    transform: &AlphaTransform,
    model: &MvnParams,
    rng: &mut StreamRng,
    n: usize,
    counts: &mut [u64],
) -> Result<()> {
    for _ in 0..n {
        let y = model.sample_with(rng);
        if let LatentOutcome::Zero(j) = latent_outcome(transform, &y)? {
            counts[j] += 1;
        }
    }
    Ok(())
}

/// Zero counts per component over `n` chunked draws.
fn chunked_zero_counts(
    transform: &AlphaTransform,
    model: &MvnParams,
    n: usize,
    seed: u64,
) -> Result<Vec<u64>> {
    let parts = transform.parts();
    let run = |(k, (_, len)): (usize, (usize, usize))| -> Result<Vec<u64>> {
        let mut counts = vec![0u64; parts];
        let mut rng = rng::stream_rng(seed, k as u64);
        count_zeros_with(transform, model, &mut rng, len, &mut counts)?;
        Ok(counts)
    };
    let chunks: Vec<_> = rng::chunks(n).enumerate().collect();
    #[cfg(feature = "parallel")]
    let per_chunk: Vec<Result<Vec<u64>>> = {
        use rayon::prelude::*;
        chunks.into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_chunk: Vec<Result<Vec<u64>>> = chunks.into_iter().map(run).collect();
    let mut total = vec![0u64; parts];
    for c in per_chunk {
        for (t, v) in total.iter_mut().zip(c?) {
            *t += v;
        }
    }
    Ok(total)
}

/// Monte Carlo probability that a random composition has its zero in each
/// component. Uses the same draws as [`simulate_compositions`] with equal
/// `n_sims` and `seed`.
pub fn zero_rates(model: &MvnParams, parts: usize, n_sims: usize, seed: u64) -> Result<Vec<f64>> {
    if n_sims < MIN_SIMS {
        return Err(Error::InvalidArgument(format!(
            "n_sims must be at least {MIN_SIMS}, got {n_sims}"
        )));
    }
    let transform = check_model(model, parts)?;
    let counts = chunked_zero_counts(&transform, model, n_sims, seed)?;
    Ok(counts.into_iter().map(|c| c as f64 / n_sims as f64).collect())
}

/// Observed and expected zero counts per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroDiagnostics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<String>>,
    pub n_observations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_counts: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_rates: Option<Vec<f64>>,
    pub expected_counts: Vec<f64>,
    pub expected_rates: Vec<f64>,
    /// Components merged into the pooled χ² cell.
    pub pooled: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_square: Option<f64>,
    #[serde(default)]
    pub mc_pvalue: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_replicates: Option<usize>,
    pub n_sims: usize,
    pub seed: u64,
}

/// Expected zero counts for a dataset of `n_obs` compositions.
pub fn expected_zero_table(
    model: &MvnParams,
    parts: usize,
    n_obs: usize,
    n_sims: usize,
    seed: u64,
) -> Result<ZeroDiagnostics> {
    let expected_rates = zero_rates(model, parts, n_sims, seed)?;
    let expected_counts: Vec<f64> = expected_rates.iter().map(|r| r * n_obs as f64).collect();
    let pooled = (0..parts)
        .filter(|&j| expected_counts[j] < EXPECTED_FLOOR)
        .collect();
    Ok(ZeroDiagnostics {
        components: None,
        n_observations: n_obs,
        observed_counts: None,
        observed_rates: None,
        expected_counts,
        expected_rates,
        pooled,
        chi_square: None,
        mc_pvalue: None,
        n_replicates: None,
        n_sims,
        seed,
    })
}

impl ZeroDiagnostics {
    /// Fills in the observed side and the χ² discrepancy.
    pub fn with_observed(mut self, observed: &[usize]) -> Result<Self> {
        if observed.len() != self.expected_counts.len() {
            return Err(Error::DimensionMismatch {
                expected: self.expected_counts.len(),
                found: observed.len(),
            });
        }
        let n = self.n_observations as f64;
        self.observed_rates = Some(
            observed
                .iter()
                .map(|&c| if n > 0.0 { c as f64 / n } else { 0.0 })
                .collect(),
        );
        self.chi_square = Some(discrepancy(observed, &self.expected_counts)?);
        self.observed_counts = Some(observed.to_vec());
        Ok(self)
    }

    pub fn with_components(mut self, names: Vec<String>) -> Self {
        self.components = Some(names);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("diagnostics serialize")
    }

    /// Plain-text table with one column per component: a header row of
    /// names, the observed counts and the estimated counts.
    pub fn to_table(&self) -> String {
        let parts = self.expected_counts.len();
        let names: Vec<String> = match &self.components {
            Some(n) => n.clone(),
            None => (1..=parts).map(|j| format!("x{j}")).collect(),
        };
        let observed: Vec<String> = match &self.observed_counts {
            Some(c) => c.iter().map(|v| v.to_string()).collect(),
            None => vec!["-".to_string(); parts],
        };
        let estimated: Vec<String> = self.expected_counts.iter().map(|v| format!("{v:.3}")).collect();
        let labels = ["Components", "Observed number of zeros", "Estimated number of zeros"];
        let label_width = labels.iter().map(|l| l.len()).max().unwrap_or(0);
        let widths: Vec<usize> = (0..parts)
            .map(|j| names[j].len().max(observed[j].len()).max(estimated[j].len()))
            .collect();
        let mut out = String::new();
        for (label, cells) in labels.iter().zip([&names, &observed, &estimated]) {
            out.push_str(&format!("{label:<label_width$}"));
            for (cell, w) in cells.iter().zip(&widths) {
                out.push_str(&format!("  {cell:>w$}"));
            }
            out.push('\n');
        }
        if let Some(x2) = self.chi_square {
            out.push_str(&format!("chi-square discrepancy: {x2:.4}"));
            if !self.pooled.is_empty() {
                let pooled: Vec<&str> = self.pooled.iter().map(|&j| names[j].as_str()).collect();
                out.push_str(&format!(" (pooled: {})", pooled.join(", ")));
            }
            out.push('\n');
        }
        if let Some(p) = self.mc_pvalue {
            out.push_str(&format!(
                "simulated p-value: {p:.4} ({} replicates)\n",
                self.n_replicates.unwrap_or(0)
            ));
        }
        out
    }
}

/// Cells of the χ² comparison: retained components and the pooled
/// remainder as `(observed, expected)`.
/// `(observed, expected)` for one χ² cell.
type Cell = (f64, f64);

fn cells(observed: &[usize], expected: &[f64]) -> Result<(Vec<Cell>, Option<Cell>)> {
    if observed.len() != expected.len() {
        return Err(Error::DimensionMismatch {
            expected: expected.len(),
            found: observed.len(),
        });
    }
    let mut retained = Vec::new();
    let (mut po, mut pe, mut any_pooled) = (0.0, 0.0, false);
    for (&o, &e) in observed.iter().zip(expected) {
        if e >= EXPECTED_FLOOR {
            retained.push((o as f64, e));
        } else {
            po += o as f64;
            pe += e;
            any_pooled = true;
        }
    }
    Ok((retained, any_pooled.then_some((po, pe))))
}

fn cell_term((o, e): Cell) -> f64 {
    if e > 0.0 {
        (o - e) * (o - e) / e
    } else if o == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `Σ (obs - exp)² / exp` over components with expected count at least
/// [`EXPECTED_FLOOR`], plus one pooled cell for the rest.
///
/// A pooled cell with zero expectation adds nothing when its observed count
/// is zero and makes the statistic infinite otherwise.
pub fn chi_square_discrepancy(observed: &[usize], expected: &[f64]) -> Result<f64> {
    let (retained, pooled) = cells(observed, expected)?;
    if retained.is_empty() {
        return Err(Error::AllBelowFloor(EXPECTED_FLOOR));
    }
    Ok(retained.into_iter().chain(pooled).map(cell_term).sum())
}

/// [`chi_square_discrepancy`], falling back to the pooled cell alone when
/// no component reaches the floor.
fn discrepancy(observed: &[usize], expected: &[f64]) -> Result<f64> {
    match chi_square_discrepancy(observed, expected) {
        Err(Error::AllBelowFloor(_)) => {
            let (_, pooled) = cells(observed, expected)?;
            Ok(pooled.map(cell_term).unwrap_or(0.0))
        }
        other => other,
    }
}

/// Zero counts of one replicate dataset of size `n_obs`.
fn replicate_counts(
    transform: &AlphaTransform,
    model: &MvnParams,
    n_obs: usize,
    seed: u64,
    replicate: usize,
) -> Result<Vec<usize>> {
    let mut rng = rng::stream_rng(seed, REPLICATE_STREAM_BASE + replicate as u64);
    let mut counts = vec![0u64; transform.parts()];
    count_zeros_with(transform, model, &mut rng, n_obs, &mut counts)?;
    Ok(counts.into_iter().map(|c| c as usize).collect())
}

/// Simulated p-value of the χ² discrepancy.
///
/// The expected table comes from [`zero_rates`] with `n_sims` and `seed`.
/// Replicate `r` draws `n_obs` compositions from stream
/// `REPLICATE_STREAM_BASE + r` of `seed`. Returns
/// `(1 + #{replicate stat ≥ observed stat}) / (n_replicates + 1)`.
pub fn mc_pvalue(
    model: &MvnParams,
    parts: usize,
    observed: &[usize],
    n_obs: usize,
    n_replicates: usize,
    n_sims: usize,
    seed: u64,
) -> Result<f64> {
    let table = expected_zero_table(model, parts, n_obs, n_sims, seed)?;
    mc_pvalue_against(model, parts, observed, n_obs, &table.expected_counts, n_replicates, seed)
}

/// [`mc_pvalue`] against an already estimated expected table.
pub fn mc_pvalue_against(
    model: &MvnParams,
    parts: usize,
    observed: &[usize],
    n_obs: usize,
    expected: &[f64],
    n_replicates: usize,
    seed: u64,
) -> Result<f64> {
    if n_replicates < MIN_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_REPLICATES} replicates are required, got {n_replicates}"
        )));
    }
    let transform = check_model(model, parts)?;
    let observed_stat = discrepancy(observed, expected)?;
    let run = |r: usize| -> Result<bool> {
        let counts = replicate_counts(&transform, model, n_obs, seed, r)?;
        Ok(discrepancy(&counts, expected)? >= observed_stat)
    };
    #[cfg(feature = "parallel")]
    let exceed: Vec<Result<bool>> = {
        use rayon::prelude::*;
        (0..n_replicates).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let exceed: Vec<Result<bool>> = (0..n_replicates).map(run).collect();
    let mut hits = 0usize;
    for e in exceed {
        if e? {
            hits += 1;
        }
    }
    Ok((1 + hits) as f64 / (n_replicates + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::alpha_transform;
    use nalgebra::DMatrix;

    fn skewed_model() -> MvnParams {
        MvnParams::from_slices(&[0.625, 0.821], &[&[0.149, -0.200], &[-0.200, 1.523]]).unwrap()
    }

    #[test]
    fn chi_square_examples() {
        assert_eq!(chi_square_discrepancy(&[3, 5], &[3.0, 5.0]).unwrap(), 0.0);
        assert_eq!(chi_square_discrepancy(&[2, 0], &[1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(
            chi_square_discrepancy(&[0, 0], &[0.1, 0.2]),
            Err(Error::AllBelowFloor(EXPECTED_FLOOR))
        );
        assert!(matches!(
            chi_square_discrepancy(&[0], &[0.1, 0.2]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn chi_square_pools_sparse_cells() {
        // Retained: 4 and 6; pooled: 0.2 + 0.3 = 0.5 expected vs 2 observed.
        let x2 = chi_square_discrepancy(&[3, 5, 1, 1], &[4.0, 6.0, 0.2, 0.3]).unwrap();
        let want = 1.0 / 4.0 + 1.0 / 6.0 + (2.0 - 0.5) * (2.0 - 0.5) / 0.5;
        assert!((x2 - want).abs() < 1e-15);
        assert_eq!(discrepancy(&[0, 0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(discrepancy(&[1, 0], &[0.0, 0.0]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn point_mass_stays_interior() {
        let centre = alpha_transform(&Composition::new(vec![0.3, 0.3, 0.4]).unwrap(), 1.0).unwrap();
        let model = MvnParams::new(centre, DMatrix::identity(2, 2) * 1e-12).unwrap();
        let data = simulate_compositions(1000, &model, 3, 1).unwrap();
        assert_eq!(data.n_face(), 0);
        assert_eq!(zero_rates(&model, 3, 10_000, 1).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn simulated_faces_are_valid() {
        let data = simulate_compositions(2000, &skewed_model(), 3, 9).unwrap();
        assert!(data.n_face() > 0);
        for c in data.compositions() {
            assert!((c.parts().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            if let Some(j) = c.zero_index() {
                assert!(c.parts().iter().enumerate().all(|(i, &p)| i == j || p > 0.0));
            }
        }
    }

    #[test]
    fn rates_agree_with_simulation_counts() {
        let model = skewed_model();
        let n = 20_000;
        let data = simulate_compositions(n, &model, 3, 4).unwrap();
        let rates = zero_rates(&model, 3, n, 4).unwrap();
        let counts: Vec<f64> = data.zero_counts().iter().map(|&c| c as f64 / n as f64).collect();
        assert_eq!(rates, counts);
    }

    #[test]
    fn expected_table_linearity() {
        let model = skewed_model();
        let a = expected_zero_table(&model, 3, 28, 10_000, 3).unwrap();
        let b = expected_zero_table(&model, 3, 56, 10_000, 3).unwrap();
        for (x, y) in a.expected_counts.iter().zip(&b.expected_counts) {
            assert_eq!(2.0 * x, *y);
        }
        let z = expected_zero_table(&model, 3, 0, 10_000, 3).unwrap();
        assert!(z.expected_counts.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn pvalue_extremes_and_determinism() {
        let model = skewed_model();
        let table = expected_zero_table(&model, 3, 200, 20_000, 5).unwrap();
        // Component 1 almost never takes the zero under this model.
        let p = mc_pvalue(&model, 3, &[200, 0, 0], 200, 99, 20_000, 5).unwrap();
        assert_eq!(p, 1.0 / 100.0);
        let observed: Vec<usize> = table.expected_counts.iter().map(|c| c.round() as usize).collect();
        let a = mc_pvalue(&model, 3, &observed, 200, 99, 20_000, 5).unwrap();
        let b = mc_pvalue(&model, 3, &observed, 200, 99, 20_000, 5).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.2);
        assert!(mc_pvalue(&model, 3, &observed, 200, 10, 20_000, 5).is_err());
    }

    #[test]
    fn table_layout() {
        let model = skewed_model();
        let t = expected_zero_table(&model, 3, 500, 10_000, 1)
            .unwrap()
            .with_components(vec!["a".into(), "b".into(), "c".into()])
            .with_observed(&[1, 40, 180])
            .unwrap();
        let text = t.to_table();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("Components"));
        assert!(lines[1].starts_with("Observed number of zeros"));
        assert!(lines[2].starts_with("Estimated number of zeros"));
        assert_eq!(lines[0].len(), lines[2].len());
        assert!(text.contains("chi-square discrepancy"));
    }
}
