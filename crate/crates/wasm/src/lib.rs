//! Browser bindings for a three-part demo: simulate from a latent normal,
//! fit the zero-censored model, and estimate zero rates, with a ternary
//! plot of the current state.

use wasm_bindgen::prelude::*;
use zcmvn::diagnostics::{simulate_compositions, zero_rates};
use zcmvn::ternary::{render_svg, PlotOptions};
use zcmvn::{fit, CompositionalDataset, FitConfig, MvnParams, TransformedSample};

/// Demo state, independent of JavaScript so it can be tested natively.
#[derive(Debug, Clone)]
pub struct Session {
    data: CompositionalDataset,
    generator: Option<MvnParams>,
    fitted: Option<MvnParams>,
}

impl Default for Session {
    fn default() -> Self {
        Self {
            data: CompositionalDataset::new(3, Vec::new()).expect("empty dataset"),
            generator: None,
            fitted: None,
        }
    }
}

fn params(mean: &[f64], cov: &[f64]) -> Result<MvnParams, String> {
    if mean.len() != 2 || cov.len() != 4 {
        return Err("expected a 2-vector mean and a 2x2 covariance".into());
    }
    MvnParams::from_slices(mean, &[&cov[0..2], &cov[2..4]]).map_err(|e| e.to_string())
}

impl Session {
    /// Replaces the data with `n` draws; returns the number on the boundary.
    pub fn simulate(&mut self, mean: &[f64], cov: &[f64], n: usize, seed: u64) -> Result<usize, String> {
        let model = params(mean, cov)?;
        self.data = simulate_compositions(n, &model, 3, seed).map_err(|e| e.to_string())?;
        self.generator = Some(model);
        self.fitted = None;
        Ok(self.data.n_face())
    }

    /// Fits the current data; returns mean (2), covariance (4, row-major),
    /// log-likelihood and iteration count.
    pub fn fit(&mut self) -> Result<Vec<f64>, String> {
        let sample = TransformedSample::from_dataset(&self.data).map_err(|e| e.to_string())?;
        let model = fit(&sample, &FitConfig::default()).map_err(|e| e.to_string())?;
        let params = model.params().map_err(|e| e.to_string())?;
        let mut out: Vec<f64> = model.mean.iter().copied().collect();
        out.extend(params.cov().transpose().iter().copied());
        out.push(model.loglik);
        out.push(model.iterations as f64);
        self.fitted = Some(params);
        Ok(out)
    }

    /// Zero rate per part under the fitted model, or the generator when
    /// nothing is fitted yet.
    pub fn zero_rates(&self, n_sims: usize, seed: u64) -> Result<Vec<f64>, String> {
        let model = self
            .fitted
            .as_ref()
            .or(self.generator.as_ref())
            .ok_or("simulate some data first")?;
        zero_rates(model, 3, n_sims, seed).map_err(|e| e.to_string())
    }

    pub fn observed_zero_counts(&self) -> Vec<usize> {
        self.data.zero_counts()
    }

    /// Ternary plot of the data with the contours of the fitted model.
    pub fn svg(&self) -> Result<String, String> {
        let options = PlotOptions {
            side: 420.0,
            ..PlotOptions::default()
        };
        render_svg(&self.data, self.fitted.as_ref(), &options).map_err(|e| e.to_string())
    }
}

#[wasm_bindgen]
pub struct Demo {
    inner: Session,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Demo {
        Demo {
            inner: Session::default(),
        }
    }

    pub fn simulate(&mut self, mean: &[f64], cov: &[f64], n: usize, seed: u64) -> Result<usize, JsError> {
        self.inner.simulate(mean, cov, n, seed).map_err(|e| JsError::new(&e))
    }

    pub fn fit(&mut self) -> Result<Vec<f64>, JsError> {
        self.inner.fit().map_err(|e| JsError::new(&e))
    }

    pub fn zero_rates(&self, n_sims: usize, seed: u64) -> Result<Vec<f64>, JsError> {
        self.inner.zero_rates(n_sims, seed).map_err(|e| JsError::new(&e))
    }

    pub fn observed_zero_counts(&self) -> Vec<u32> {
        self.inner.observed_zero_counts().into_iter().map(|c| c as u32).collect()
    }

    pub fn svg(&self) -> Result<String, JsError> {
        self.inner.svg().map_err(|e| JsError::new(&e))
    }
}

impl Default for Demo {
    fn default() -> Self {
        Self::new()
    }
}
