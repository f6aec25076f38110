//! Periodic-seed files: structured text with keys `n`, `k`, `lambdas`,
//! `alpha`, `w_re`, `w_im`, `theta`, `period_hint`.
//!
//! The crate ships numerically found seeds for `(n, k)` in
//! `{(2,1), (3,1), (3,2)}`; they are genuinely oscillating orbits obtained
//! by [`super::periodic::search_from_rigid`] and stored to full precision.

use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{OdeError, OdeParams, OdeState, PeriodicOrbit};
use crate::family::LambdaSpec;
use crate::C64;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedEntry {
    pub n: usize,
    pub k: usize,
    pub lambdas: Vec<f64>,
    pub alpha: f64,
    pub w_re: Vec<f64>,
    pub w_im: Vec<f64>,
    pub theta: f64,
    pub period_hint: f64,
}

impl SeedEntry {
    pub fn params(&self) -> Result<OdeParams, OdeError> {
        let spec = LambdaSpec::new(&self.lambdas)
            .map_err(|e| OdeError::SeedFile(format!("bad lambdas: {e}")))?;
        OdeParams::new(spec, self.alpha)
    }

    pub fn state(&self) -> OdeState {
        OdeState {
            w: self
                .w_re
                .iter()
                .zip(&self.w_im)
                .map(|(&re, &im)| C64::new(re, im))
                .collect(),
            theta: self.theta,
        }
    }

    pub fn from_orbit(orbit: &PeriodicOrbit) -> SeedEntry {
        let params = orbit.params();
        let st = orbit.initial();
        SeedEntry {
            n: params.n(),
            k: params.lambda().k(),
            lambdas: params.lambda().lambdas().to_vec(),
            alpha: params.alpha(),
            w_re: st.w.iter().map(|w| w.re).collect(),
            w_im: st.w.iter().map(|w| w.im).collect(),
            theta: st.theta,
            period_hint: orbit.period(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SeedFile {
    #[serde(default)]
    pub seeds: Vec<SeedEntry>,
}

impl SeedFile {
    pub fn find(&self, n: usize, k: usize) -> Option<&SeedEntry> {
        self.seeds.iter().find(|s| s.n == n && s.k == k)
    }
}

pub fn parse(text: &str) -> Result<SeedFile, OdeError> {
    toml::from_str(text).map_err(|e| OdeError::SeedFile(e.to_string()))
}

pub fn to_text(file: &SeedFile) -> String {
    toml::to_string_pretty(file).expect("seed files serialize")
}

pub fn load(path: &Path) -> Result<SeedFile, OdeError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| OdeError::SeedFile(format!("{}: {e}", path.display())))?;
    parse(&text)
}

/// The seeds shipped with the crate.
pub fn builtin() -> SeedFile {
    parse(include_str!("../../seeds/periodic_seeds.toml")).expect("builtin seeds are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_seeds_cover_the_shipped_shapes() {
        let file = builtin();
        for (n, k) in [(2, 1), (3, 1), (3, 2)] {
            let entry = file.find(n, k).unwrap_or_else(|| panic!("missing seed ({n},{k})"));
            assert_eq!(entry.lambdas.len(), n);
            entry.params().unwrap();
            assert!(entry.period_hint > 0.0);
        }
    }

    #[test]
    fn seed_file_round_trips() {
        let file = builtin();
        let text = to_text(&file);
        let reparsed = parse(&text).unwrap();
        assert_eq!(file.seeds.len(), reparsed.seeds.len());
        for (a, b) in file.seeds.iter().zip(&reparsed.seeds) {
            assert_eq!(a.w_re, b.w_re);
            assert_eq!(a.period_hint, b.period_hint);
        }
    }
}
