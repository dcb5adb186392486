//! Experiment specifications, read from JSON.

use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use lacunary_core::exceptional::Knobs;
use lacunary_core::maximal::ScaleRange;
use lacunary_core::spherical::{backend, check_resolvable};
use lacunary_core::Lattice;
use serde::{Deserialize, Serialize};

use crate::families::{FamilyRegistry, FamilySpec, BOX_SIDE};
use crate::level_split::splitter;

/// The square domain `[-L/2, L/2)^2` at grain `delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "L")]
    pub side: f64,
    pub delta: f64,
}

impl GridSpec {
    pub fn lattice(&self) -> Result<Lattice> {
        Ok(Lattice::centered(self.side, self.delta)?)
    }

    pub fn refined(&self) -> Self {
        Self { side: self.side, delta: self.delta / 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub families: Vec<FamilySpec>,
    pub grid: GridSpec,
    pub alphas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub kmin: i32,
    pub kmax: i32,
    /// Overrides the desk knobs; ignored when `paper_constants` is set.
    pub knobs: Option<Knobs>,
    pub paper_constants: bool,
    pub splitter: String,
    pub backend: String,
    pub dump_exceptional: bool,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            families: Vec::new(),
            grid: GridSpec { side: 4.0, delta: 2f64.powi(-7) },
            alphas: vec![0.25, 0.125, 0.0625, 0.03125],
            seeds: vec![0, 1, 2],
            kmin: -4,
            kmax: -1,
            knobs: None,
            paper_constants: false,
            splitter: "value".into(),
            backend: "auto".into(),
            dump_exceptional: false,
            out: None,
        }
    }
}

impl ExperimentSpec {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// The five default families at their default parameters.
    pub fn full_suite() -> Self {
        let families = ["cube", "scattered-cubes", "cantor", "multilevel", "random-cells"]
            .iter()
            .map(|n| FamilySpec::new(n))
            .collect();
        Self { families, ..Self::default() }
    }

    /// One cube, one α, one seed on a 64² grid.
    pub fn smoke() -> Self {
        Self {
            families: vec![FamilySpec::new("cube")],
            grid: GridSpec { side: 4.0, delta: 2f64.powi(-4) },
            alphas: vec![0.25],
            seeds: vec![0],
            kmin: -1,
            kmax: 0,
            ..Self::default()
        }
    }

    pub fn knobs(&self) -> Knobs {
        if self.paper_constants {
            Knobs::paper()
        } else {
            self.knobs.unwrap_or_else(Knobs::desk)
        }
    }

    pub fn range(&self) -> Result<ScaleRange> {
        Ok(ScaleRange::new(self.kmin, self.kmax)?)
    }

    pub fn validate(&self) -> Result<()> {
        let lattice = self.grid.lattice()?;
        ensure!(self.alphas.iter().all(|a| *a > 0.0 && *a < 1.0), "every alpha must lie in (0, 1)");
        self.knobs().validate()?;
        let range = self.range()?;
        check_resolvable(self.kmin, lattice.delta())?;
        // Circles of the largest radius around the box must fit in the domain.
        let reach = 2f64.powi(range.iter().last().expect("nonempty")) + lattice.delta();
        ensure!(
            BOX_SIDE / 2.0 + reach <= self.grid.side / 2.0,
            "padding: radius 2^{} around the unit box leaves the domain of side {}",
            self.kmax,
            self.grid.side
        );
        splitter(&self.splitter)?;
        backend(&self.backend)?;
        let registry = FamilyRegistry::default();
        for f in &self.families {
            registry.get(f)?;
        }
        Ok(())
    }

    /// Rows in report order: family, then α, then seed.
    pub fn rows(&self) -> Vec<(usize, f64, u64)> {
        let mut out = Vec::new();
        for fi in 0..self.families.len() {
            for &a in &self.alphas {
                for &s in &self.seeds {
                    out.push((fi, a, s));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_validate() {
        ExperimentSpec::full_suite().validate().unwrap();
        ExperimentSpec::smoke().validate().unwrap();
        assert_eq!(ExperimentSpec::full_suite().rows().len(), 60);
        assert!(ExperimentSpec::default().rows().is_empty());
    }

    #[test]
    fn json_roundtrip_and_errors() {
        let s = ExperimentSpec::full_suite();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentSpec>(&text).unwrap(), s);
        let partial: ExperimentSpec = serde_json::from_str(r#"{"families": [{"name": "cube", "side": 0.125}]}"#).unwrap();
        assert_eq!(partial.alphas.len(), 4);
        assert!(serde_json::from_str::<ExperimentSpec>(r#"{"famlies": []}"#).is_err());
        let bad = ExperimentSpec { alphas: vec![1.5], ..ExperimentSpec::smoke() };
        assert!(bad.validate().is_err());
        let tight = ExperimentSpec { kmax: 1, ..ExperimentSpec::full_suite() };
        assert!(tight.validate().is_err());
    }
}
