use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The tunable constants of the exceptional-set and height constructions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Knobs {
    /// Ladder stops once `c_N >= c_stop * R*`.
    pub c_stop: f64,
    /// Cap angular width is `c_width * c_{i-1} / c_i`.
    pub c_width: f64,
    /// Heavy rectangles are dilated by this factor about their centre.
    pub c_dilate: f64,
    /// Multiplier of `log log log (1/alpha)` in the critical height.
    pub c_iter: f64,
    /// Multiplier of `log log (1/alpha)` in the upper edge of the middle regime.
    pub c_k2: f64,
}

impl Knobs {
    /// The literal constants of the proof.
    pub fn paper() -> Self {
        Self { c_stop: 2f64.powi(-10), c_width: 100.0, c_dilate: 100.0, c_iter: 100.0, c_k2: 100.0 }
    }

    /// Reduced constants that keep every stage non-degenerate at desk scale.
    pub fn desk() -> Self {
        Self { c_stop: 2f64.powi(-6), c_width: 4.0, c_dilate: 2.0, c_iter: 2.0, c_k2: 4.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.c_stop, self.c_width, self.c_dilate, self.c_iter, self.c_k2];
        if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("all knobs must be positive and finite: {self:?}")));
        }
        if self.c_stop >= 1.0 {
            return Err(Error::Config(format!("c_stop must be below 1, got {}", self.c_stop)));
        }
        Ok(())
    }
}

impl Default for Knobs {
    fn default() -> Self {
        Self::paper()
    }
}

/// Parameters of one exceptional set `S_{M,k,q,γ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub k: i32,
    /// Side of the Whitney cube.
    pub lq: f64,
    pub d: u32,
    /// Height parameter `M`.
    pub m: f64,
    pub knobs: Knobs,
}

impl ExceptionalConfig {
    /// `log2 R*` with `R* = max(l(q), (γ/α)^{1/(d-1)})`.
    pub fn log2_r_star(&self) -> f64 {
        let dm1 = (self.d - 1) as f64;
        self.lq.log2().max((self.gamma.log2() - self.alpha.log2()) / dm1)
    }

    pub fn r_star(&self) -> f64 {
        self.log2_r_star().exp2()
    }

    pub fn validate(&self) -> Result<()> {
        self.knobs.validate()?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.gamma > 0.0 && self.lq > 0.0 && self.m > 0.0) {
            return Err(Error::Config("gamma, l(q) and M must be positive".into()));
        }
        if self.d != 2 {
            return Err(Error::Config(format!("only d = 2 is implemented, got {}", self.d)));
        }
        if (self.k as f64) < self.log2_r_star() {
            return Err(Error::Config(format!(
                "scale 2^{} is below R* = 2^{}",
                self.k,
                self.log2_r_star()
            )));
        }
        Ok(())
    }
}

/// Scales `c_0 < ... < c_N`, kept as base-2 exponents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleLadder {
    pub exponents: Vec<f64>,
    pub log2_r_star: f64,
}

impl ScaleLadder {
    pub fn scales(&self) -> Vec<f64> {
        self.exponents.iter().map(|e| e.exp2()).collect()
    }

    pub fn c(&self, i: usize) -> f64 {
        self.exponents[i].exp2()
    }

    /// Index `N` of the last scale.
    pub fn top(&self) -> usize {
        self.exponents.len() - 1
    }

    /// Closed form `log2 c_j = e_R + (e_0 - e_R) 2^{-j}`.
    pub fn closed_form(&self, j: usize) -> f64 {
        let e0 = self.exponents[0];
        self.log2_r_star + (e0 - self.log2_r_star) * 2f64.powi(-(j as i32))
    }
}

/// `c_0 = γ^{1/(d-1)}`, `c_{j+1} = sqrt(c_j R*)`, stopping at the first
/// `c_N >= c_stop R*`.
pub fn scale_ladder(cfg: &ExceptionalConfig) -> Result<ScaleLadder> {
    cfg.validate()?;
    let e_r = cfg.log2_r_star();
    let stop = cfg.knobs.c_stop.log2() + e_r;
    let mut exponents = vec![cfg.gamma.log2() / (cfg.d - 1) as f64];
    while *exponents.last().expect("nonempty") < stop {
        let e = *exponents.last().expect("nonempty");
        exponents.push((e + e_r) / 2.0);
        if exponents.len() > 1100 {
            return Err(Error::Inconsistent("scale ladder failed to terminate".into()));
        }
    }
    Ok(ScaleLadder { exponents, log2_r_star: e_r })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(gamma: f64) -> ExceptionalConfig {
        ExceptionalConfig { alpha: 0.5, gamma, k: 10, lq: 1.0, d: 2, m: 1.0, knobs: Knobs::paper() }
    }

    #[test]
    fn closed_form_examples() {
        let l = scale_ladder(&cfg(2f64.powi(-32))).unwrap();
        assert_eq!(l.scales(), vec![2f64.powi(-32), 2f64.powi(-16), 2f64.powi(-8)]);
        let l = scale_ladder(&cfg(2f64.powi(-8))).unwrap();
        assert_eq!(l.scales(), vec![2f64.powi(-8)]);
    }

    #[test]
    fn rejects_small_k() {
        let mut c = cfg(0.25);
        c.k = -1;
        assert!(scale_ladder(&c).is_err());
    }
}
