//! Exact running average of per-step conditional CDFs.

use super::law::Conditional;
use crate::error::Result;

/// How many trailing components are searched for a duplicate before a new
/// one is appended. Enough for every generator here (at most two laws per
/// step, with i.i.d. laws repeating exactly).
const MERGE_WINDOW: usize = 4;

/// `v ↦ (1/t) Σ_{s ≤ t} Σ_j c_{s,j} F_{s,j}(v)` where each step contributes
/// closed-form CDFs `F_{s,j}` with coefficients `c_{s,j}` summing to one.
///
/// Identical laws are merged, so an i.i.d. generator keeps one component.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TruthTracker {
    components: Vec<(Conditional, f64)>,
    t: u64,
}

impl TruthTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn components(&self) -> &[(Conditional, f64)] {
        &self.components
    }

    /// Records the law used at one step.
    pub fn push(&mut self, law: Conditional) {
        self.push_mixture(&[(law, 1.0)]);
    }

    /// Records one step whose law is a mixture; coefficients must sum to one.
    pub fn push_mixture(&mut self, parts: &[(Conditional, f64)]) {
        for &(law, c) in parts {
            if c == 0.0 {
                continue;
            }
            let n = self.components.len();
            let start = n.saturating_sub(MERGE_WINDOW);
            match self.components[start..].iter_mut().find(|(l, _)| *l == law) {
                Some((_, acc)) => *acc += c,
                None => self.components.push((law, c)),
            }
        }
        self.t += 1;
    }

    /// Averaged conditional CDF at `v`; zero before the first step.
    pub fn cdf(&self, v: f64) -> Result<f64> {
        if self.t == 0 {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        for (law, c) in &self.components {
            acc += c * law.cdf(v)?;
        }
        Ok((acc / self.t as f64).clamp(0.0, 1.0))
    }

    pub fn cdf_many(&self, vs: &[f64]) -> Result<Vec<f64>> {
        vs.iter().map(|&v| self.cdf(v)).collect()
    }
}
