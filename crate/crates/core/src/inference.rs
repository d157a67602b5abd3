//! Conditional queries by weighted model counting.

use std::collections::BTreeMap;

use crate::bdd::{Manager, NodeRef};
use crate::encoding::ProbInt;
use crate::error::{Error, Result};

/// Conjunction of every observation made so far.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Evidence(NodeRef);

impl Evidence {
    pub fn none() -> Self {
        Evidence(NodeRef::TRUE)
    }

    pub fn from_formula(f: NodeRef) -> Self {
        Evidence(f)
    }

    pub fn formula(&self) -> NodeRef {
        self.0
    }

    /// Adds `f` to the observations.
    pub fn observe(&mut self, mgr: &mut Manager, f: NodeRef) -> Result<()> {
        self.0 = mgr.and(self.0, f)?;
        Ok(())
    }

    /// Probability of the evidence itself.
    pub fn probability(&self, mgr: &Manager) -> Result<f64> {
        mgr.wmc(self.0)
    }
}

impl Default for Evidence {
    fn default() -> Self {
        Evidence::none()
    }
}

/// Finite distribution over non-negative integers. Values absent from the map
/// have probability zero.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct Distribution(BTreeMap<u64, f64>);

impl Distribution {
    pub fn new() -> Self {
        Distribution(BTreeMap::new())
    }

    pub fn point(k: u64) -> Self {
        Distribution(BTreeMap::from([(k, 1.0)]))
    }

    pub fn get(&self, k: u64) -> f64 {
        self.0.get(&k).copied().unwrap_or(0.0)
    }

    /// Adds mass to `k`.
    pub fn add(&mut self, k: u64, p: f64) {
        *self.0.entry(k).or_insert(0.0) += p;
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.0.iter().map(|(&k, &p)| (k, p))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(k, p)| k as f64 * p).sum()
    }

    /// Divides every entry by `z` and drops exact zeros.
    pub fn scaled(&self, z: f64) -> Distribution {
        Distribution(
            self.0
                .iter()
                .filter(|(_, &p)| p != 0.0)
                .map(|(&k, &p)| (k, p / z))
                .collect(),
        )
    }

    /// Largest pointwise difference, treating missing values as zero.
    pub fn max_abs_diff(&self, other: &Distribution) -> f64 {
        self.0
            .keys()
            .chain(other.0.keys())
            .map(|&k| (self.get(k) - other.get(k)).abs())
            .fold(0.0, f64::max)
    }
}

impl FromIterator<(u64, f64)> for Distribution {
    fn from_iter<I: IntoIterator<Item = (u64, f64)>>(iter: I) -> Self {
        let mut d = Distribution::new();
        for (k, p) in iter {
            d.add(k, p);
        }
        d
    }
}

fn evidence_mass(mgr: &Manager, e: &Evidence) -> Result<f64> {
    let z = mgr.wmc(e.formula())?;
    if z <= 0.0 {
        return Err(Error::UnsatisfiableEvidence);
    }
    Ok(z)
}

/// `Pr(f | e)`.
pub fn prob(mgr: &mut Manager, f: NodeRef, e: &Evidence) -> Result<f64> {
    let z = evidence_mass(mgr, e)?;
    let joint = mgr.and(f, e.formula())?;
    Ok(mgr.wmc(joint)? / z)
}

/// Posterior distribution of `x`. Every value is the weighted count of its
/// bit pattern conjoined with the evidence; prefixes that are already
/// contradictory are skipped without visiting their completions.
pub fn marginal_distribution(mgr: &mut Manager, x: &ProbInt, e: &Evidence) -> Result<Distribution> {
    let z = evidence_mass(mgr, e)?;
    let mut out = Distribution::new();
    let mut stack = vec![(x.width(), 0u64, e.formula())];
    while let Some((remaining, value, f)) = stack.pop() {
        if f.is_false() {
            continue;
        }
        if remaining == 0 {
            let p = mgr.wmc(f)? / z;
            if p != 0.0 {
                out.add(value, p);
            }
            continue;
        }
        let i = remaining - 1;
        let bit = x.bit(i);
        let on = mgr.and(f, bit)?;
        let nbit = mgr.not(bit)?;
        let off = mgr.and(f, nbit)?;
        stack.push((i, value, off));
        stack.push((i, value | (1 << i), on));
    }
    Ok(out)
}

/// `E[x | e]` via linearity over the bits.
pub fn expectation(mgr: &mut Manager, x: &ProbInt, e: &Evidence) -> Result<f64> {
    let mut total = 0.0;
    for (i, &b) in x.bits().iter().enumerate() {
        if b.is_false() {
            continue;
        }
        total += (i as f64).exp2() * prob(mgr, b, e)?;
    }
    Ok(total)
}
