//! Random unsigned integers as tuples of BDD bits, and the constructions that
//! turn probability vectors and ranges into them.

use crate::bdd::{Manager, NodeRef};
use crate::error::{Error, Result};

/// Fixed-width random unsigned integer. `bits[0]` is the least significant
/// bit.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProbInt {
    bits: Vec<NodeRef>,
}

impl ProbInt {
    /// Wraps `bits` (LSB first). Panics on an empty vector.
    pub fn from_bits(bits: Vec<NodeRef>) -> Self {
        assert!(!bits.is_empty(), "a ProbInt needs at least one bit");
        ProbInt { bits }
    }

    pub fn bits(&self) -> &[NodeRef] {
        &self.bits
    }

    pub fn bit(&self, i: usize) -> NodeRef {
        self.bits.get(i).copied().unwrap_or(NodeRef::FALSE)
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    /// Zero-extends to `width` bits; never truncates.
    pub fn zero_extend(&self, width: usize) -> ProbInt {
        let mut bits = self.bits.clone();
        if bits.len() < width {
            bits.resize(width, NodeRef::FALSE);
        }
        ProbInt { bits }
    }

    /// Keeps the low `width` bits.
    pub fn truncate(&self, width: usize) -> ProbInt {
        let mut bits = self.bits.clone();
        bits.truncate(width.max(1));
        ProbInt { bits }
    }

    /// The value when every bit is a terminal.
    pub fn as_constant(&self) -> Option<u64> {
        let mut v = 0u64;
        for (i, b) in self.bits.iter().enumerate() {
            match b.as_constant()? {
                true if i >= 64 => return None,
                true => v |= 1 << i,
                false => {}
            }
        }
        Some(v)
    }
}

/// Unnormalized categorical weights: entry `i` is proportional to `Pr(i)`.
#[derive(Clone, PartialEq, Debug)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidVector("empty vector".into()));
        }
        if let Some(bad) = entries.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidVector(format!(
                "entry {bad} is not a non-negative real"
            )));
        }
        if !entries.iter().any(|&x| x > 0.0) {
            return Err(Error::InvalidVector("all entries are zero".into()));
        }
        Ok(ProbVector(entries))
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn normalized(&self) -> Vec<f64> {
        let total: f64 = self.0.iter().sum();
        self.0.iter().map(|x| x / total).collect()
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ProbVector::new(v)
    }
}

/// Bits needed to hold every value below `n`, and at least one.
pub fn width_for(n: u64) -> usize {
    let n = n.max(2);
    (64 - (n - 1).leading_zeros()) as usize
}

/// Bits needed to represent `k` itself, and at least one.
pub fn bits_for_value(k: u64) -> usize {
    ((64 - k.leading_zeros()) as usize).max(1)
}

pub fn const_int(k: u64, width: usize) -> Result<ProbInt> {
    if width == 0 || (width < 64 && k >> width != 0) {
        return Err(Error::Overflow { value: k, width });
    }
    let bits = (0..width)
        .map(|i| NodeRef::constant(i < 64 && (k >> i) & 1 == 1))
        .collect();
    Ok(ProbInt { bits })
}

/// Point mass at `k` with the minimal width that holds it.
pub fn const_min(k: u64) -> ProbInt {
    const_int(k, bits_for_value(k)).expect("minimal width always fits")
}

fn select(mgr: &mut Manager, cond: NodeRef, a: &[NodeRef], b: &[NodeRef]) -> Result<Vec<NodeRef>> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| mgr.ite(cond, x, y))
        .collect()
}

/// Sequential if-else chain: the flip at step `i` picks value `i` with
/// probability `v[i] / Σ_{k≥i} v[k]`; the last value is the fall-through.
pub fn categ_int(mgr: &mut Manager, v: &ProbVector) -> Result<ProbInt> {
    let v = v.entries();
    let width = width_for(v.len() as u64);
    let last = v
        .iter()
        .rposition(|&x| x > 0.0)
        .expect("validated non-zero");

    let mut guards = Vec::with_capacity(last);
    for i in 0..last {
        let p = if v[i] == 0.0 {
            0.0
        } else {
            v[i] / v[i..].iter().sum::<f64>()
        };
        guards.push(mgr.fresh_var(p)?);
    }

    let mut bits = const_int(last as u64, width)?.bits;
    for (i, &g) in guards.iter().enumerate().rev() {
        let here = const_int(i as u64, width)?;
        bits = select(mgr, g, &here.bits, &bits)?;
    }
    Ok(ProbInt { bits })
}

/// Divide and conquer over a zero-padded `2^b` vector: the most significant
/// undecided bit is a flip with the upper half's share of the mass, and the
/// lower bits recurse on the chosen half.
pub fn bitwise_int(mgr: &mut Manager, v: &ProbVector) -> Result<ProbInt> {
    let width = width_for(v.len() as u64);
    let mut padded = v.entries().to_vec();
    padded.resize(1 << width, 0.0);
    let bits = bitwise_rec(mgr, &padded)?;
    Ok(ProbInt { bits })
}

fn bitwise_rec(mgr: &mut Manager, v: &[f64]) -> Result<Vec<NodeRef>> {
    if v.len() == 1 {
        return Ok(Vec::new());
    }
    let (lower, upper) = v.split_at(v.len() / 2);
    let upper_mass: f64 = upper.iter().sum();
    let p = if upper_mass == 0.0 {
        0.0
    } else if lower.iter().all(|&x| x == 0.0) {
        1.0
    } else {
        upper_mass / v.iter().sum::<f64>()
    };
    let msb = mgr.fresh_var(p)?;
    let hi = match msb.is_false() {
        true => None,
        false => Some(bitwise_rec(mgr, upper)?),
    };
    let lo = match msb.is_true() {
        true => None,
        false => Some(bitwise_rec(mgr, lower)?),
    };
    let mut bits = match (hi, lo) {
        (Some(h), Some(l)) => select(mgr, msb, &h, &l)?,
        (Some(h), None) => h,
        (None, Some(l)) => l,
        (None, None) => unreachable!("a flip is either not FALSE or not TRUE"),
    };
    bits.push(msb);
    Ok(bits)
}

/// Uniform over `{0, .., n-1}` as a mixture of power-of-two uniforms, each of
/// which is a tuple of independent fair bits.
pub fn uniform_int(mgr: &mut Manager, n: u64) -> Result<ProbInt> {
    if n == 0 {
        return Err(Error::InvalidRange(n));
    }
    let width = width_for(n);
    let mut bits = uniform_rec(mgr, n)?;
    bits.resize(width, NodeRef::FALSE);
    Ok(ProbInt { bits })
}

// Returns floor(log2 n) + 1 bits when n is not a power of two, else log2 n
// bits (at least zero).
fn uniform_rec(mgr: &mut Manager, n: u64) -> Result<Vec<NodeRef>> {
    let b = 63 - n.leading_zeros() as usize;
    let pow = 1u64 << b;
    let guard = mgr.fresh_var(pow as f64 / n as f64)?;
    let mut low = Vec::with_capacity(b);
    for _ in 0..b {
        low.push(mgr.fresh_var(0.5)?);
    }
    if guard.is_true() {
        return Ok(low);
    }
    let mut rest = uniform_rec(mgr, n - pow)?;
    rest.resize(b, NodeRef::FALSE);
    let mut bits = select(mgr, guard, &low, &rest)?;
    let top = mgr.not(guard)?;
    bits.push(top);
    Ok(bits)
}
