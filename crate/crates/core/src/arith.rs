//! Bit-level circuits over [`ProbInt`]s.
//!
//! Operands of unequal width are zero-extended to the wider one. Results keep
//! every bit as a BDD, so a high bit that can never be set collapses to the
//! FALSE terminal on its own.

use crate::bdd::{Manager, NodeRef};
use crate::encoding::{const_int, ProbInt};
use crate::error::Result;

fn extend_pair(a: &ProbInt, b: &ProbInt) -> (ProbInt, ProbInt) {
    let w = a.width().max(b.width());
    (a.zero_extend(w), b.zero_extend(w))
}

/// The event `a < b`, built from the most significant bit down.
pub fn lt(mgr: &mut Manager, a: &ProbInt, b: &ProbInt) -> Result<NodeRef> {
    let (a, b) = extend_pair(a, b);
    let mut rest = NodeRef::FALSE;
    for (&ai, &bi) in a.bits().iter().zip(b.bits()) {
        // a_i set: need b_i set and the lower bits to decide;
        // a_i clear: b_i set wins outright, otherwise defer
        let when_set = mgr.and(bi, rest)?;
        let when_clear = mgr.or(bi, rest)?;
        rest = mgr.ite(ai, when_set, when_clear)?;
    }
    Ok(rest)
}

pub fn le(mgr: &mut Manager, a: &ProbInt, b: &ProbInt) -> Result<NodeRef> {
    let gt = lt(mgr, b, a)?;
    mgr.not(gt)
}

pub fn gt(mgr: &mut Manager, a: &ProbInt, b: &ProbInt) -> Result<NodeRef> {
    lt(mgr, b, a)
}

pub fn ge(mgr: &mut Manager, a: &ProbInt, b: &ProbInt) -> Result<NodeRef> {
    let l = lt(mgr, a, b)?;
    mgr.not(l)
}

pub fn eq(mgr: &mut Manager, a: &ProbInt, b: &ProbInt) -> Result<NodeRef> {
    let (a, b) = extend_pair(a, b);
    let mut acc = NodeRef::TRUE;
    for (&ai, &bi) in a.bits().iter().zip(b.bits()).rev() {
        let same = mgr.xnor(ai, bi)?;
        acc = mgr.and(acc, same)?;
    }
    Ok(acc)
}

pub fn ne(mgr: &mut Manager, a: &ProbInt, b: &ProbInt) -> Result<NodeRef> {
    let e = eq(mgr, a, b)?;
    mgr.not(e)
}

fn ripple(
    mgr: &mut Manager,
    a: &ProbInt,
    b: &ProbInt,
    carry_in: NodeRef,
) -> Result<(Vec<NodeRef>, NodeRef)> {
    let mut carry = carry_in;
    let mut sum = Vec::with_capacity(a.width());
    for (&ai, &bi) in a.bits().iter().zip(b.bits()) {
        let half = mgr.xor(ai, bi)?;
        sum.push(mgr.xor(half, carry)?);
        // majority(a, b, c) = if a⊕b then c else a
        carry = mgr.ite(half, carry, ai)?;
    }
    Ok((sum, carry))
}

/// Exact sum, one bit wider than the wider operand.
pub fn add(mgr: &mut Manager, a: &ProbInt, b: &ProbInt) -> Result<ProbInt> {
    let (a, b) = extend_pair(a, b);
    let (mut bits, carry) = ripple(mgr, &a, &b, NodeRef::FALSE)?;
    bits.push(carry);
    Ok(ProbInt::from_bits(bits))
}

/// Sum modulo `2^w`, `w` the wider operand's width.
pub fn add_wrap(mgr: &mut Manager, a: &ProbInt, b: &ProbInt) -> Result<ProbInt> {
    let (a, b) = extend_pair(a, b);
    let (bits, _) = ripple(mgr, &a, &b, NodeRef::FALSE)?;
    Ok(ProbInt::from_bits(bits))
}

/// Two's-complement difference modulo `2^w`: `a + !b + 1`.
pub fn sub_wrap(mgr: &mut Manager, a: &ProbInt, b: &ProbInt) -> Result<ProbInt> {
    let (a, b) = extend_pair(a, b);
    let nb = b
        .bits()
        .iter()
        .map(|&x| mgr.not(x))
        .collect::<Result<Vec<_>>>()?;
    let (bits, _) = ripple(mgr, &a, &ProbInt::from_bits(nb), NodeRef::TRUE)?;
    Ok(ProbInt::from_bits(bits))
}

/// Bitwise `if cond then a else b`.
pub fn mux_int(mgr: &mut Manager, cond: NodeRef, a: &ProbInt, b: &ProbInt) -> Result<ProbInt> {
    let (a, b) = extend_pair(a, b);
    let bits = a
        .bits()
        .iter()
        .zip(b.bits())
        .map(|(&x, &y)| mgr.ite(cond, x, y))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbInt::from_bits(bits))
}

/// Shift-and-add product of width `w_a + w_b`.
pub fn mul(mgr: &mut Manager, a: &ProbInt, b: &ProbInt) -> Result<ProbInt> {
    let width = a.width() + b.width();
    let zero = const_int(0, width)?;
    let mut acc = zero.clone();
    for (j, &bj) in b.bits().iter().enumerate() {
        if bj.is_false() {
            continue;
        }
        let mut shifted = vec![NodeRef::FALSE; j];
        shifted.extend_from_slice(a.bits());
        let shifted = ProbInt::from_bits(shifted).zero_extend(width);
        let term = mux_int(mgr, bj, &shifted, &zero)?;
        acc = add_wrap(mgr, &acc, &term)?;
    }
    Ok(acc)
}

/// Restoring division. Both results have the width of `a`. A zero divisor
/// yields quotient 0 and remainder `a`, so `a = q·b + r` on every path.
pub fn divmod(mgr: &mut Manager, a: &ProbInt, b: &ProbInt) -> Result<(ProbInt, ProbInt)> {
    let w = a.width().max(b.width());
    let divisor = b.zero_extend(w + 1);
    let mut rem = const_int(0, w + 1)?;
    let mut q = vec![NodeRef::FALSE; a.width()];
    for i in (0..a.width()).rev() {
        // rem = (rem << 1) | a_i, still below 2^(w+1) since rem < b beforehand
        let mut shifted = vec![a.bit(i)];
        shifted.extend_from_slice(&rem.bits()[..w]);
        let shifted = ProbInt::from_bits(shifted);
        let fits = ge(mgr, &shifted, &divisor)?;
        let reduced = sub_wrap(mgr, &shifted, &divisor)?;
        rem = mux_int(mgr, fits, &reduced, &shifted)?;
        q[i] = fits;
    }
    let zero_divisor = {
        let z = const_int(0, b.width())?;
        eq(mgr, b, &z)?
    };
    let q = {
        let raw = ProbInt::from_bits(q);
        let zero = const_int(0, a.width())?;
        mux_int(mgr, zero_divisor, &zero, &raw)?
    };
    // r <= a, so the low bits of `a`'s width hold it exactly
    let r = rem.truncate(a.width());
    Ok((q, r))
}
