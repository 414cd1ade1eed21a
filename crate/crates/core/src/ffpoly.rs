//! Dense univariate polynomial helpers over finite-field elements.
//!
//! Polynomials are coefficient vectors, lowest degree first, all coefficients
//! in the same field. Used for root finding, residual polynomials, and the
//! group-order oracles; not exposed as a public series type.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::finite_field::{FFElement, FiniteField};

pub fn trim(a: &mut Vec<FFElement>) {
    while a.len() > 1 && a.last().unwrap().is_zero() {
        a.pop();
    }
}

pub fn deg(a: &[FFElement]) -> usize {
    let mut d = a.len().saturating_sub(1);
    while d > 0 && a[d].is_zero() {
        d -= 1;
    }
    d
}

pub fn is_zero(a: &[FFElement]) -> bool {
    a.iter().all(|c| c.is_zero())
}

pub fn add(a: &[FFElement], b: &[FFElement]) -> Vec<FFElement> {
    let n = a.len().max(b.len());
    let field = a.first().or_else(|| b.first()).unwrap().field().clone();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = a.get(i).cloned().unwrap_or_else(|| zero_of(&field));
        let y = b.get(i).cloned().unwrap_or_else(|| zero_of(&field));
        out.push(x.add(&y));
    }
    trim(&mut out);
    out
}

pub fn sub(a: &[FFElement], b: &[FFElement]) -> Vec<FFElement> {
    add(a, &neg(b))
}

pub fn neg(a: &[FFElement]) -> Vec<FFElement> {
    a.iter().map(|c| c.neg()).collect()
}

fn zero_of(field: &Arc<FiniteField>) -> FFElement {
    field.zero()
}

pub fn scalar_mul(a: &[FFElement], c: &FFElement) -> Vec<FFElement> {
    a.iter().map(|x| x.mul(c)).collect()
}

pub fn mul(a: &[FFElement], b: &[FFElement]) -> Vec<FFElement> {
    let field = a[0].field().clone();
    let mut out = vec![field.zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] = out[i + j].add(&x.mul(y));
            }
        }
    }
    trim(&mut out);
    out
}

pub fn monic(a: &[FFElement]) -> Result<Vec<FFElement>> {
    let mut a = a.to_vec();
    trim(&mut a);
    let lead = a.last().unwrap();
    if lead.is_zero() {
        return Err(Error::DivisionByZero);
    }
    if lead.is_one() {
        return Ok(a);
    }
    let inv = lead.inv()?;
    Ok(scalar_mul(&a, &inv))
}

pub fn divrem(a: &[FFElement], b: &[FFElement]) -> Result<(Vec<FFElement>, Vec<FFElement>)> {
    let mut r = a.to_vec();
    trim(&mut r);
    let mut b = b.to_vec();
    trim(&mut b);
    let db = deg(&b);
    if db == 0 && b[0].is_zero() {
        return Err(Error::DivisionByZero);
    }
    let field = b[0].field().clone();
    let lead_inv = b[db].inv()?;
    if deg(&r) < db && !(deg(&r) == 0 && db == 0) {
        return Ok((vec![field.zero()], r));
    }
    let da = deg(&r);
    if da < db {
        return Ok((vec![field.zero()], r));
    }
    let mut q = vec![field.zero(); da - db + 1];
    for shift in (0..=da - db).rev() {
        let c = r[shift + db].mul(&lead_inv);
        if !c.is_zero() {
            for j in 0..=db {
                r[shift + j] = r[shift + j].sub(&c.mul(&b[j]));
            }
        }
        q[shift] = c;
    }
    r.truncate(db.max(1));
    trim(&mut r);
    trim(&mut q);
    Ok((q, r))
}

pub fn rem(a: &[FFElement], m: &[FFElement]) -> Result<Vec<FFElement>> {
    Ok(divrem(a, m)?.1)
}

pub fn gcd(a: &[FFElement], b: &[FFElement]) -> Result<Vec<FFElement>> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    trim(&mut a);
    trim(&mut b);
    while !is_zero(&b) {
        let r = rem(&a, &b)?;
        a = b;
        b = r;
    }
    Ok(a)
}

/// `base^e mod m`.
pub fn powmod(base: &[FFElement], mut e: u128, m: &[FFElement]) -> Vec<FFElement> {
    let field = base[0].field().clone();
    let mut acc = vec![field.one()];
    let mut b = rem(base, m).expect("powmod modulus nonzero");
    while e > 0 {
        if e & 1 == 1 {
            acc = rem(&mul(&acc, &b), m).unwrap();
        }
        b = rem(&mul(&b, &b), m).unwrap();
        e >>= 1;
    }
    acc
}

pub fn eval(a: &[FFElement], x: &FFElement) -> FFElement {
    let mut acc = x.field().zero();
    for c in a.iter().rev() {
        acc = acc.mul(x).add(c);
    }
    acc
}

/// Synthetic division by `(X - r)`; returns `(quotient, remainder)`.
pub fn deflate(a: &[FFElement], r: &FFElement) -> (Vec<FFElement>, FFElement) {
    let field = r.field().clone();
    let mut q = vec![field.zero(); a.len().saturating_sub(1)];
    let mut carry = field.zero();
    for i in (0..a.len()).rev() {
        let v = a[i].add(&carry);
        if i == 0 {
            return (q, v);
        }
        q[i - 1] = v.clone();
        carry = v.mul(r);
    }
    (q, carry)
}

pub fn derivative(a: &[FFElement]) -> Vec<FFElement> {
    let field = a[0].field().clone();
    if a.len() <= 1 {
        return vec![field.zero()];
    }
    let p = field.p();
    let mut out = Vec::with_capacity(a.len() - 1);
    for (i, c) in a.iter().enumerate().skip(1) {
        let scale = a[0].field().from_int((i as u64) % p);
        out.push(c.mul(&scale));
    }
    trim(&mut out);
    out
}
