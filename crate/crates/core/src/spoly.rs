//! Dense polynomials in one variable with truncated Laurent-series
//! coefficients, following the slice conventions of [`crate::ffpoly`].
//! Index i holds the coefficient of T^i.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::finite_field::FiniteField;
use crate::laurent::{LaurentSeries, Valuation};

/// Drop exact-zero leading coefficients. Approximate zeros are kept: the
/// degree is then only known modulo precision and callers must decide.
pub fn trim(a: &mut Vec<LaurentSeries>) {
    while a.last().is_some_and(|c| c.is_exact_zero()) {
        a.pop();
    }
}

pub fn deg(a: &[LaurentSeries]) -> usize {
    let mut d = a.len();
    while d > 0 && a[d - 1].is_exact_zero() {
        d -= 1;
    }
    d.saturating_sub(1)
}

pub fn is_zero(a: &[LaurentSeries]) -> bool {
    a.iter().all(|c| c.is_exact_zero())
}

pub fn add(a: &[LaurentSeries], b: &[LaurentSeries], field: &Arc<FiniteField>) -> Vec<LaurentSeries> {
    let n = a.len().max(b.len());
    let zero = LaurentSeries::exact_zero(field);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = a.get(i).unwrap_or(&zero);
        let y = b.get(i).unwrap_or(&zero);
        out.push(x.add(y));
    }
    trim(&mut out);
    out
}

pub fn neg(a: &[LaurentSeries]) -> Vec<LaurentSeries> {
    a.iter().map(|c| c.neg()).collect()
}

pub fn sub(a: &[LaurentSeries], b: &[LaurentSeries], field: &Arc<FiniteField>) -> Vec<LaurentSeries> {
    add(a, &neg(b), field)
}

pub fn scalar_mul(a: &[LaurentSeries], c: &LaurentSeries) -> Vec<LaurentSeries> {
    a.iter().map(|x| x.mul(c)).collect()
}

pub fn mul(a: &[LaurentSeries], b: &[LaurentSeries], field: &Arc<FiniteField>) -> Vec<LaurentSeries> {
    if is_zero(a) || is_zero(b) {
        return vec![];
    }
    let mut out = vec![LaurentSeries::exact_zero(field); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_exact_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_exact_zero() {
                out[i + j] = out[i + j].add(&x.mul(y));
            }
        }
    }
    trim(&mut out);
    out
}

pub fn eval(a: &[LaurentSeries], x: &LaurentSeries, field: &Arc<FiniteField>) -> LaurentSeries {
    let mut acc = LaurentSeries::exact_zero(field);
    for c in a.iter().rev() {
        acc = acc.mul(x).add(c);
    }
    acc
}

pub fn derivative(a: &[LaurentSeries], field: &Arc<FiniteField>) -> Vec<LaurentSeries> {
    if a.len() <= 1 {
        return vec![];
    }
    let mut out = Vec::with_capacity(a.len() - 1);
    for (i, c) in a.iter().enumerate().skip(1) {
        let scalar = field.from_int(i as u64 % field.p());
        out.push(c.scalar_mul(&scalar));
    }
    trim(&mut out);
    out
}

/// Division with remainder. The divisor's leading coefficient must be
/// invertible at the current precision.
pub fn divrem(
    a: &[LaurentSeries],
    b: &[LaurentSeries],
    field: &Arc<FiniteField>,
    fallback_terms: usize,
) -> Result<(Vec<LaurentSeries>, Vec<LaurentSeries>)> {
    let db = deg(b);
    if is_zero(b) {
        return Err(Error::DivisionByZero);
    }
    let lead = &b[db];
    if lead.is_zeroish() {
        return Err(Error::PrecisionExhausted(
            "divisor leading coefficient is an approximate zero".into(),
        ));
    }
    let lead_inv = lead.invert(fallback_terms)?;
    let mut rem: Vec<LaurentSeries> = a.to_vec();
    trim(&mut rem);
    if rem.len() <= db {
        return Ok((vec![], rem));
    }
    let mut quo = vec![LaurentSeries::exact_zero(field); rem.len() - db];
    while deg(&rem) >= db && !is_zero(&rem) {
        let dr = deg(&rem);
        let c = rem[dr].mul(&lead_inv);
        let shift = dr - db;
        quo[shift] = quo[shift].add(&c);
        for j in 0..=db {
            let t = b[j].mul(&c);
            rem[shift + j] = rem[shift + j].sub(&t);
        }
        // the top coefficient must cancel to known precision
        if !rem[dr].is_zeroish() {
            return Err(Error::PrecisionExhausted(
                "leading term failed to cancel in division".into(),
            ));
        }
        rem.truncate(dr);
        // drop further coefficients that became approximate zeros of no content
        while rem
            .last()
            .is_some_and(|c| c.is_exact_zero())
        {
            rem.pop();
        }
    }
    trim(&mut quo);
    Ok((quo, rem))
}

/// Synthetic division by (T - r); returns (quotient, remainder value f(r)).
pub fn deflate_root(
    a: &[LaurentSeries],
    r: &LaurentSeries,
    field: &Arc<FiniteField>,
) -> (Vec<LaurentSeries>, LaurentSeries) {
    let d = deg(a);
    if a.is_empty() {
        return (vec![], LaurentSeries::exact_zero(field));
    }
    let mut quo = vec![LaurentSeries::exact_zero(field); d];
    let mut carry = a[d].clone();
    for i in (0..d).rev() {
        quo[i] = carry.clone();
        carry = a[i].add(&carry.mul(r));
    }
    (quo, carry)
}

pub fn monic(
    a: &[LaurentSeries],
    fallback_terms: usize,
) -> Result<Vec<LaurentSeries>> {
    let d = deg(a);
    if is_zero(a) {
        return Err(Error::DivisionByZero);
    }
    let inv = a[d].invert(fallback_terms)?;
    Ok(a.iter().map(|c| c.mul(&inv)).collect())
}

pub fn map_coeffs<F>(a: &[LaurentSeries], f: F) -> Result<Vec<LaurentSeries>>
where
    F: Fn(&LaurentSeries) -> Result<LaurentSeries>,
{
    a.iter().map(|c| f(c)).collect()
}

/// Valuation of Res(a, b) computed along the Euclidean remainder sequence.
/// Errors with Inseparable when the sequence terminates at an exact zero
/// (nontrivial gcd) and PrecisionExhausted when a remainder is an
/// approximate zero that cannot be continued.
pub fn resultant_valuation(
    a: &[LaurentSeries],
    b: &[LaurentSeries],
    field: &Arc<FiniteField>,
    fallback_terms: usize,
) -> Result<i64> {
    let mut f: Vec<LaurentSeries> = a.to_vec();
    let mut g: Vec<LaurentSeries> = b.to_vec();
    trim(&mut f);
    trim(&mut g);
    let mut acc: i64 = 0;
    loop {
        if is_zero(&g) {
            return Err(Error::Inseparable);
        }
        let dg = deg(&g);
        if dg == 0 {
            if g[0].is_zeroish() {
                return Err(Error::PrecisionExhausted(
                    "resultant sequence ended at an approximate zero".into(),
                ));
            }
            let vg = g[0].valuation().exact()?;
            return Ok(acc + vg * deg(&f) as i64);
        }
        let (_, r) = divrem(&f, &g, field, fallback_terms)?;
        let mut r = r;
        trim(&mut r);
        if !is_zero(&r) && r.iter().all(|c| c.is_zeroish()) {
            return Err(Error::PrecisionExhausted(
                "euclidean remainder is an approximate zero".into(),
            ));
        }
        // keep only genuinely known coefficients at the top
        while r.last().is_some_and(|c| c.is_zeroish()) {
            r.pop();
        }
        if r.is_empty() {
            return Err(Error::Inseparable);
        }
        let dr = deg(&r);
        let vlg = g[dg].valuation().exact()?;
        acc += vlg * (deg(&f) as i64 - dr as i64);
        f = g;
        g = r;
    }
}

/// Separability guard: gcd(f, f') is trivial iff Res(f, f') is nonzero.
pub fn is_separable(
    f: &[LaurentSeries],
    field: &Arc<FiniteField>,
    fallback_terms: usize,
) -> Result<bool> {
    let fp = derivative(f, field);
    if is_zero(&fp) {
        return Ok(false);
    }
    match resultant_valuation(f, &fp, field, fallback_terms) {
        Ok(_) => Ok(true),
        Err(Error::Inseparable) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Smallest exact valuation among known-nonzero coefficients; used for
/// quick scaling decisions.
pub fn min_coeff_valuation(a: &[LaurentSeries]) -> Option<i64> {
    a.iter()
        .filter_map(|c| match c.valuation() {
            Valuation::Exact(v) => Some(v),
            _ => None,
        })
        .min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_field::make_field;

    fn f2() -> Arc<FiniteField> {
        make_field(2, 1).unwrap()
    }

    fn tpow(field: &Arc<FiniteField>, e: i64) -> LaurentSeries {
        LaurentSeries::monomial(field.one(), e)
    }

    #[test]
    fn divrem_roundtrip() {
        let f = f2();
        // a = T^3 + t*T + t^2, b = T + t over F_2((t))
        let a = vec![
            tpow(&f, 2),
            tpow(&f, 1),
            LaurentSeries::exact_zero(&f),
            LaurentSeries::one(&f),
        ];
        let b = vec![tpow(&f, 1), LaurentSeries::one(&f)];
        let (q, r) = divrem(&a, &b, &f, 32).unwrap();
        let recon = add(&mul(&q, &b, &f), &r, &f);
        let diff = sub(&recon, &a, &f);
        assert!(diff.iter().all(|c| c.is_zeroish()));
    }

    #[test]
    fn deflate_matches_eval() {
        let f = f2();
        let a = vec![
            tpow(&f, 1),
            LaurentSeries::one(&f),
            LaurentSeries::one(&f),
        ];
        let r = tpow(&f, 2);
        let (q, rem) = deflate_root(&a, &r, &f);
        assert!(rem.agrees_with(&eval(&a, &r, &f)));
        // a = q*(T - r) + rem
        let lin = vec![r.neg(), LaurentSeries::one(&f)];
        let recon = add(&mul(&q, &lin, &f), &[rem], &f);
        let diff = sub(&recon, &a, &f);
        assert!(diff.iter().all(|c| c.is_zeroish()));
    }

    #[test]
    fn resultant_valuation_of_separable_quadratic() {
        let f = f2();
        // f = T^2 + tT + t; f' = t; Res(f, f') = t^2
        let a = vec![tpow(&f, 1), tpow(&f, 1), LaurentSeries::one(&f)];
        let v = resultant_valuation(&a, &derivative(&a, &f), &f, 32).unwrap();
        assert_eq!(v, 2);
        assert!(is_separable(&a, &f, 32).unwrap());
    }

    #[test]
    fn inseparable_detected() {
        let f = f2();
        // T^2 + t^2 = (T + t)^2 in characteristic 2
        let a = vec![tpow(&f, 2), LaurentSeries::exact_zero(&f), LaurentSeries::one(&f)];
        assert!(!is_separable(&a, &f, 32).unwrap());
    }
}
