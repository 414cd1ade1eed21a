//! Exact truncated Laurent series over a finite field in one uniformizer.
//!
//! The precision model is absolute: a series is "known modulo t^P" and
//! arithmetic min-combines precision bounds. A series may also be exact
//! (polynomial support, no truncation), in which case it behaves as if
//! `P = +infinity`. Normalized nonzero series have a nonzero lowest
//! coefficient; an all-zero series only carries its valuation bound.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::finite_field::{FFElement, FiniteField};

/// Default number of known coefficients for operations that truncate.
pub const DEFAULT_PRECISION: i64 = 64;
/// Hard ceiling for precision-doubling retries.
pub const MAX_PRECISION: i64 = 1024;

/// Valuation of a series, possibly only bounded from below.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Valuation {
    Exact(i64),
    /// Approximate zero: all known coefficients vanish, valuation >= bound.
    AtLeast(i64),
    /// The exact zero series.
    Infinite,
}

impl Valuation {
    pub fn exact(self) -> Result<i64> {
        match self {
            Valuation::Exact(v) => Ok(v),
            Valuation::AtLeast(b) => Err(Error::PrecisionExhausted(format!(
                "valuation only known to be >= {b}"
            ))),
            Valuation::Infinite => Err(Error::DivisionByZero),
        }
    }
    /// Lower bound usable for estimates (None = +infinity).
    pub fn lower_bound(self) -> Option<i64> {
        match self {
            Valuation::Exact(v) | Valuation::AtLeast(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

fn min_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

fn add_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.saturating_add(y)),
        _ => None,
    }
}

#[derive(Clone)]
pub struct LaurentSeries {
    field: Arc<FiniteField>,
    /// Exponent of the lowest stored coefficient.
    v0: i64,
    /// Dense coefficients for exponents `v0, v0+1, ...`; empty means zero.
    coeffs: Vec<FFElement>,
    /// Known modulo `t^prec`; `None` means exact.
    prec: Option<i64>,
}

impl LaurentSeries {
    pub fn new(
        field: Arc<FiniteField>,
        v0: i64,
        coeffs: Vec<FFElement>,
        prec: Option<i64>,
    ) -> LaurentSeries {
        let mut s = LaurentSeries {
            field,
            v0,
            coeffs,
            prec,
        };
        s.normalize();
        s
    }

    fn normalize(&mut self) {
        // truncate beyond the precision bound
        if let Some(p) = self.prec {
            if self.v0 >= p {
                self.coeffs.clear();
            } else {
                let keep = (p - self.v0) as usize;
                if self.coeffs.len() > keep {
                    self.coeffs.truncate(keep);
                }
            }
        }
        // strip leading zeros
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.v0 += lead as i64;
        }
        // strip trailing zeros (implicitly still known-zero up to prec)
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.v0 = match self.prec {
                Some(p) => p,
                None => 0,
            };
        }
    }

    pub fn exact_zero(field: &Arc<FiniteField>) -> LaurentSeries {
        LaurentSeries {
            field: field.clone(),
            v0: 0,
            coeffs: vec![],
            prec: None,
        }
    }

    /// The approximate zero "0 mod t^prec".
    pub fn zero_mod(field: &Arc<FiniteField>, prec: i64) -> LaurentSeries {
        LaurentSeries {
            field: field.clone(),
            v0: prec,
            coeffs: vec![],
            prec: Some(prec),
        }
    }

    pub fn one(field: &Arc<FiniteField>) -> LaurentSeries {
        Self::monomial(field.one(), 0)
    }

    /// Exact `c * t^exp`.
    pub fn monomial(c: FFElement, exp: i64) -> LaurentSeries {
        let field = c.field().clone();
        LaurentSeries::new(field, exp, vec![c], None)
    }

    /// Exact series from coefficients of `t^start, t^(start+1), ...`.
    pub fn from_coeffs(field: &Arc<FiniteField>, start: i64, coeffs: Vec<FFElement>) -> Self {
        LaurentSeries::new(field.clone(), start, coeffs, None)
    }

    pub fn field(&self) -> &Arc<FiniteField> {
        &self.field
    }
    pub fn is_exact(&self) -> bool {
        self.prec.is_none()
    }
    pub fn precision(&self) -> Option<i64> {
        self.prec
    }
    /// All known coefficients vanish (exact or approximate zero).
    pub fn is_zeroish(&self) -> bool {
        self.coeffs.is_empty()
    }
    pub fn is_exact_zero(&self) -> bool {
        self.coeffs.is_empty() && self.prec.is_none()
    }

    pub fn valuation(&self) -> Valuation {
        if self.coeffs.is_empty() {
            match self.prec {
                None => Valuation::Infinite,
                Some(p) => Valuation::AtLeast(p),
            }
        } else {
            Valuation::Exact(self.v0)
        }
    }

    /// Coefficient of `t^e`; `None` when the coefficient is not known.
    pub fn coeff_at(&self, e: i64) -> Option<FFElement> {
        if let Some(p) = self.prec {
            if e >= p {
                return None;
            }
        }
        if e < self.v0 {
            return Some(self.field.zero());
        }
        let idx = (e - self.v0) as usize;
        Some(
            self.coeffs
                .get(idx)
                .cloned()
                .unwrap_or_else(|| self.field.zero()),
        )
    }

    /// Number of known coefficient places starting at the valuation
    /// (`usize::MAX` stands in for exact series).
    pub fn known_terms(&self) -> usize {
        match self.prec {
            None => usize::MAX,
            Some(p) => (p - self.v0).max(0) as usize,
        }
    }

    pub fn checked_add(&self, other: &LaurentSeries) -> Result<LaurentSeries> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        Ok(self.add(other))
    }

    pub fn add(&self, other: &LaurentSeries) -> LaurentSeries {
        assert!(self.field == other.field, "field mismatch");
        let prec = min_opt(self.prec, other.prec);
        if self.coeffs.is_empty() && other.coeffs.is_empty() {
            return LaurentSeries::new(self.field.clone(), 0, vec![], prec);
        }
        let lo = if self.coeffs.is_empty() {
            other.v0
        } else if other.coeffs.is_empty() {
            self.v0
        } else {
            self.v0.min(other.v0)
        };
        let hi_known = |s: &LaurentSeries| s.v0 + s.coeffs.len() as i64;
        let hi = match prec {
            Some(p) => p,
            None => hi_known(self).max(hi_known(other)),
        };
        let mut coeffs = Vec::new();
        for e in lo..hi {
            let a = self.coeff_at(e).unwrap_or_else(|| self.field.zero());
            let b = other.coeff_at(e).unwrap_or_else(|| self.field.zero());
            coeffs.push(a.add(&b));
        }
        LaurentSeries::new(self.field.clone(), lo, coeffs, prec)
    }

    pub fn neg(&self) -> LaurentSeries {
        LaurentSeries {
            field: self.field.clone(),
            v0: self.v0,
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
            prec: self.prec,
        }
    }

    pub fn sub(&self, other: &LaurentSeries) -> LaurentSeries {
        self.add(&other.neg())
    }

    pub fn checked_mul(&self, other: &LaurentSeries) -> Result<LaurentSeries> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        Ok(self.mul(other))
    }

    pub fn mul(&self, other: &LaurentSeries) -> LaurentSeries {
        assert!(self.field == other.field, "field mismatch");
        let lv_a = self.valuation().lower_bound();
        let lv_b = other.valuation().lower_bound();
        let prec = min_opt(add_opt(lv_a, other.prec), add_opt(lv_b, self.prec));
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return LaurentSeries::new(self.field.clone(), 0, vec![], prec);
        }
        let v0 = self.v0 + other.v0;
        let full_len = self.coeffs.len() + other.coeffs.len() - 1;
        let keep = match prec {
            Some(p) => ((p - v0).max(0) as usize).min(full_len),
            None => full_len,
        };
        let mut coeffs = vec![self.field.zero(); keep];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() || i >= keep {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j >= keep {
                    break;
                }
                if !b.is_zero() {
                    coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
                }
            }
        }
        LaurentSeries::new(self.field.clone(), v0, coeffs, prec)
    }

    pub fn scalar_mul(&self, c: &FFElement) -> LaurentSeries {
        if c.is_zero() {
            return LaurentSeries::exact_zero(&self.field);
        }
        LaurentSeries::new(
            self.field.clone(),
            self.v0,
            self.coeffs.iter().map(|x| x.mul(c)).collect(),
            self.prec,
        )
    }

    /// Multiply by `t^delta`.
    pub fn shift(&self, delta: i64) -> LaurentSeries {
        LaurentSeries {
            field: self.field.clone(),
            v0: self.v0 + delta,
            coeffs: self.coeffs.clone(),
            prec: self.prec.map(|p| p + delta),
        }
    }

    /// Multiplicative inverse. For non-monomial exact input the result is
    /// truncated to `fallback_terms` known coefficients.
    pub fn invert(&self, fallback_terms: usize) -> Result<LaurentSeries> {
        if self.coeffs.is_empty() {
            return Err(Error::DivisionByZero);
        }
        let n = if self.coeffs.len() == 1 && self.is_exact() {
            // exact monomial: exact inverse
            let c = self.coeffs[0].inv()?;
            return Ok(LaurentSeries::monomial(c, -self.v0));
        } else {
            match self.prec {
                Some(p) => (p - self.v0) as usize,
                None => fallback_terms.max(1),
            }
        };
        let c0_inv = self.coeffs[0].inv()?;
        let mut out = Vec::with_capacity(n);
        out.push(c0_inv.clone());
        for k in 1..n {
            // b_k = -c0^{-1} * sum_{j=1..k} a_j b_{k-j}
            let mut acc = self.field.zero();
            for j in 1..=k {
                let aj = self
                    .coeffs
                    .get(j)
                    .cloned()
                    .unwrap_or_else(|| self.field.zero());
                if !aj.is_zero() {
                    acc = acc.add(&aj.mul(&out[k - j]));
                }
            }
            out.push(acc.neg().mul(&c0_inv));
        }
        Ok(LaurentSeries::new(
            self.field.clone(),
            -self.v0,
            out,
            Some(-self.v0 + n as i64),
        ))
    }

    pub fn div(&self, other: &LaurentSeries, fallback_terms: usize) -> Result<LaurentSeries> {
        Ok(self.mul(&other.invert(fallback_terms)?))
    }

    pub fn pow(&self, mut e: u64) -> LaurentSeries {
        let mut acc = LaurentSeries::one(&self.field);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// The p-th power Frobenius: coefficientwise p-th powers with exponents
    /// scaled by p. Exact in characteristic p and precision-amplifying.
    pub fn frobenius_p(&self) -> LaurentSeries {
        let p = self.field.p();
        let mut coeffs = vec![self.field.zero(); self.coeffs.len() * p as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                coeffs[i * p as usize] = c.pow(p as u128);
            }
        }
        LaurentSeries::new(
            self.field.clone(),
            self.v0 * p as i64,
            coeffs,
            self.prec.map(|q| q.saturating_mul(p as i64)),
        )
    }

    /// q-th power where `q = p^s`.
    pub fn frobenius_q(&self, s: usize) -> LaurentSeries {
        let mut out = self.clone();
        for _ in 0..s {
            out = out.frobenius_p();
        }
        out
    }

    /// Restrict to "known modulo t^prec".
    pub fn truncate_to(&self, prec: i64) -> LaurentSeries {
        if self.is_exact_zero() {
            return self.clone();
        }
        let new_prec = min_opt(self.prec, Some(prec));
        LaurentSeries::new(self.field.clone(), self.v0, self.coeffs.clone(), new_prec)
    }

    /// Exponent scaling `t -> t^b` (used when a tame radical step refines
    /// the uniformizer).
    pub fn scale_exponents(&self, b: i64) -> LaurentSeries {
        assert!(b >= 1);
        if self.coeffs.is_empty() {
            return LaurentSeries::new(
                self.field.clone(),
                0,
                vec![],
                self.prec.map(|p| p.saturating_mul(b)),
            );
        }
        let mut coeffs = vec![self.field.zero(); (self.coeffs.len() - 1) * b as usize + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i * b as usize] = c.clone();
        }
        LaurentSeries::new(
            self.field.clone(),
            self.v0 * b,
            coeffs,
            self.prec.map(|p| p.saturating_mul(b)),
        )
    }

    /// Map coefficients into another field (e.g. a field embedding).
    pub fn map_coeffs<F>(&self, target: &Arc<FiniteField>, f: F) -> Result<LaurentSeries>
    where
        F: Fn(&FFElement) -> Result<FFElement>,
    {
        let coeffs = self
            .coeffs
            .iter()
            .map(&f)
            .collect::<Result<Vec<FFElement>>>()?;
        Ok(LaurentSeries::new(
            target.clone(),
            self.v0,
            coeffs,
            self.prec,
        ))
    }

    /// Composition `sum c_i x^(v0+i)` for substitution of uniformizers.
    /// Requires `v(x) >= 1`.
    pub fn substitute(&self, x: &LaurentSeries, fallback_terms: usize) -> Result<LaurentSeries> {
        assert!(self.field == *x.field(), "field mismatch");
        match x.valuation() {
            Valuation::Exact(v) if v >= 1 => {}
            _ => {
                return Err(Error::PrecisionExhausted(
                    "substitution target must be a positive-valuation unit multiple".into(),
                ))
            }
        }
        if self.coeffs.is_empty() {
            // 0 mod t^B becomes 0 mod x^B; v(x) >= 1 so bound B * v(x) >= B
            let vx = x.valuation().lower_bound().unwrap_or(1);
            return Ok(LaurentSeries::new(
                self.field.clone(),
                0,
                vec![],
                self.prec.map(|p| p.saturating_mul(vx)),
            ));
        }
        // Horner over the stored coefficients
        let mut acc = LaurentSeries::exact_zero(&self.field);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x);
            if !c.is_zero() {
                acc = acc.add(&LaurentSeries::monomial(c.clone(), 0));
            }
        }
        // multiply by x^v0
        let head = if self.v0 >= 0 {
            x.pow(self.v0 as u64)
        } else {
            x.invert(fallback_terms)?.pow((-self.v0) as u64)
        };
        let mut out = acc.mul(&head);
        // account for truncation of self: error O(t^prec) -> O(x^prec)
        if let Some(p) = self.prec {
            let vx = x.valuation().exact()?;
            out = out.truncate_to(p.saturating_mul(vx));
        }
        Ok(out)
    }

    /// True when the difference of the two series has no known nonzero
    /// coefficient.
    pub fn agrees_with(&self, other: &LaurentSeries) -> bool {
        self.sub(other).is_zeroish()
    }

    /// Deterministic report order: by valuation, then coefficient tuples.
    pub fn report_cmp(&self, other: &LaurentSeries) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        let va = self.valuation().lower_bound();
        let vb = other.valuation().lower_bound();
        match (va, vb) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Greater,
            (Some(_), None) => return Ordering::Less,
            (Some(a), Some(b)) => {
                if a != b {
                    return a.cmp(&b);
                }
            }
        }
        let n = self.coeffs.len().max(other.coeffs.len());
        for i in 0..n {
            let a = self
                .coeffs
                .get(i)
                .cloned()
                .unwrap_or_else(|| self.field.zero());
            let b = other
                .coeffs
                .get(i)
                .cloned()
                .unwrap_or_else(|| self.field.zero());
            match a.cmp(&b) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

impl fmt::Display for LaurentSeries {
    /// Sum of monomials in increasing exponent order, e.g. `t^-1 + 1 + t`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return match self.prec {
                None => write!(f, "0"),
                Some(p) => write!(f, "O(t^{p})"),
            };
        }
        let mut parts: Vec<String> = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = self.v0 + i as i64;
            let cs = format!("{c}");
            let part = match e {
                0 => cs,
                1 => {
                    if c.is_one() {
                        "t".to_string()
                    } else {
                        format!("{cs}*t")
                    }
                }
                _ => {
                    if c.is_one() {
                        format!("t^{e}")
                    } else {
                        format!("{cs}*t^{e}")
                    }
                }
            };
            parts.push(part);
        }
        write!(f, "{}", parts.join(" + "))?;
        if let Some(p) = self.prec {
            write!(f, " + O(t^{p})")?;
        }
        Ok(())
    }
}

impl fmt::Debug for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
