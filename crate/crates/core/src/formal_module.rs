//! The equal-characteristic additive model of the universal one-dimensional
//! formal o-module: multiplication by the uniformizer is
//! [w]_X(T) = sum u_i T^{q^i} + T^{q^n}, an additive polynomial. This module
//! provides the o/(w^m) scalar ring, additive polynomials over symbolic or
//! series coefficients with twisted composition, congruence checks of the
//! defining shape, and reduction/specialization to Newton strata.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::finite_field::{FFElement, FiniteField};
use crate::laurent::LaurentSeries;

/// Element of o/(w^m): coefficient list a_0..a_{m-1} over F_q with
/// a = sum a_j w^j.
#[derive(Clone)]
pub struct OElement {
    field: Arc<FiniteField>,
    coeffs: Vec<FFElement>,
}

impl PartialEq for OElement {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs
    }
}
impl Eq for OElement {}
impl std::hash::Hash for OElement {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.coeffs.hash(state);
    }
}

impl OElement {
    pub fn new(field: &Arc<FiniteField>, coeffs: Vec<FFElement>) -> OElement {
        assert!(!coeffs.is_empty());
        OElement {
            field: field.clone(),
            coeffs,
        }
    }

    pub fn zero(field: &Arc<FiniteField>, m: usize) -> OElement {
        OElement::new(field, vec![field.zero(); m])
    }

    pub fn one(field: &Arc<FiniteField>, m: usize) -> OElement {
        let mut c = vec![field.zero(); m];
        c[0] = field.one();
        OElement::new(field, c)
    }

    /// w^j as a level-m element.
    pub fn pi_power(field: &Arc<FiniteField>, m: usize, j: usize) -> OElement {
        let mut c = vec![field.zero(); m];
        if j < m {
            c[j] = field.one();
        }
        OElement::new(field, c)
    }

    pub fn level(&self) -> usize {
        self.coeffs.len()
    }

    pub fn field(&self) -> &Arc<FiniteField> {
        &self.field
    }

    pub fn coeffs(&self) -> &[FFElement] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_unit(&self) -> bool {
        !self.coeffs[0].is_zero()
    }

    pub fn add(&self, other: &OElement) -> OElement {
        assert_eq!(self.level(), other.level());
        OElement::new(
            &self.field,
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.add(b))
                .collect(),
        )
    }

    pub fn neg(&self) -> OElement {
        OElement::new(&self.field, self.coeffs.iter().map(|c| c.neg()).collect())
    }

    /// Product truncated modulo w^m.
    pub fn mul(&self, other: &OElement) -> OElement {
        let m = self.level();
        let full = self.mul_full(other);
        OElement::new(&self.field, full[..m].to_vec())
    }

    /// Untruncated polynomial product in w. The o-action homomorphism law
    /// holds for this product, not for the mod-w^m one (w·w is zero at
    /// level 2 but the composed action is not).
    pub fn mul_full(&self, other: &OElement) -> Vec<FFElement> {
        let mut out = vec![self.field.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        out
    }

    /// Deterministic enumeration of all q^m level-m elements.
    pub fn all(field: &Arc<FiniteField>, m: usize) -> Result<Vec<OElement>> {
        let q = field.order();
        let total = q.checked_pow(m as u32).ok_or(Error::Overflow)?;
        if total > (1u128 << 22) {
            return Err(Error::CapExceeded(total as u64));
        }
        let mut out = Vec::with_capacity(total as usize);
        for idx in 0..total {
            let mut i = idx;
            let mut coeffs = Vec::with_capacity(m);
            for _ in 0..m {
                coeffs.push(field.element_at(i % q));
                i /= q;
            }
            out.push(OElement::new(field, coeffs));
        }
        Ok(out)
    }
}

impl fmt::Debug for OElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(j, c)| match j {
                0 => format!("{c}"),
                1 => format!("{c}*w"),
                _ => format!("{c}*w^{j}"),
            })
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// Coefficient ring for additive polynomials: needs arithmetic and the
/// q-power Frobenius for twisted composition.
pub trait RingElem: Clone {
    fn r_add(&self, other: &Self) -> Self;
    fn r_mul(&self, other: &Self) -> Self;
    fn r_neg(&self) -> Self;
    fn r_is_zero(&self) -> bool;
    /// p^s-th power (s = log_p q times the twist count).
    fn r_frob(&self, s: usize) -> Self;
    /// Multiplication by a base-field scalar.
    fn r_scale(&self, c: &FFElement) -> Self;
}

impl RingElem for LaurentSeries {
    fn r_add(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn r_mul(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn r_neg(&self) -> Self {
        self.neg()
    }
    fn r_is_zero(&self) -> bool {
        self.is_exact_zero()
    }
    fn r_frob(&self, s: usize) -> Self {
        self.frobenius_q(s)
    }
    fn r_scale(&self, c: &FFElement) -> Self {
        self.scalar_mul(c)
    }
}

/// Multivariate polynomial in u_0..u_{n-1} over F_q, used for the symbolic
/// model. Keys are exponent vectors.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SymPoly {
    field: Arc<FiniteField>,
    nvars: usize,
    terms: BTreeMap<Vec<u32>, FFElement>,
}

impl SymPoly {
    pub fn zero(field: &Arc<FiniteField>, nvars: usize) -> SymPoly {
        SymPoly {
            field: field.clone(),
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(field: &Arc<FiniteField>, nvars: usize, c: FFElement) -> SymPoly {
        let mut s = SymPoly::zero(field, nvars);
        if !c.is_zero() {
            s.terms.insert(vec![0; nvars], c);
        }
        s
    }

    pub fn one(field: &Arc<FiniteField>, nvars: usize) -> SymPoly {
        Self::constant(field, nvars, field.one())
    }

    pub fn var(field: &Arc<FiniteField>, nvars: usize, i: usize) -> SymPoly {
        let mut e = vec![0u32; nvars];
        e[i] = 1;
        let mut s = SymPoly::zero(field, nvars);
        s.terms.insert(e, field.one());
        s
    }

    /// True when the polynomial lies in the ideal (u_0,..,u_{i-1}): every
    /// monomial involves one of those variables.
    pub fn in_ideal(&self, i: usize) -> bool {
        self.terms
            .keys()
            .all(|e| e.iter().take(i).any(|&x| x > 0))
    }

    pub fn is_var(&self, i: usize) -> bool {
        self.terms.len() == 1 && {
            let (e, c) = self.terms.iter().next().unwrap();
            c.is_one() && e.iter().enumerate().all(|(j, &x)| x == u32::from(j == i))
        }
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && {
            let (e, c) = self.terms.iter().next().unwrap();
            c.is_one() && e.iter().all(|&x| x == 0)
        }
    }
}

impl RingElem for SymPoly {
    fn r_add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            let entry = out
                .terms
                .entry(e.clone())
                .or_insert_with(|| self.field.zero());
            *entry = entry.add(c);
        }
        out.terms.retain(|_, c| !c.is_zero());
        out
    }
    fn r_mul(&self, other: &Self) -> Self {
        let mut out = SymPoly::zero(&self.field, self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                let c = c1.mul(c2);
                let entry = out.terms.entry(e).or_insert_with(|| self.field.zero());
                *entry = entry.add(&c);
            }
        }
        out.terms.retain(|_, c| !c.is_zero());
        out
    }
    fn r_neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.neg();
        }
        out
    }
    fn r_is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn r_frob(&self, s: usize) -> Self {
        // coefficients lie in F_q and are Frobenius-fixed; exponents scale
        let q = self.field.order() as u32;
        let mut factor = 1u32;
        for _ in 0..s {
            factor *= self.field.p() as u32;
        }
        let _ = q;
        let mut out = SymPoly::zero(&self.field, self.nvars);
        for (e, c) in &self.terms {
            let e2: Vec<u32> = e.iter().map(|&x| x * factor).collect();
            let mut cf = c.clone();
            for _ in 0..s {
                cf = cf.pow(self.field.p() as u128);
            }
            out.terms.insert(e2, cf);
        }
        out
    }
    fn r_scale(&self, c: &FFElement) -> Self {
        if c.is_zero() {
            return SymPoly::zero(&self.field, self.nvars);
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = v.mul(c);
        }
        out
    }
}

/// Additive polynomial sum c_i T^{q^i}, sparse over the twist index i.
/// Composition is twisted: coefficients of the inner factor are raised to
/// q^i when passing a twist of index i.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AdditivePoly<C: RingElem> {
    /// log_p(q): number of p-power Frobenius steps per twist.
    pub s: usize,
    pub terms: BTreeMap<u32, C>,
}

impl<C: RingElem> AdditivePoly<C> {
    pub fn zero(s: usize) -> AdditivePoly<C> {
        AdditivePoly {
            s,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms(s: usize, terms: Vec<(u32, C)>) -> AdditivePoly<C> {
        let mut map = BTreeMap::new();
        for (i, c) in terms {
            if !c.r_is_zero() {
                map.insert(i, c);
            }
        }
        AdditivePoly { s, terms: map }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest twist index (degree is q^this).
    pub fn top_index(&self) -> Option<u32> {
        self.terms.keys().next_back().copied()
    }

    pub fn add(&self, other: &AdditivePoly<C>) -> AdditivePoly<C> {
        let mut out = self.clone();
        for (i, c) in &other.terms {
            match out.terms.get_mut(i) {
                Some(x) => {
                    *x = x.r_add(c);
                    if x.r_is_zero() {
                        out.terms.remove(i);
                    }
                }
                None => {
                    out.terms.insert(*i, c.clone());
                }
            }
        }
        out
    }

    pub fn scale(&self, c: &FFElement) -> AdditivePoly<C> {
        let mut out = AdditivePoly::zero(self.s);
        if c.is_zero() {
            return out;
        }
        for (i, x) in &self.terms {
            let y = x.r_scale(c);
            if !y.r_is_zero() {
                out.terms.insert(*i, y);
            }
        }
        out
    }

    /// self(other(T)): (f∘g)_k = sum_{i+j=k} f_i · g_j^{q^i}.
    pub fn compose(&self, other: &AdditivePoly<C>) -> AdditivePoly<C> {
        let mut out: AdditivePoly<C> = AdditivePoly::zero(self.s);
        for (i, ci) in &self.terms {
            for (j, dj) in &other.terms {
                let k = i + j;
                let term = ci.r_mul(&dj.r_frob(self.s * *i as usize));
                match out.terms.get_mut(&k) {
                    Some(x) => {
                        *x = x.r_add(&term);
                        if x.r_is_zero() {
                            out.terms.remove(&k);
                        }
                    }
                    None => {
                        if !term.r_is_zero() {
                            out.terms.insert(k, term);
                        }
                    }
                }
            }
        }
        out
    }

    /// m-fold composition power.
    pub fn compose_power(&self, m: usize) -> AdditivePoly<C> {
        assert!(m >= 1);
        let mut out = self.clone();
        for _ in 1..m {
            out = self.compose(&out);
        }
        out
    }

    /// Coefficientwise q^(s·j) Frobenius twist of the whole polynomial.
    pub fn twist(&self, j: usize) -> AdditivePoly<C> {
        let mut out = AdditivePoly::zero(self.s);
        for (i, c) in &self.terms {
            out.terms.insert(*i, c.r_frob(self.s * j));
        }
        out
    }
}

impl AdditivePoly<LaurentSeries> {
    pub fn eval(&self, x: &LaurentSeries, field: &Arc<FiniteField>) -> LaurentSeries {
        let mut acc = LaurentSeries::exact_zero(field);
        let q = field.p().pow(self.s as u32) as u64;
        let _ = q;
        for (i, c) in &self.terms {
            let xi = x.frobenius_q(self.s * *i as usize);
            acc = acc.add(&c.mul(&xi));
        }
        acc
    }

    /// Dense coefficient vector in T, suitable for splitting.
    pub fn to_dense(&self, field: &Arc<FiniteField>) -> Vec<LaurentSeries> {
        let q = (field.p() as u64).pow(self.s as u32);
        let top = self.top_index().unwrap_or(0);
        let deg = (q as usize).pow(top);
        let mut out = vec![LaurentSeries::exact_zero(field); deg + 1];
        for (i, c) in &self.terms {
            out[(q as usize).pow(*i)] = c.clone();
        }
        out
    }
}

/// Model coefficient: an indeterminate u_i, the constant 1, a base scalar,
/// or a specialized series.
#[derive(Clone, Debug)]
pub enum ModelCoeff {
    U(usize),
    One,
    Scalar(FFElement),
    Series(LaurentSeries),
}

/// The additive model of the universal formal o-module of height n:
/// [w]_X = sum_{i<n} u_i T^{q^i} + T^{q^n}.
#[derive(Clone, Debug)]
pub struct FormalOModule {
    /// F_q, the residue field of o.
    pub field: Arc<FiniteField>,
    pub n: usize,
    /// Raw-degree term map, normally {q^i -> U(i), q^n -> One}.
    pub terms: BTreeMap<u64, ModelCoeff>,
}

pub fn build_model(p: u64, q_field: &Arc<FiniteField>, n: usize) -> Result<FormalOModule> {
    if q_field.p() != p {
        return Err(Error::CharacteristicMismatch {
            q: q_field.order() as u64,
            p,
        });
    }
    assert!(n >= 1);
    let q = q_field.order() as u64;
    let mut terms = BTreeMap::new();
    for i in 0..n {
        terms.insert(q.pow(i as u32), ModelCoeff::U(i));
    }
    terms.insert(q.pow(n as u32), ModelCoeff::One);
    Ok(FormalOModule {
        field: q_field.clone(),
        n,
        terms,
    })
}

#[derive(Clone, Debug)]
pub struct CongruenceReport {
    /// Pass/fail for each i = 0..=n.
    pub pass: Vec<bool>,
    pub non_additive: bool,
}

impl CongruenceReport {
    pub fn all_pass(&self) -> bool {
        !self.non_additive && self.pass.iter().all(|&b| b)
    }
}

impl FormalOModule {
    pub fn s(&self) -> usize {
        self.field.degree()
    }

    pub fn q(&self) -> u64 {
        self.field.order() as u64
    }

    /// Replace or insert a raw term; used to probe the congruence checks.
    pub fn set_term(&mut self, degree: u64, coeff: ModelCoeff) {
        self.terms.insert(degree, coeff);
    }

    fn coeff_as_sym(&self, c: &ModelCoeff) -> SymPoly {
        match c {
            ModelCoeff::U(i) => SymPoly::var(&self.field, self.n, *i),
            ModelCoeff::One => SymPoly::one(&self.field, self.n),
            ModelCoeff::Scalar(x) => SymPoly::constant(&self.field, self.n, x.clone()),
            ModelCoeff::Series(_) => SymPoly::zero(&self.field, self.n),
        }
    }

    /// Verify [w] ≡ u_i T^{q^i} modulo (u_0,..,u_{i-1}) and modulo T^{q^i+1}
    /// for each i = 0..=n (u_n = 1).
    pub fn check_congruences(&self) -> CongruenceReport {
        let q = self.q();
        let mut non_additive = false;
        for &e in self.terms.keys() {
            let mut x = e;
            while x % q == 0 {
                x /= q;
            }
            if x != 1 {
                non_additive = true;
            }
        }
        let mut pass = Vec::with_capacity(self.n + 1);
        for i in 0..=self.n {
            let cutoff = q.pow(i as u32);
            let mut ok = true;
            for (&e, c) in &self.terms {
                if e > cutoff {
                    continue;
                }
                if matches!(c, ModelCoeff::Series(_)) {
                    ok = false;
                    continue;
                }
                let sym = self.coeff_as_sym(c);
                if e == cutoff {
                    // must be exactly u_i T^{q^i} (or T^{q^n}) up to ideal terms
                    let target_ok = if i == self.n {
                        sym.is_one()
                    } else {
                        sym.is_var(i)
                    };
                    if !target_ok && !sym.in_ideal(i) {
                        ok = false;
                    }
                } else if !sym.in_ideal(i) {
                    ok = false;
                }
            }
            pass.push(ok);
        }
        CongruenceReport { pass, non_additive }
    }

    /// The symbolic additive polynomial of [w]_X. Requires a canonical
    /// additive shape (all degrees powers of q, symbolic coefficients).
    pub fn sym_multiplication(&self) -> Result<AdditivePoly<SymPoly>> {
        let q = self.q();
        let mut terms = Vec::new();
        for (&e, c) in &self.terms {
            let mut x = e;
            let mut i = 0u32;
            while x % q == 0 {
                x /= q;
                i += 1;
            }
            if x != 1 {
                return Err(Error::Parse(format!(
                    "degree {e} is not a power of q = {q}"
                )));
            }
            terms.push((i, self.coeff_as_sym(c)));
        }
        Ok(AdditivePoly::from_terms(self.s(), terms))
    }

    /// [a]_X = sum a_j [w]^{∘j} for a coefficient list over F_q (an element
    /// of o given by finitely many w-digits).
    pub fn act(&self, a: &[FFElement]) -> Result<AdditivePoly<SymPoly>> {
        let mul = self.sym_multiplication()?;
        let mut out: AdditivePoly<SymPoly> = AdditivePoly::zero(self.s());
        let mut power: Option<AdditivePoly<SymPoly>> = None; // [w]^{∘j}
        for (j, aj) in a.iter().enumerate() {
            let pj = match (&power, j) {
                (_, 0) => {
                    let ident = AdditivePoly::from_terms(
                        self.s(),
                        vec![(0u32, SymPoly::one(&self.field, self.n))],
                    );
                    ident
                }
                (Some(p), _) => mul.compose(p),
                (None, _) => unreachable!(),
            };
            out = out.add(&pj.scale(aj));
            power = Some(pj);
        }
        Ok(out)
    }

    /// [w^m]_X symbolically.
    pub fn division_polynomial(&self, m: usize) -> Result<AdditivePoly<SymPoly>> {
        Ok(self.sym_multiplication()?.compose_power(m))
    }

    /// Set u_0 = .. = u_{h-1} = 0: the reduced [w] is g(T^{q^h}) with
    /// g(S) = sum_{i=h..n} u_i S^{q^{i-h}}.
    pub fn reduce_to_stratum(&self, h: usize) -> Result<StratumModule> {
        if h >= self.n {
            return Err(Error::Parse(format!("stratum index {h} out of range")));
        }
        Ok(StratumModule {
            field: self.field.clone(),
            n: self.n,
            h,
        })
    }
}

/// Symbolic stratum: the étale part g(S) = sum_{i=h..n} u_i S^{q^{i-h}}.
#[derive(Clone, Debug)]
pub struct StratumModule {
    pub field: Arc<FiniteField>,
    pub n: usize,
    pub h: usize,
}

impl StratumModule {
    pub fn rank(&self) -> usize {
        self.n - self.h
    }

    /// Symbolic g as an additive polynomial (variables u_h..u_{n-1}).
    pub fn sym_etale(&self) -> AdditivePoly<SymPoly> {
        let s = self.field.degree();
        let mut terms = Vec::new();
        for i in self.h..self.n {
            terms.push((
                (i - self.h) as u32,
                SymPoly::var(&self.field, self.n, i),
            ));
        }
        terms.push((
            (self.n - self.h) as u32,
            SymPoly::one(&self.field, self.n),
        ));
        AdditivePoly::from_terms(s, terms)
    }

    /// Assign u_h..u_{n-1}; every series must land in the maximal ideal
    /// and u_h must be nonzero (open stratum).
    pub fn specialize(&self, assignment: &[LaurentSeries]) -> Result<SpecializedStratum> {
        if assignment.len() != self.rank() {
            return Err(Error::Parse(format!(
                "expected {} series for u_{}..u_{}",
                self.rank(),
                self.h,
                self.n - 1
            )));
        }
        for a in assignment {
            match a.valuation().lower_bound() {
                None => {} // exact zero is allowed except at u_h
                Some(v) if v >= 1 => {}
                _ => return Err(Error::NonPositiveValuation),
            }
        }
        if assignment[0].is_zeroish() {
            return Err(Error::OutsideOpenStratum);
        }
        let mut g = Vec::with_capacity(self.rank() + 1);
        for a in assignment {
            g.push(a.clone());
        }
        let one = LaurentSeries::one(&self.field);
        g.push(one);
        Ok(SpecializedStratum {
            field: self.field.clone(),
            n: self.n,
            h: self.h,
            g,
        })
    }
}

/// Specialized stratum: g's coefficients are concrete series over F_q.
/// g[j] is the coefficient of S^{q^j}; the top entry is 1.
#[derive(Clone, Debug)]
pub struct SpecializedStratum {
    pub field: Arc<FiniteField>,
    pub n: usize,
    pub h: usize,
    pub g: Vec<LaurentSeries>,
}

impl SpecializedStratum {
    pub fn rank(&self) -> usize {
        self.n - self.h
    }

    pub fn s(&self) -> usize {
        self.field.degree()
    }

    pub fn q(&self) -> u64 {
        self.field.order() as u64
    }

    pub fn etale(&self) -> AdditivePoly<LaurentSeries> {
        AdditivePoly::from_terms(
            self.s(),
            self.g
                .iter()
                .enumerate()
                .map(|(j, c)| (j as u32, c.clone()))
                .collect(),
        )
    }

    /// Plain m-fold composition g^{∘m}: the étale division polynomial
    /// whose roots are the level-m torsion of the étale quotient.
    pub fn etale_division(&self, m: usize) -> AdditivePoly<LaurentSeries> {
        self.etale().compose_power(m)
    }

    /// E_m = g ∘ g^{(h)} ∘ ... ∘ g^{((m-1)h)} with Frobenius-twisted
    /// factors; the reduced [w^m] equals E_m(T^{q^{mh}}).
    pub fn twisted_division(&self, m: usize) -> AdditivePoly<LaurentSeries> {
        let g = self.etale();
        let mut out = g.twist((m - 1) * self.h);
        for j in (0..m - 1).rev() {
            out = g.twist(j * self.h).compose(&out);
        }
        out
    }

    /// The reduced full division polynomial [w^m] over the stratum, as a
    /// dense coefficient vector in T.
    pub fn full_division_dense(&self, m: usize) -> Vec<LaurentSeries> {
        // reduced [w] = g(T^{q^h}); compose m times, working densely
        let q = self.q() as usize;
        let g_dense = self.etale().to_dense(&self.field);
        let insep = q.pow(self.h as u32);
        // [w](T) as dense: substitute T^{q^h} into g
        let mut pw = vec![LaurentSeries::exact_zero(&self.field); (g_dense.len() - 1) * insep + 1];
        for (i, c) in g_dense.iter().enumerate() {
            pw[i * insep] = c.clone();
        }
        let mut out = pw.clone();
        for _ in 1..m {
            out = compose_dense(&pw, &out, &self.field);
        }
        out
    }

    /// Connected-layer degree at level m.
    pub fn inseparable_degree(&self, m: usize) -> u64 {
        (self.q()).pow((m * self.h) as u32)
    }

    /// [a] acting on the étale torsion: sum a_j g^{∘j}.
    pub fn act_etale(&self, a: &[FFElement]) -> AdditivePoly<LaurentSeries> {
        let g = self.etale();
        let mut out = AdditivePoly::zero(self.s());
        let mut power = AdditivePoly::from_terms(
            self.s(),
            vec![(0u32, LaurentSeries::one(&self.field))],
        );
        for (j, aj) in a.iter().enumerate() {
            if j > 0 {
                power = g.compose(&power);
            }
            out = out.add(&power.scale(aj));
        }
        out
    }
}

/// Dense polynomial composition f(g(T)) for additive dense vectors.
pub fn compose_dense(
    f: &[LaurentSeries],
    g: &[LaurentSeries],
    field: &Arc<FiniteField>,
) -> Vec<LaurentSeries> {
    let mut acc: Vec<LaurentSeries> = vec![];
    for c in f.iter().rev() {
        acc = crate::spoly::mul(&acc, g, field);
        if !c.is_exact_zero() {
            if acc.is_empty() {
                acc.push(c.clone());
            } else {
                acc[0] = acc[0].add(c);
            }
        }
    }
    acc
}
