//! Exact arithmetic in finite fields `F_{p^k}`, deterministic field
//! construction, and compatible embeddings along a tower.
//!
//! Fields are constructed with the lexicographically least monic irreducible
//! defining polynomial (coefficient tuples compared most-significant first),
//! so identical `(p, k)` inputs always yield identical fields. Embeddings
//! between subfields are mediated by a per-experiment [`Ambient`] field
//! `F_{p^K}`; routing every embedding through the ambient makes composites
//! agree with direct embeddings on the nose.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Caps for desk-scale experiments.
const MAX_P: u64 = 1 << 16;
const MAX_FIELD_BITS: u32 = 48;
/// Exhaustive element enumeration refuses above this cardinality.
pub const ENUM_CAP: u128 = 1 << 22;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// A finite field `F_{p^k}` with its canonical defining polynomial.
pub struct FiniteField {
    p: u64,
    k: usize,
    /// Monic defining polynomial, length `k + 1`, coefficients in `[0, p)`.
    modulus: Vec<u64>,
}

impl fmt::Debug for FiniteField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{{{}^{}}}", self.p, self.k)
    }
}

impl PartialEq for FiniteField {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.k == other.k
    }
}
impl Eq for FiniteField {}

fn field_cache() -> &'static Mutex<HashMap<(u64, usize), Arc<FiniteField>>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, usize), Arc<FiniteField>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Returns `F_{p^k}` with the lexicographically least monic irreducible
/// defining polynomial of degree `k`. Memoized; construction is deterministic.
pub fn make_field(p: u64, k: usize) -> Result<Arc<FiniteField>> {
    if !is_prime(p) {
        return Err(Error::NonPrimeCharacteristic(p));
    }
    let in_cap = k > 0
        && p < MAX_P
        && (p as u128)
            .checked_pow(k as u32)
            .is_some_and(|n| n <= 1u128 << MAX_FIELD_BITS);
    if !in_cap {
        return Err(Error::SizeCapExceeded(p, k));
    }
    {
        let cache = field_cache().lock().unwrap();
        if let Some(f) = cache.get(&(p, k)) {
            return Ok(f.clone());
        }
    }
    let modulus = least_irreducible(p, k);
    let field = Arc::new(FiniteField { p, k, modulus });
    let mut cache = field_cache().lock().unwrap();
    Ok(cache.entry((p, k)).or_insert(field).clone())
}

// ---- dense polynomial arithmetic over the prime field (Vec<u64>) ----

fn pf_trim(a: &mut Vec<u64>) {
    while a.len() > 1 && *a.last().unwrap() == 0 {
        a.pop();
    }
}

fn pf_mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] = ((out[i + j] as u128 + ai as u128 * bj as u128) % p as u128) as u64;
        }
    }
    pf_trim(&mut out);
    out
}

/// Reduce `a` modulo monic `m`.
fn pf_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    let dm = m.len() - 1;
    while r.len() > dm {
        let c = *r.last().unwrap();
        let shift = r.len() - 1 - dm;
        if c != 0 {
            for j in 0..=dm {
                let sub = (c as u128 * m[j] as u128) % p as u128;
                r[shift + j] = ((r[shift + j] as u128 + p as u128 - sub) % p as u128) as u64;
            }
        }
        r.pop();
    }
    while r.len() < dm {
        r.push(0);
    }
    r
}

fn pf_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    pf_trim(&mut a);
    pf_trim(&mut b);
    while !(b.len() == 1 && b[0] == 0) {
        // make b monic for pf_rem
        let lead = *b.last().unwrap();
        let inv = mod_inv(lead, p);
        let mb: Vec<u64> = b
            .iter()
            .map(|&c| ((c as u128 * inv as u128) % p as u128) as u64)
            .collect();
        let mut r = if a.len() > mb.len() - 1 {
            pf_rem(&a, &mb, p)
        } else {
            a.clone()
        };
        if mb.len() == 1 {
            r = vec![0];
        }
        pf_trim(&mut r);
        a = b;
        b = r;
    }
    a
}

fn mod_inv(a: u64, p: u64) -> u64 {
    // Fermat
    mod_pow(a % p, p - 2, p)
}

fn mod_pow(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = ((acc as u128 * b as u128) % p as u128) as u64;
        }
        b = ((b as u128 * b as u128) % p as u128) as u64;
        e >>= 1;
    }
    acc
}

/// `x^(p^e) mod m` over the prime field.
fn pf_frob_pow(e: usize, m: &[u64], p: u64) -> Vec<u64> {
    let mut x = vec![0u64, 1];
    if m.len() == 2 {
        // degree-1 modulus: x reduces to a constant
        x = pf_rem(&x, m, p);
    }
    for _ in 0..e {
        // raise to p-th power by square-and-multiply
        let mut acc = vec![1u64];
        let mut base = x.clone();
        let mut exp = p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = pf_rem(&pf_mul(&acc, &base, p), m, p);
            }
            base = pf_rem(&pf_mul(&base, &base, p), m, p);
            exp >>= 1;
        }
        x = acc;
    }
    x
}

fn is_irreducible_pf(m: &[u64], p: u64) -> bool {
    let k = m.len() - 1;
    if k == 1 {
        return true;
    }
    // x^(p^k) == x mod m
    let xpk = pf_frob_pow(k, m, p);
    let mut x = pf_rem(&[0, 1], m, p);
    pf_trim(&mut x);
    let mut xpk_t = xpk.clone();
    pf_trim(&mut xpk_t);
    if xpk_t != x {
        return false;
    }
    // gcd(x^(p^(k/r)) - x, m) == 1 for each prime r | k
    let mut kk = k;
    let mut primes = vec![];
    let mut d = 2;
    while d * d <= kk {
        if kk % d == 0 {
            primes.push(d);
            while kk % d == 0 {
                kk /= d;
            }
        }
        d += 1;
    }
    if kk > 1 {
        primes.push(kk);
    }
    for r in primes {
        let mut diff = pf_frob_pow(k / r, m, p);
        // subtract x
        if diff.len() < 2 {
            diff.resize(2, 0);
        }
        diff[1] = (diff[1] + p - 1) % p;
        pf_trim(&mut diff);
        let g = pf_gcd(m, &diff, p);
        if g.len() > 1 {
            return false;
        }
    }
    true
}

/// Lexicographically least monic irreducible of degree `k` over `F_p`,
/// comparing coefficient tuples most-significant first.
fn least_irreducible(p: u64, k: usize) -> Vec<u64> {
    if k == 1 {
        return vec![0, 1]; // x, by convention
    }
    let total = (p as u128).pow(k as u32);
    let mut idx: u128 = 0;
    while idx < total {
        // digits: idx = sum c_i p^i, with c_{k-1} most significant
        let mut m = vec![0u64; k + 1];
        m[k] = 1;
        let mut v = idx;
        for i in 0..k {
            m[i] = (v % p as u128) as u64;
            v /= p as u128;
        }
        if is_irreducible_pf(&m, p) {
            return m;
        }
        idx += 1;
    }
    unreachable!("an irreducible polynomial of every degree exists")
}

impl FiniteField {
    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn degree(&self) -> usize {
        self.k
    }
    pub fn order(&self) -> u128 {
        (self.p as u128).pow(self.k as u32)
    }
    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }
}

/// An element of a finite field, in the polynomial basis of its field.
#[derive(Clone)]
pub struct FFElement {
    field: Arc<FiniteField>,
    /// Length `k`, entries reduced modulo `p`.
    coeffs: Vec<u64>,
}

impl PartialEq for FFElement {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.coeffs == other.coeffs
    }
}
impl Eq for FFElement {}

impl Hash for FFElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.field.p.hash(state);
        self.field.k.hash(state);
        self.coeffs.hash(state);
    }
}

impl fmt::Debug for FFElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for FFElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.k == 1 || self.coeffs[1..].iter().all(|&c| c == 0) {
            return write!(f, "{}", self.coeffs[0]);
        }
        // polynomial-basis rendering with generator letter g
        let mut parts = vec![];
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let part = match (i, c) {
                (0, c) => format!("{c}"),
                (1, 1) => "g".to_string(),
                (1, c) => format!("{c}g"),
                (i, 1) => format!("g^{i}"),
                (i, c) => format!("{c}g^{i}"),
            };
            parts.push(part);
        }
        if parts.is_empty() {
            return write!(f, "0");
        }
        write!(f, "({})", parts.join("+"))
    }
}

impl PartialOrd for FFElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FFElement {
    /// Coefficient tuples compared most-significant first. Both elements
    /// must belong to the same field.
    fn cmp(&self, other: &Self) -> Ordering {
        assert!(self.field == other.field, "cannot order across fields");
        for i in (0..self.coeffs.len()).rev() {
            match self.coeffs[i].cmp(&other.coeffs[i]) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

impl FFElement {
    pub fn field(&self) -> &Arc<FiniteField> {
        &self.field
    }
    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
    pub fn is_one(&self) -> bool {
        self.coeffs[0] == 1 && self.coeffs[1..].iter().all(|&c| c == 0)
    }

    pub fn add(&self, other: &FFElement) -> FFElement {
        assert!(self.field == other.field, "field mismatch");
        let p = self.field.p;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| (a + b) % p)
            .collect();
        FFElement {
            field: self.field.clone(),
            coeffs,
        }
    }

    pub fn sub(&self, other: &FFElement) -> FFElement {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> FFElement {
        let p = self.field.p;
        let coeffs = self.coeffs.iter().map(|&a| (p - a) % p).collect();
        FFElement {
            field: self.field.clone(),
            coeffs,
        }
    }

    pub fn mul(&self, other: &FFElement) -> FFElement {
        assert!(self.field == other.field, "field mismatch");
        let p = self.field.p;
        let prod = pf_mul(&self.coeffs, &other.coeffs, p);
        let red = pf_rem(&prod, &self.field.modulus, p);
        let mut coeffs = red;
        coeffs.resize(self.field.k, 0);
        FFElement {
            field: self.field.clone(),
            coeffs,
        }
    }

    pub fn inv(&self) -> Result<FFElement> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        // extended Euclid in F_p[x] against the modulus
        let p = self.field.p;
        let mut r0 = self.field.modulus.clone();
        let mut r1 = self.coeffs.clone();
        pf_trim(&mut r1);
        let mut s0 = vec![0u64];
        let mut s1 = vec![1u64];
        while !(r1.len() == 1 && r1[0] == 0) {
            // divide r0 by r1
            let (q, r) = pf_divrem(&r0, &r1, p);
            let qs1 = pf_mul(&q, &s1, p);
            let mut s2 = pf_sub(&s0, &qs1, p);
            pf_trim(&mut s2);
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s2;
        }
        // r0 = gcd (a nonzero constant since modulus is irreducible)
        debug_assert!(r0.len() == 1 && r0[0] != 0);
        let c_inv = mod_inv(r0[0], p);
        let mut coeffs: Vec<u64> = s0
            .iter()
            .map(|&c| ((c as u128 * c_inv as u128) % p as u128) as u64)
            .collect();
        coeffs.resize(self.field.k, 0);
        let coeffs = pf_rem(&coeffs, &self.field.modulus, p);
        let mut coeffs = coeffs;
        coeffs.resize(self.field.k, 0);
        Ok(FFElement {
            field: self.field.clone(),
            coeffs,
        })
    }

    pub fn pow(&self, mut e: u128) -> FFElement {
        let mut acc = self.field.one();
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

    /// Multiplicative order. Requires a nonzero element.
    pub fn mult_order(&self) -> Result<u128> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = self.field.order() - 1;
        let mut ord = n;
        for (r, _) in factorize_u128(n) {
            while ord % r == 0 && self.pow(ord / r).is_one() {
                ord /= r;
            }
        }
        Ok(ord)
    }
}

fn pf_sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let n = a.len().max(b.len());
    let mut out = vec![0u64; n];
    for i in 0..n {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        out[i] = (x + p - y) % p;
    }
    out
}

fn pf_divrem(a: &[u64], b: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
    let mut r = a.to_vec();
    pf_trim(&mut r);
    let mut b = b.to_vec();
    pf_trim(&mut b);
    let db = b.len() - 1;
    assert!(!(db == 0 && b[0] == 0), "division by zero polynomial");
    let lead_inv = mod_inv(*b.last().unwrap(), p);
    if r.len() - 1 < db {
        return (vec![0], r);
    }
    let mut q = vec![0u64; r.len() - db];
    for shift in (0..=r.len() - 1 - db).rev() {
        let c = ((r[shift + db] as u128 * lead_inv as u128) % p as u128) as u64;
        q[shift] = c;
        if c != 0 {
            for j in 0..=db {
                let sub = (c as u128 * b[j] as u128) % p as u128;
                r[shift + j] = ((r[shift + j] as u128 + p as u128 - sub) % p as u128) as u64;
            }
        }
    }
    r.truncate(db.max(1));
    pf_trim(&mut q);
    pf_trim(&mut r);
    (q, r)
}

pub fn factorize_u128(mut n: u128) -> Vec<(u128, u32)> {
    let mut out = vec![];
    let mut d: u128 = 2;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

impl FiniteField {
    pub fn zero(self: &Arc<Self>) -> FFElement {
        FFElement {
            field: self.clone(),
            coeffs: vec![0; self.k],
        }
    }
    pub fn one(self: &Arc<Self>) -> FFElement {
        self.from_int(1)
    }
    pub fn from_int(self: &Arc<Self>, n: u64) -> FFElement {
        let mut coeffs = vec![0; self.k];
        coeffs[0] = n % self.p;
        FFElement {
            field: self.clone(),
            coeffs,
        }
    }
    pub fn from_int_signed(self: &Arc<Self>, n: i64) -> FFElement {
        let p = self.p as i64;
        self.from_int(n.rem_euclid(p) as u64)
    }
    /// The class of `x` (the polynomial-basis generator).
    pub fn generator(self: &Arc<Self>) -> FFElement {
        let mut coeffs = vec![0; self.k];
        if self.k == 1 {
            // x reduces to 0 modulo the degree-1 convention modulus x
            coeffs[0] = 0;
        } else {
            coeffs[1] = 1;
        }
        FFElement {
            field: self.clone(),
            coeffs,
        }
    }
    pub fn element(self: &Arc<Self>, coeffs: Vec<u64>) -> FFElement {
        assert_eq!(coeffs.len(), self.k);
        let coeffs = coeffs.into_iter().map(|c| c % self.p).collect();
        FFElement {
            field: self.clone(),
            coeffs,
        }
    }
    /// The element whose coefficient tuple is the base-p digits of `idx`
    /// (least significant digit = constant coefficient).
    pub fn element_at(self: &Arc<Self>, mut idx: u128) -> FFElement {
        let mut coeffs = vec![0u64; self.k];
        for c in coeffs.iter_mut() {
            *c = (idx % self.p as u128) as u64;
            idx /= self.p as u128;
        }
        FFElement {
            field: self.clone(),
            coeffs,
        }
    }
    /// All elements, in index order.
    pub fn elements(self: &Arc<Self>) -> Result<Vec<FFElement>> {
        let n = self.order();
        if n > ENUM_CAP {
            return Err(Error::CapExceeded(n.min(u64::MAX as u128) as u64));
        }
        Ok((0..n).map(|i| self.element_at(i)).collect())
    }

    /// Exactly the roots of `f` in this field, each with multiplicity.
    /// Exhaustive evaluation; refuses above the enumeration cap.
    pub fn find_roots(self: &Arc<Self>, f: &[FFElement]) -> Result<Vec<(FFElement, usize)>> {
        let mut fv = f.to_vec();
        while fv.len() > 1 && fv.last().unwrap().is_zero() {
            fv.pop();
        }
        assert!(
            !fv.is_empty() && !(fv.len() == 1 && fv[0].is_zero()),
            "find_roots requires a nonzero polynomial"
        );
        let mut out = vec![];
        for x in self.elements()? {
            if crate::ffpoly::eval(&fv, &x).is_zero() {
                let mut mult = 0;
                let mut g = fv.clone();
                loop {
                    let (q, rem) = crate::ffpoly::deflate(&g, &x);
                    if !rem.is_zero() {
                        break;
                    }
                    mult += 1;
                    g = q;
                    if g.len() <= 1 {
                        break;
                    }
                }
                out.push((x, mult));
            }
        }
        Ok(out)
    }
}

// ------------------------- ambient field & embeddings -------------------------

/// A fixed ambient field `F_{p^K}` inside which all residue fields of one
/// experiment are realized. Embeddings between subfields are composites of
/// the distinguished least-root embeddings into the ambient, which makes
/// them compatible along divisibility chains.
pub struct Ambient {
    field: Arc<FiniteField>,
    embeddings: Mutex<HashMap<usize, Arc<Embedding>>>,
}

pub struct Embedding {
    pub source: Arc<FiniteField>,
    /// Image of the polynomial-basis generator of the source field.
    pub gen_image: FFElement,
    /// `gen_image^0 .. gen_image^(a-1)`.
    powers: Vec<FFElement>,
}

impl Ambient {
    pub fn new(p: u64, big_degree: usize) -> Result<Ambient> {
        let field = make_field(p, big_degree)?;
        Ok(Ambient {
            field,
            embeddings: Mutex::new(HashMap::new()),
        })
    }

    pub fn field(&self) -> &Arc<FiniteField> {
        &self.field
    }
    pub fn p(&self) -> u64 {
        self.field.p
    }
    pub fn degree(&self) -> usize {
        self.field.k
    }

    fn embedding(&self, a: usize) -> Result<Arc<Embedding>> {
        if self.field.k % a != 0 {
            return Err(Error::AmbientTooSmall {
                have: self.field.k,
                need: a,
            });
        }
        {
            let cache = self.embeddings.lock().unwrap();
            if let Some(e) = cache.get(&a) {
                return Ok(e.clone());
            }
        }
        let source = make_field(self.field.p, a)?;
        let gen_image = if a == self.field.k {
            // the ambient embeds into itself identically
            self.field.generator()
        } else {
            // least root (by coefficient-tuple order) of the source modulus
            let f: Vec<FFElement> = source
                .modulus()
                .iter()
                .map(|&c| self.field.from_int(c))
                .collect();
            let mut roots = roots_in_splitting_field(&f, &self.field)?;
            roots.sort();
            roots.into_iter().next().ok_or_else(|| {
                Error::PrecisionExhausted("defining polynomial has no root in ambient".into())
            })?
        };
        let mut powers = Vec::with_capacity(a);
        let mut acc = self.field.one();
        for _ in 0..a {
            powers.push(acc.clone());
            acc = acc.mul(&gen_image);
        }
        let emb = Arc::new(Embedding {
            source,
            gen_image,
            powers,
        });
        let mut cache = self.embeddings.lock().unwrap();
        Ok(cache.entry(a).or_insert(emb).clone())
    }

    /// Distinguished embedding of `x`'s field into the ambient.
    pub fn to_ambient(&self, x: &FFElement) -> Result<FFElement> {
        if **x.field() == *self.field {
            return Ok(x.clone());
        }
        let emb = self.embedding(x.field().k)?;
        let mut acc = self.field.zero();
        for (i, &c) in x.coeffs.iter().enumerate() {
            if c != 0 {
                acc = acc.add(&emb.powers[i].mul(&self.field.from_int(c)));
            }
        }
        Ok(acc)
    }

    /// Inverse of [`Ambient::to_ambient`] for elements known to lie in the
    /// image of `F_{p^b}`.
    pub fn from_ambient(&self, y: &FFElement, target: &Arc<FiniteField>) -> Result<FFElement> {
        assert!(**y.field() == *self.field, "element not in the ambient field");
        if **target == *self.field {
            return Ok(y.clone());
        }
        let emb = self.embedding(target.k)?;
        // solve sum_i v_i * powers[i] = y over F_p
        let p = self.field.p;
        let kk = self.field.k;
        let a = target.k;
        let mut mat: Vec<Vec<u64>> = vec![vec![0; a + 1]; kk];
        for (col, pw) in emb.powers.iter().enumerate() {
            for row in 0..kk {
                mat[row][col] = pw.coeffs[row];
            }
        }
        for row in 0..kk {
            mat[row][a] = y.coeffs[row];
        }
        let sol = solve_fp(&mut mat, a, p).ok_or(Error::NotARoot)?;
        Ok(target.element(sol))
    }

    /// The compatible embedding `F_{p^a} -> F_{p^b}` (requires `a | b` and
    /// both degrees dividing the ambient degree).
    pub fn embed(&self, x: &FFElement, target: &Arc<FiniteField>) -> Result<FFElement> {
        let a = x.field().k;
        let b = target.k;
        if **x.field() == **target {
            return Ok(x.clone());
        }
        if b % a != 0 {
            return Err(Error::IncompatibleDegrees(a, b));
        }
        let up = self.to_ambient(x)?;
        self.from_ambient(&up, target)
    }

    /// Least degree `d | K` with `x^(p^d) = x`.
    pub fn min_subfield_degree(&self, x: &FFElement) -> usize {
        let p = self.field.p;
        for d in 1..=self.field.k {
            if self.field.k % d != 0 {
                continue;
            }
            if x.pow((p as u128).pow(d as u32)) == *x {
                return d;
            }
        }
        self.field.k
    }

    /// All ambient elements lying in the subfield of degree `d | K`,
    /// in deterministic index order.
    pub fn subfield_elements(&self, d: usize) -> Result<Vec<FFElement>> {
        let emb = self.embedding(d)?;
        let p = self.field.p;
        let n = (p as u128).pow(d as u32);
        if n > ENUM_CAP {
            return Err(Error::CapExceeded(n.min(u64::MAX as u128) as u64));
        }
        let mut out = Vec::with_capacity(n as usize);
        for idx in 0..n {
            let x = emb.source.element_at(idx);
            out.push(self.to_ambient(&x)?);
        }
        Ok(out)
    }

    /// Least element (coefficient-tuple order) of exact multiplicative
    /// order `e` in the subfield of degree `d`.
    pub fn primitive_root_of_unity(&self, e: u64, d: usize) -> Result<FFElement> {
        let sub_order = (self.field.p as u128).pow(d as u32) - 1;
        if sub_order % e as u128 != 0 {
            return Err(Error::Unresolved(format!(
                "no primitive {e}-th root of unity in residue field of degree {d}"
            )));
        }
        let mut elems = self.subfield_elements(d)?;
        elems.sort();
        for x in elems {
            if !x.is_zero() && x.mult_order()? == e as u128 {
                return Ok(x);
            }
        }
        Err(Error::Unresolved(format!(
            "no element of order {e} found in residue field of degree {d}"
        )))
    }
}

/// Solve the F_p linear system encoded as rows of length `ncols + 1`
/// (augmented column last). Returns `None` when inconsistent.
fn solve_fp(mat: &mut [Vec<u64>], ncols: usize, p: u64) -> Option<Vec<u64>> {
    let nrows = mat.len();
    let mut pivot_row = 0usize;
    let mut pivots: Vec<Option<usize>> = vec![None; ncols];
    for col in 0..ncols {
        let mut sel = None;
        for r in pivot_row..nrows {
            if mat[r][col] != 0 {
                sel = Some(r);
                break;
            }
        }
        let Some(sel) = sel else { continue };
        mat.swap(pivot_row, sel);
        let inv = mod_inv(mat[pivot_row][col], p);
        for c in col..=ncols {
            mat[pivot_row][c] = ((mat[pivot_row][c] as u128 * inv as u128) % p as u128) as u64;
        }
        for r in 0..nrows {
            if r != pivot_row && mat[r][col] != 0 {
                let factor = mat[r][col];
                for c in col..=ncols {
                    let sub = (factor as u128 * mat[pivot_row][c] as u128) % p as u128;
                    mat[r][c] = ((mat[r][c] as u128 + p as u128 - sub) % p as u128) as u64;
                }
            }
        }
        pivots[col] = Some(pivot_row);
        pivot_row += 1;
        if pivot_row == nrows {
            break;
        }
    }
    // consistency: no row of the form [0 .. 0 | nonzero]
    for r in 0..nrows {
        if mat[r][..ncols].iter().all(|&c| c == 0) && mat[r][ncols] != 0 {
            return None;
        }
    }
    let mut sol = vec![0u64; ncols];
    for col in 0..ncols {
        if let Some(r) = pivots[col] {
            sol[col] = mat[r][ncols];
        }
    }
    Some(sol)
}

/// All roots of `f` (with multiplicity) that lie in `field`, found by
/// deterministic Cantor–Zassenhaus splitting. Unlike
/// [`FiniteField::find_roots`] this never enumerates the field.
pub fn roots_in_splitting_field(
    f: &[FFElement],
    field: &Arc<FiniteField>,
) -> Result<Vec<FFElement>> {
    use crate::ffpoly as fp;
    let fm = fp::monic(f)?;
    if fp::deg(&fm) == 0 {
        return Ok(vec![]);
    }
    // product of linear factors over this field: gcd(f, x^Q - x)
    let q_order = field.order();
    let x = vec![field.zero(), field.one()];
    let xq = fp::powmod(&x, q_order, &fm);
    let diff = fp::sub(&xq, &x);
    let lin = fp::gcd(&fm, &diff)?;
    let lin = fp::monic(&lin)?;
    if fp::deg(&lin) == 0 {
        return Ok(vec![]);
    }
    let mut out = vec![];
    split_all(&lin, field, &mut out)?;
    out.sort();
    Ok(out)
}

fn split_all(g: &[FFElement], field: &Arc<FiniteField>, out: &mut Vec<FFElement>) -> Result<()> {
    use crate::ffpoly as fp;
    let d = fp::deg(g);
    if d == 0 {
        return Ok(());
    }
    if d == 1 {
        // root of x + c
        let c = g[0].clone();
        out.push(c.neg());
        return Ok(());
    }
    let p = field.p();
    let q_order = field.order();
    // deterministic sequence of splitting candidates
    for attempt in 1..10_000u128 {
        let delta = field.element_at(attempt % field.order());
        let h = if p == 2 {
            // trace map candidate: sum_{j<K*?} (delta x)^(2^j) mod g
            let mut acc = fp::scalar_mul(&[field.zero(), field.one()], &delta);
            let mut term = acc.clone();
            for _ in 1..field.degree() {
                term = fp::rem(&fp::mul(&term, &term), g)?;
                acc = fp::add(&acc, &term);
            }
            acc
        } else {
            // (x + delta)^((Q-1)/2) - 1 mod g
            let base = vec![delta.clone(), field.one()];
            let e = (q_order - 1) / 2;
            let pw = fp::powmod(&base, e, g);
            let mut pw = pw;
            if pw.is_empty() {
                pw.push(field.zero());
            }
            pw[0] = pw[0].sub(&field.one());
            pw
        };
        let cand = fp::gcd(g, &h)?;
        let cand = fp::monic(&cand)?;
        let dc = fp::deg(&cand);
        if dc > 0 && dc < d {
            let (quot, _r) = fp::divrem(g, &cand)?;
            split_all(&cand, field, out)?;
            split_all(&fp::monic(&quot)?, field, out)?;
            return Ok(());
        }
    }
    Err(Error::Unresolved(
        "Cantor–Zassenhaus splitting did not converge".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_defining_polynomials() {
        // unique monic irreducible quadratic over F_2
        let f22 = make_field(2, 2).unwrap();
        assert_eq!(f22.modulus(), &[1, 1, 1]);
        // degree-1 convention
        let f31 = make_field(3, 1).unwrap();
        assert_eq!(f31.modulus(), &[0, 1]);
        // least monic irreducible quartic over F_2 (oracle below)
        let f24 = make_field(2, 4).unwrap();
        assert_eq!(f24.modulus(), least_irreducible_oracle(2, 4));
        assert_eq!(f24.modulus(), &[1, 1, 0, 0, 1]); // x^4 + x + 1
    }

    /// Independent oracle: exhaustive search with trial division by all
    /// lower-degree monic polynomials.
    fn least_irreducible_oracle(p: u64, k: usize) -> Vec<u64> {
        let total = (p as u128).pow(k as u32);
        'cand: for idx in 0..total {
            let mut m = vec![0u64; k + 1];
            m[k] = 1;
            let mut v = idx;
            for i in 0..k {
                m[i] = (v % p as u128) as u64;
                v /= p as u128;
            }
            for d in 1..=(k / 2) {
                let dtotal = (p as u128).pow(d as u32);
                for j in 0..dtotal {
                    let mut divisor = vec![0u64; d + 1];
                    divisor[d] = 1;
                    let mut w = j;
                    for i in 0..d {
                        divisor[i] = (w % p as u128) as u64;
                        w /= p as u128;
                    }
                    let r = pf_rem(&m, &divisor, p);
                    if r.iter().all(|&c| c == 0) {
                        continue 'cand;
                    }
                }
            }
            return m;
        }
        unreachable!()
    }

    #[test]
    fn make_field_rejects_bad_input() {
        assert!(matches!(
            make_field(4, 2),
            Err(Error::NonPrimeCharacteristic(4))
        ));
        assert!(matches!(make_field(2, 0), Err(Error::SizeCapExceeded(..))));
        assert!(matches!(
            make_field(2, 100),
            Err(Error::SizeCapExceeded(..))
        ));
    }

    #[test]
    fn element_count_and_cyclic_group() {
        for (p, k) in [(2u64, 4usize), (3, 2), (5, 2)] {
            let f = make_field(p, k).unwrap();
            let elems = f.elements().unwrap();
            assert_eq!(elems.len() as u128, f.order());
            // distinctness
            let set: std::collections::HashSet<_> = elems.iter().cloned().collect();
            assert_eq!(set.len(), elems.len());
            // nonzero elements form a cyclic group: find a generator
            let n = f.order() - 1;
            let gen = elems
                .iter()
                .find(|x| !x.is_zero() && x.mult_order().unwrap() == n)
                .expect("multiplicative generator exists");
            assert_eq!(gen.mult_order().unwrap(), n);
        }
    }

    #[test]
    fn arithmetic_basics() {
        let f = make_field(2, 4).unwrap();
        let elems = f.elements().unwrap();
        for x in &elems {
            if x.is_zero() {
                assert!(x.inv().is_err());
                continue;
            }
            let xi = x.inv().unwrap();
            assert!(x.mul(&xi).is_one());
            assert_eq!(x.pow(f.order() - 1), f.one());
        }
    }

    #[test]
    fn find_roots_examples() {
        // x^2 + x over F_2 -> {0, 1}
        let f2 = make_field(2, 1).unwrap();
        let poly = vec![f2.zero(), f2.one(), f2.one()];
        let roots = f2.find_roots(&poly).unwrap();
        assert_eq!(roots.len(), 2);
        assert!(roots.iter().all(|(_, m)| *m == 1));

        // x^3 + 1 over F_4 -> {1, w, w^2}
        let f4 = make_field(2, 2).unwrap();
        let poly = vec![f4.one(), f4.zero(), f4.zero(), f4.one()];
        let roots = f4.find_roots(&poly).unwrap();
        assert_eq!(roots.len(), 3);
        let w = f4.generator();
        let vals: Vec<_> = roots.iter().map(|(r, _)| r.clone()).collect();
        assert!(vals.contains(&f4.one()));
        assert!(vals.contains(&w));
        assert!(vals.contains(&w.mul(&w)));

        // x^2 + x + 1 over F_2 -> {}
        let poly = vec![f2.one(), f2.one(), f2.one()];
        assert!(f2.find_roots(&poly).unwrap().is_empty());
    }

    #[test]
    fn frobenius_permutes_roots_of_prime_field_polys() {
        let f4 = make_field(2, 2).unwrap();
        let poly = vec![f4.one(), f4.zero(), f4.zero(), f4.one()]; // x^3 + 1
        let roots: Vec<_> = f4
            .find_roots(&poly)
            .unwrap()
            .into_iter()
            .map(|(r, _)| r)
            .collect();
        for r in &roots {
            let fr = r.pow(2);
            assert!(roots.contains(&fr));
        }
    }

    #[test]
    fn embedding_into_f16() {
        // generator w of F_4 into F_16 must be the least root of x^2+x+1
        let amb = Ambient::new(2, 4).unwrap();
        let f4 = make_field(2, 2).unwrap();
        let f16 = amb.field().clone();
        let w = f4.generator();
        let img = amb.embed(&w, &f16).unwrap();
        // oracle: enumerate both roots of x^2+x+1 in F_16, pick least
        let poly = vec![f16.one(), f16.one(), f16.one()];
        let mut roots: Vec<_> = f16
            .find_roots(&poly)
            .unwrap()
            .into_iter()
            .map(|(r, _)| r)
            .collect();
        roots.sort();
        assert_eq!(roots.len(), 2);
        assert_eq!(img, roots[0]);
        // identity embedding
        let y = f16.element_at(11);
        assert_eq!(amb.embed(&y, &f16).unwrap(), y);
        // unital
        assert_eq!(amb.embed(&f4.one(), &f16).unwrap(), f16.one());
        // degree obstruction
        let f8 = make_field(2, 3).unwrap();
        let amb24 = Ambient::new(2, 12).unwrap();
        let x = make_field(2, 2).unwrap().generator();
        assert!(matches!(
            amb24.embed(&x, &f8),
            Err(Error::IncompatibleDegrees(2, 3))
        ));
    }

    #[test]
    fn embedding_is_homomorphism_and_compatible() {
        let amb = Ambient::new(2, 12).unwrap();
        let f4 = make_field(2, 2).unwrap();
        let f_4096 = amb.field().clone();
        let f64 = make_field(2, 6).unwrap();
        let elems = f4.elements().unwrap();
        for x in &elems {
            for y in &elems {
                let ex = amb.embed(x, &f_4096).unwrap();
                let ey = amb.embed(y, &f_4096).unwrap();
                assert_eq!(amb.embed(&x.add(y), &f_4096).unwrap(), ex.add(&ey));
                assert_eq!(amb.embed(&x.mul(y), &f_4096).unwrap(), ex.mul(&ey));
            }
            // composite through F_64 equals direct embedding
            let via = amb
                .embed(&amb.embed(x, &f64).unwrap(), &f_4096)
                .unwrap();
            assert_eq!(via, amb.embed(x, &f_4096).unwrap());
        }
    }

    #[test]
    fn cz_roots_agree_with_exhaustive_search() {
        let f = make_field(3, 4).unwrap();
        // polynomial with several roots in F_81: x^8 - 1 has the 8th roots of unity
        let mut poly = vec![f.zero(); 9];
        poly[0] = f.one().neg();
        poly[8] = f.one();
        let cz = roots_in_splitting_field(&poly, &f).unwrap();
        let mut ex: Vec<_> = f
            .find_roots(&poly)
            .unwrap()
            .into_iter()
            .map(|(r, _)| r)
            .collect();
        ex.sort();
        assert_eq!(cz, ex);
        assert_eq!(cz.len(), 8);
    }

    #[test]
    fn primitive_roots_of_unity() {
        let amb = Ambient::new(2, 2).unwrap();
        let z3 = amb.primitive_root_of_unity(3, 2).unwrap();
        assert_eq!(z3.mult_order().unwrap(), 3);
        let amb3 = Ambient::new(3, 1).unwrap();
        let z2 = amb3.primitive_root_of_unity(2, 1).unwrap();
        assert_eq!(z2, amb3.field().from_int(2));
    }
}
