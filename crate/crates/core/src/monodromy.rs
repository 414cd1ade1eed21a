//! Surjectivity certificates for the Galois action on torsion modules:
//! group orders over o/(w^m), breadth-first matrix closures, explicit tame
//! monodromy matrices, and the degree-lcm certification logic.

use std::collections::HashSet;
use std::sync::Arc;

use num_integer::Integer;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite_field::{FFElement, FiniteField};
use crate::formal_module::{build_model, OElement};
use crate::laurent::{LaurentSeries, MAX_PRECISION};
use crate::local_tower::{splitting_tower, SegmentRecord, SplittingData, StepKind};
use crate::torsion::TorsionModule;

/// Square matrix over o/(w^m), entries row-major. Invertible iff the
/// residue matrix modulo w is invertible over F_q.
#[derive(Clone, Debug)]
pub struct MatrixModM {
    pub k: usize,
    pub m: usize,
    field: Arc<FiniteField>,
    entries: Vec<OElement>,
}

impl PartialEq for MatrixModM {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.m == other.m && self.entries == other.entries
    }
}
impl Eq for MatrixModM {}
impl std::hash::Hash for MatrixModM {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.k.hash(state);
        self.entries.hash(state);
    }
}

impl MatrixModM {
    pub fn new(field: &Arc<FiniteField>, k: usize, m: usize, entries: Vec<OElement>) -> MatrixModM {
        assert_eq!(entries.len(), k * k);
        MatrixModM {
            k,
            m,
            field: field.clone(),
            entries,
        }
    }

    pub fn identity(field: &Arc<FiniteField>, k: usize, m: usize) -> MatrixModM {
        let mut entries = vec![OElement::zero(field, m); k * k];
        for i in 0..k {
            entries[i * k + i] = OElement::one(field, m);
        }
        MatrixModM::new(field, k, m, entries)
    }

    /// Build from residue entries given as small integers.
    pub fn from_ints(field: &Arc<FiniteField>, k: usize, m: usize, vals: &[i64]) -> MatrixModM {
        assert_eq!(vals.len(), k * k);
        let entries = vals
            .iter()
            .map(|&v| {
                let mut c = vec![field.zero(); m];
                c[0] = field.from_int_signed(v);
                OElement::new(field, c)
            })
            .collect();
        MatrixModM::new(field, k, m, entries)
    }

    pub fn entry(&self, i: usize, j: usize) -> &OElement {
        &self.entries[i * self.k + j]
    }

    pub fn mul(&self, other: &MatrixModM) -> MatrixModM {
        assert_eq!(self.k, other.k);
        assert_eq!(self.m, other.m);
        let mut entries = Vec::with_capacity(self.k * self.k);
        for i in 0..self.k {
            for j in 0..self.k {
                let mut acc = OElement::zero(&self.field, self.m);
                for l in 0..self.k {
                    acc = acc.add(&self.entry(i, l).mul(other.entry(l, j)));
                }
                entries.push(acc);
            }
        }
        MatrixModM::new(&self.field, self.k, self.m, entries)
    }

    /// Apply to a coordinate vector.
    pub fn apply(&self, v: &[OElement]) -> Vec<OElement> {
        assert_eq!(v.len(), self.k);
        (0..self.k)
            .map(|i| {
                let mut acc = OElement::zero(&self.field, self.m);
                for j in 0..self.k {
                    acc = acc.add(&self.entry(i, j).mul(&v[j]));
                }
                acc
            })
            .collect()
    }

    fn residue_det(&self) -> FFElement {
        let mut a: Vec<Vec<FFElement>> = (0..self.k)
            .map(|i| (0..self.k).map(|j| self.entry(i, j).coeffs()[0].clone()).collect())
            .collect();
        let mut det = self.field.one();
        for col in 0..self.k {
            let Some(piv) = (col..self.k).find(|&r| !a[r][col].is_zero()) else {
                return self.field.zero();
            };
            if piv != col {
                a.swap(piv, col);
                det = det.neg();
            }
            det = det.mul(&a[col][col]);
            let inv = a[col][col].inv().expect("pivot is nonzero");
            for r in col + 1..self.k {
                if a[r][col].is_zero() {
                    continue;
                }
                let factor = a[r][col].mul(&inv);
                for c in col..self.k {
                    let sub = factor.mul(&a[col][c]);
                    a[r][c] = a[r][c].sub(&sub);
                }
            }
        }
        det
    }

    pub fn is_invertible(&self) -> bool {
        !self.residue_det().is_zero()
    }

    /// Multiplicative order by direct iteration.
    pub fn order(&self, cap: usize) -> Result<u64> {
        let id = MatrixModM::identity(&self.field, self.k, self.m);
        let mut x = self.clone();
        for n in 1..=cap {
            if x == id {
                return Ok(n as u64);
            }
            x = x.mul(self);
        }
        Err(Error::ClosureCapExceeded(cap))
    }
}

/// |GL_k(o/(w^m))| = q^{(m-1)k²} · Π_{i=0}^{k-1}(q^k − q^i), guarded at 2^63.
pub fn gl_order(k: usize, m: usize, q: u64) -> Result<u64> {
    const BOUND: u128 = 1 << 63;
    let q = q as u128;
    let mut out: u128 = 1;
    for _ in 0..(m - 1) * k * k {
        out = out.checked_mul(q).ok_or(Error::Overflow)?;
        if out > BOUND {
            return Err(Error::Overflow);
        }
    }
    let qk = q.checked_pow(k as u32).ok_or(Error::Overflow)?;
    let mut qi: u128 = 1;
    for _ in 0..k {
        out = out.checked_mul(qk - qi).ok_or(Error::Overflow)?;
        if out > BOUND {
            return Err(Error::Overflow);
        }
        qi *= q;
    }
    Ok(out as u64)
}

pub const CLOSURE_CAP: usize = 1_000_000;

/// Order of the subgroup generated by the given invertible matrices,
/// by breadth-first closure under multiplication.
pub fn closure_order(generators: &[MatrixModM], cap: usize) -> Result<u64> {
    assert!(!generators.is_empty());
    for g in generators {
        assert!(g.is_invertible(), "generators must be invertible");
    }
    let id = MatrixModM::identity(&generators[0].field, generators[0].k, generators[0].m);
    let mut seen: HashSet<MatrixModM> = HashSet::new();
    seen.insert(id.clone());
    let mut frontier = vec![id];
    while let Some(x) = frontier.pop() {
        for g in generators {
            let y = x.mul(g);
            if seen.insert(y.clone()) {
                if seen.len() > cap {
                    return Err(Error::ClosureCapExceeded(cap));
                }
                frontier.push(y);
            }
        }
    }
    Ok(seen.len() as u64)
}

/// Enumerate all invertible k×k matrices over o/(w^m); capped by the
/// total matrix count q^{mk²}.
pub fn all_invertible(field: &Arc<FiniteField>, k: usize, m: usize, cap: u64) -> Result<Vec<MatrixModM>> {
    let singles = OElement::all(field, m)?;
    let total = (singles.len() as u128).checked_pow((k * k) as u32).ok_or(Error::Overflow)?;
    if total > cap as u128 {
        return Err(Error::CapExceeded(cap));
    }
    let mut out = Vec::new();
    let base = singles.len() as u128;
    for idx in 0..total {
        let mut rem = idx;
        let entries: Vec<OElement> = (0..k * k)
            .map(|_| {
                let d = (rem % base) as usize;
                rem /= base;
                singles[d].clone()
            })
            .collect();
        let mat = MatrixModM::new(field, k, m, entries);
        if mat.is_invertible() {
            out.push(mat);
        }
    }
    Ok(out)
}

/// The matrix of the tame substitution π ↦ ζ_e·π acting on the torsion
/// basis. Requires the splitting tower to consist of exactly one tame
/// radical ramified step.
pub fn tame_monodromy_matrix(tm: &TorsionModule) -> Result<MatrixModM> {
    let ramified: Vec<_> = tm
        .data
        .field
        .steps
        .iter()
        .filter(|s| matches!(s.kind, StepKind::Ramified))
        .collect();
    if ramified.len() != 1 {
        return Err(Error::NotSingleTameStep);
    }
    let e = ramified[0].degree;
    let p = tm.stratum.field.p();
    if e % p == 0 {
        return Err(Error::NotSingleTameStep);
    }
    let ambient = &tm.data.ambient;
    let zeta = ambient.primitive_root_of_unity(e, ambient.degree())?;
    let zpi = LaurentSeries::monomial(zeta, 1);
    let fallback = tm.data.final_precision.max(4) as usize;
    let k = tm.k;
    let m = tm.m;
    let field = tm.stratum.field.clone();
    let mut entries = vec![OElement::zero(&field, m); k * k];
    for j in 0..k {
        let image = tm.basis_root(j).substitute(&zpi, fallback)?;
        let col = tm.express(&image)?;
        for (i, c) in col.into_iter().enumerate() {
            entries[i * k + j] = c;
        }
    }
    let mat = MatrixModM::new(&field, k, m, entries);
    if !mat.is_invertible() {
        return Err(Error::InternalSoundnessError {
            d: e,
            g: gl_order(k, m, field.order() as u64)?,
        });
    }
    Ok(mat)
}

pub const COVER_CAP: u64 = 10_000;

/// True iff some PROPER subgroup of GL_k(o/(w^m)) has order divisible by
/// d, decided by exhaustive closure over generator subsets of size ≤ 3
/// (with a Lagrange shortcut).
pub fn subgroup_cover_check(field: &Arc<FiniteField>, k: usize, m: usize, d: u64, cap: u64) -> Result<bool> {
    let q = field.order() as u64;
    let g = gl_order(k, m, q)?;
    if g > cap {
        return Err(Error::CapExceeded(cap));
    }
    let candidates: Vec<u64> = (1..g).filter(|x| g % x == 0 && x % d == 0).collect();
    if candidates.is_empty() {
        return Ok(false);
    }
    if candidates.contains(&d) && d == 1 {
        return Ok(true);
    }
    let elems = all_invertible(field, k, m, cap * cap)?;
    let n = elems.len();
    let hit = |order: u64| order < g && order % d == 0;
    for i in 0..n {
        if hit(closure_order(&[elems[i].clone()], g as usize)?) {
            return Ok(true);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if hit(closure_order(&[elems[i].clone(), elems[j].clone()], g as usize)?) {
                return Ok(true);
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for l in j + 1..n {
                if hit(closure_order(
                    &[elems[i].clone(), elems[j].clone(), elems[l].clone()],
                    g as usize,
                )?) {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

#[derive(Clone)]
pub struct Specialization {
    /// Assignment text as given (recorded verbatim in the certificate).
    pub label: String,
    /// Series for u_h, …, u_{n−1}.
    pub assignment: Vec<LaurentSeries>,
}

#[derive(Clone, Copy)]
pub struct CertifyOptions {
    pub precision: i64,
    pub cover_cap: u64,
    pub closure_cap: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            precision: 64,
            cover_cap: COVER_CAP,
            closure_cap: CLOSURE_CAP,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertParams {
    pub q: u64,
    pub n: usize,
    pub h: usize,
    pub m: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpecRecord {
    pub assignment: String,
    pub geometric_degree: u64,
    pub tower: Vec<SegmentRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub params: CertParams,
    pub specializations: Vec<SpecRecord>,
    pub group_order: u64,
    pub lcm: u64,
    pub verdict: String,
    pub precision: i64,
    pub assumption: String,
}

impl Certificate {
    pub fn is_surjective(&self) -> bool {
        self.verdict == "surjective"
    }
}

/// Split with automatic precision retry on precision failures.
pub fn split_with_retry(dense: &[LaurentSeries], precision: i64) -> Result<SplittingData> {
    let mut prec = precision;
    loop {
        match splitting_tower(dense, prec) {
            Ok(d) => return Ok(d),
            Err(e) if e.is_precision_failure() && prec * 2 <= MAX_PRECISION => prec *= 2,
            Err(e) => return Err(e),
        }
    }
}

/// Produce a surjectivity certificate for the action on level-m torsion
/// over the height-h stratum, from the given specializations.
pub fn certify(
    q_field: &Arc<FiniteField>,
    n: usize,
    h: usize,
    m: usize,
    specs: &[Specialization],
    opts: &CertifyOptions,
) -> Result<Certificate> {
    assert!(h < n, "stratum height must satisfy 0 <= h <= n-1");
    let q = q_field.order() as u64;
    let k = n - h;
    let group_order = gl_order(k, m, q)?;
    let model = build_model(q_field.p(), q_field, n)?;
    let stratum = model.reduce_to_stratum(h)?;
    let mut records = Vec::new();
    let mut first_err: Option<Error> = None;
    for spec in specs {
        let run = || -> Result<SpecRecord> {
            let special = stratum.specialize(&spec.assignment)?;
            let dense = special.etale_division(m).to_dense(q_field);
            let data = split_with_retry(&dense, opts.precision)?;
            Ok(SpecRecord {
                assignment: spec.label.clone(),
                geometric_degree: data.geometric_degree,
                tower: data.segments.clone(),
            })
        };
        match run() {
            Ok(r) => records.push(r),
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    if records.is_empty() {
        return Err(first_err.unwrap_or(Error::Unresolved("no specializations given".into())));
    }
    let mut lcm: u64 = 1;
    for r in &records {
        if group_order % r.geometric_degree != 0 {
            return Err(Error::InternalSoundnessError {
                d: r.geometric_degree,
                g: group_order,
            });
        }
        lcm = lcm.lcm(&r.geometric_degree);
    }
    let verdict = if lcm == group_order {
        "surjective"
    } else {
        match subgroup_cover_check(q_field, k, m, lcm, opts.cover_cap) {
            Ok(false) => "surjective",
            Ok(true) => "inconclusive",
            Err(Error::CapExceeded(_)) => "inconclusive",
            Err(e) => return Err(e),
        }
    };
    Ok(Certificate {
        params: CertParams { q, n, h, m },
        specializations: records,
        group_order,
        lcm,
        verdict: verdict.to_string(),
        precision: opts.precision,
        assumption: "specialization-divisibility".to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_field::make_field;
    use crate::torsion::torsion_module;

    fn tser(field: &Arc<FiniteField>, e: i64) -> LaurentSeries {
        LaurentSeries::monomial(field.one(), e)
    }

    #[test]
    fn gl_order_examples() {
        assert_eq!(gl_order(2, 1, 2).unwrap(), 6);
        assert_eq!(gl_order(1, 1, 2).unwrap(), 1);
        assert_eq!(gl_order(1, 1, 3).unwrap(), 2);
        assert_eq!(gl_order(1, 1, 5).unwrap(), 4);
        assert_eq!(gl_order(1, 2, 2).unwrap(), 2);
        assert_eq!(gl_order(2, 2, 2).unwrap(), 96);
        assert_eq!(gl_order(2, 1, 3).unwrap(), 48);
        assert!(matches!(gl_order(4, 3, 5), Err(Error::Overflow)));
    }

    #[test]
    fn gl_order_matches_enumeration() {
        // every (k, m, q) at desk scale with group order <= 200
        for (p, deg) in [(2u64, 1usize), (3, 1), (2, 2), (5, 1)] {
            let field = make_field(p, deg).unwrap();
            let q = field.order() as u64;
            for k in 1..=3usize {
                for m in 1..=3usize {
                    let Ok(order) = gl_order(k, m, q) else { continue };
                    if order > 200 {
                        continue;
                    }
                    let count = all_invertible(&field, k, m, 1 << 20).unwrap().len() as u64;
                    assert_eq!(count, order, "mismatch at k={k} m={m} q={q}");
                }
            }
        }
    }

    #[test]
    fn closure_order_examples() {
        let f2 = make_field(2, 1).unwrap();
        let id = MatrixModM::identity(&f2, 2, 1);
        assert_eq!(closure_order(&[id], 100).unwrap(), 1);
        let a = MatrixModM::from_ints(&f2, 2, 1, &[0, 1, 1, 1]);
        assert_eq!(closure_order(&[a.clone()], 100).unwrap(), 3);
        let b = MatrixModM::from_ints(&f2, 2, 1, &[1, 1, 0, 1]);
        assert_eq!(closure_order(&[a, b], 100).unwrap(), 6);
    }

    #[test]
    fn closure_reaches_full_groups() {
        // GL2(F2) = 6 via elementary matrices
        let f2 = make_field(2, 1).unwrap();
        let gens2 = vec![
            MatrixModM::from_ints(&f2, 2, 1, &[1, 1, 0, 1]),
            MatrixModM::from_ints(&f2, 2, 1, &[1, 0, 1, 1]),
        ];
        assert_eq!(closure_order(&gens2, 100).unwrap(), 6);
        // GL2(F3) = 48 via elementary, diagonal, permutation
        let f3 = make_field(3, 1).unwrap();
        let gens3 = vec![
            MatrixModM::from_ints(&f3, 2, 1, &[1, 1, 0, 1]),
            MatrixModM::from_ints(&f3, 2, 1, &[2, 0, 0, 1]),
            MatrixModM::from_ints(&f3, 2, 1, &[0, 1, 1, 0]),
        ];
        assert_eq!(closure_order(&gens3, 100).unwrap(), 48);
        // GL2 over F2[w]/(w^2) = 96
        let one = OElement::one(&f2, 2);
        let zero = OElement::zero(&f2, 2);
        let w = OElement::new(&f2, vec![f2.zero(), f2.one()]);
        let unit = one.add(&w);
        let e12 = |x: &OElement| {
            MatrixModM::new(&f2, 2, 2, vec![one.clone(), x.clone(), zero.clone(), one.clone()])
        };
        let e21 = |x: &OElement| {
            MatrixModM::new(&f2, 2, 2, vec![one.clone(), zero.clone(), x.clone(), one.clone()])
        };
        let diag = MatrixModM::new(&f2, 2, 2, vec![unit, zero.clone(), zero.clone(), one.clone()]);
        let gens = vec![e12(&one), e12(&w), e21(&one), e21(&w), diag];
        assert_eq!(closure_order(&gens, 1000).unwrap(), 96);
    }

    #[test]
    fn cover_check_examples() {
        let f2 = make_field(2, 1).unwrap();
        assert!(!subgroup_cover_check(&f2, 2, 1, 6, COVER_CAP).unwrap());
        assert!(subgroup_cover_check(&f2, 2, 1, 3, COVER_CAP).unwrap());
        assert!(subgroup_cover_check(&f2, 2, 1, 1, COVER_CAP).unwrap());
    }

    fn spec(field: &Arc<FiniteField>, series: Vec<LaurentSeries>) -> Specialization {
        let label = series
            .iter()
            .map(|s| format!("{s}"))
            .collect::<Vec<_>>()
            .join(",");
        let _ = field;
        Specialization {
            label,
            assignment: series,
        }
    }

    #[test]
    fn certify_rank2_flagship() {
        let f2 = make_field(2, 1).unwrap();
        let specs = vec![
            spec(&f2, vec![tser(&f2, 1), tser(&f2, 1)]),
            spec(&f2, vec![tser(&f2, 2), tser(&f2, 1)]),
        ];
        let cert = certify(&f2, 2, 0, 1, &specs, &CertifyOptions::default()).unwrap();
        let degrees: Vec<u64> = cert.specializations.iter().map(|s| s.geometric_degree).collect();
        assert_eq!(degrees, vec![3, 2]);
        assert_eq!(cert.lcm, 6);
        assert_eq!(cert.group_order, 6);
        assert!(cert.is_surjective());
    }

    #[test]
    fn certify_rank1_q3() {
        let f3 = make_field(3, 1).unwrap();
        let specs = vec![spec(&f3, vec![tser(&f3, 1)])];
        let cert = certify(&f3, 2, 1, 1, &specs, &CertifyOptions::default()).unwrap();
        assert_eq!(cert.specializations[0].geometric_degree, 2);
        assert_eq!(cert.group_order, 2);
        assert!(cert.is_surjective());
    }

    #[test]
    fn certify_wild_level2() {
        let f2 = make_field(2, 1).unwrap();
        let specs = vec![spec(&f2, vec![tser(&f2, 1)])];
        let cert = certify(&f2, 2, 1, 2, &specs, &CertifyOptions::default()).unwrap();
        assert_eq!(cert.specializations[0].geometric_degree, 2);
        assert_eq!(cert.group_order, 2);
        assert!(cert.is_surjective());
    }

    #[test]
    fn certify_negative_control() {
        // u1 = 2t^2: S^2 = t^2 splits rationally, degree 1, inconclusive
        let f3 = make_field(3, 1).unwrap();
        let two_t2 = tser(&f3, 2).scalar_mul(&f3.from_int(2));
        let specs = vec![spec(&f3, vec![two_t2])];
        let cert = certify(&f3, 2, 1, 1, &specs, &CertifyOptions::default()).unwrap();
        assert_eq!(cert.specializations[0].geometric_degree, 1);
        assert_eq!(cert.verdict, "inconclusive");
    }

    #[test]
    fn certificate_json_shape() {
        let f3 = make_field(3, 1).unwrap();
        let specs = vec![spec(&f3, vec![tser(&f3, 1)])];
        let cert = certify(&f3, 2, 1, 1, &specs, &CertifyOptions::default()).unwrap();
        let json = serde_json::to_value(&cert).unwrap();
        assert_eq!(json["params"]["q"], 3);
        assert_eq!(json["params"]["h"], 1);
        assert_eq!(json["group_order"], 2);
        assert_eq!(json["verdict"], "surjective");
        assert_eq!(json["assumption"], "specialization-divisibility");
        assert!(json["specializations"][0]["tower"].is_array());
    }

    #[test]
    fn tame_matrix_order_three() {
        // q=2, n=2, h=0, (t,t), m=1: substitution has order 3 in GL2(F2)
        let f2 = make_field(2, 1).unwrap();
        let model = build_model(2, &f2, 2).unwrap();
        let s = model
            .reduce_to_stratum(0)
            .unwrap()
            .specialize(&[tser(&f2, 1), tser(&f2, 1)])
            .unwrap();
        let tm = torsion_module(&s, 1, 64).unwrap();
        let mat = tame_monodromy_matrix(&tm).unwrap();
        assert!(mat.is_invertible());
        assert_eq!(mat.order(10).unwrap(), 3);
        assert_eq!(closure_order(&[mat], 100).unwrap(), 3);
    }

    #[test]
    fn tame_matrix_scalar_minus_one() {
        let f3 = make_field(3, 1).unwrap();
        let model = build_model(3, &f3, 2).unwrap();
        let s = model
            .reduce_to_stratum(1)
            .unwrap()
            .specialize(&[tser(&f3, 1)])
            .unwrap();
        let tm = torsion_module(&s, 1, 64).unwrap();
        let mat = tame_monodromy_matrix(&tm).unwrap();
        assert_eq!(mat.k, 1);
        assert_eq!(mat.entry(0, 0).coeffs()[0], f3.from_int(2));
        assert_eq!(mat.order(10).unwrap(), 2);
    }

    #[test]
    fn tame_matrix_rejects_wild_tower() {
        let f2 = make_field(2, 1).unwrap();
        let model = build_model(2, &f2, 2).unwrap();
        let s = model
            .reduce_to_stratum(1)
            .unwrap()
            .specialize(&[tser(&f2, 1)])
            .unwrap();
        let tm = torsion_module(&s, 2, 64).unwrap();
        assert!(matches!(
            tame_monodromy_matrix(&tm),
            Err(Error::NotSingleTameStep)
        ));
    }
}
