//! Torsion modules of the étale quotient over a specialized stratum,
//! level-structure coordinates, and the product/reduction/nonvanishing
//! identity checks.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::finite_field::{FFElement, FiniteField};
use crate::formal_module::{AdditivePoly, OElement, SpecializedStratum};
use crate::laurent::{LaurentSeries, Valuation};
use crate::local_tower::{splitting_tower, SplittingData};
use crate::spoly;

/// Identification margin in uniformizer places beyond the maximum
/// pairwise root-difference valuation.
pub const MARGIN_PLACES: i64 = 8;

/// Margin-based root identification: two approximations denote the same
/// root iff their difference has valuation at or beyond the margin.
#[derive(Clone, Copy, Debug)]
pub struct RootMatcher {
    pub margin: i64,
}

impl RootMatcher {
    pub fn same(&self, x: &LaurentSeries, y: &LaurentSeries) -> Result<bool> {
        match x.sub(y).valuation() {
            Valuation::Infinite => Ok(true),
            Valuation::Exact(v) => Ok(v >= self.margin),
            Valuation::AtLeast(b) => {
                if b >= self.margin {
                    Ok(true)
                } else {
                    Err(Error::AmbiguousIdentification)
                }
            }
        }
    }

    pub fn is_zero(&self, x: &LaurentSeries) -> Result<bool> {
        match x.valuation() {
            Valuation::Infinite => Ok(true),
            Valuation::Exact(v) => Ok(v >= self.margin),
            Valuation::AtLeast(b) => {
                if b >= self.margin {
                    Ok(true)
                } else {
                    Err(Error::AmbiguousIdentification)
                }
            }
        }
    }
}

/// Level-m torsion of the étale quotient: the q^{mk} roots of g^{∘m}
/// with a deterministic basis and complete coordinate table.
pub struct TorsionModule {
    pub stratum: SpecializedStratum,
    pub m: usize,
    /// Rank k = n - h.
    pub k: usize,
    pub data: SplittingData,
    pub matcher: RootMatcher,
    /// g with coefficients embedded into the ambient field and rewritten
    /// in the final uniformizer.
    pub g_final: AdditivePoly<LaurentSeries>,
    /// Indices into `data.roots` of the basis b_1..b_k.
    pub basis: Vec<usize>,
    /// Coordinate vector (length k over o/(w^m)) per root index.
    pub coords: Vec<Vec<OElement>>,
}

impl TorsionModule {
    pub fn roots(&self) -> &[LaurentSeries] {
        &self.data.roots
    }

    pub fn afield(&self) -> &Arc<FiniteField> {
        self.data.ambient.field()
    }

    pub fn basis_root(&self, i: usize) -> &LaurentSeries {
        &self.data.roots[self.basis[i]]
    }

    fn embed_scalar(&self, c: &FFElement) -> Result<FFElement> {
        self.data.ambient.to_ambient(c)
    }

    /// Apply g j times to a point in final coordinates.
    pub fn g_iter(&self, x: &LaurentSeries, j: usize) -> LaurentSeries {
        let mut out = x.clone();
        for _ in 0..j {
            out = self.g_final.eval(&out, self.afield());
        }
        out
    }

    /// The level structure: phi(a) = sum_j [a_j] b_j with
    /// [a_j] = sum_l a_{j,l} g^{∘l}.
    pub fn phi(&self, a: &[OElement]) -> Result<LaurentSeries> {
        assert_eq!(a.len(), self.k);
        let mut acc = LaurentSeries::exact_zero(self.afield());
        for (j, aj) in a.iter().enumerate() {
            let b = self.basis_root(j);
            let mut power = b.clone();
            for (l, c) in aj.coeffs().iter().enumerate() {
                if l > 0 {
                    power = self.g_final.eval(&power, self.afield());
                }
                if !c.is_zero() {
                    let ce = self.embed_scalar(c)?;
                    acc = acc.add(&power.scalar_mul(&ce));
                }
            }
        }
        Ok(acc)
    }

    /// Index of the root matching x within the margin.
    pub fn find_root(&self, x: &LaurentSeries) -> Result<usize> {
        let mut found = None;
        for (i, r) in self.data.roots.iter().enumerate() {
            if self.matcher.same(x, r)? {
                if found.is_some() {
                    return Err(Error::AmbiguousIdentification);
                }
                found = Some(i);
            }
        }
        found.ok_or(Error::NotARoot)
    }

    /// The unique coordinate vector a with phi(a) = root.
    pub fn express(&self, x: &LaurentSeries) -> Result<Vec<OElement>> {
        let i = self.find_root(x)?;
        Ok(self.coords[i].clone())
    }
}

/// Enumerate all coordinate vectors in (o/(w^m))^k.
pub fn all_vectors(field: &Arc<FiniteField>, m: usize, k: usize) -> Result<Vec<Vec<OElement>>> {
    let singles = OElement::all(field, m)?;
    let mut out: Vec<Vec<OElement>> = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::with_capacity(out.len() * singles.len());
        for v in &out {
            for s in &singles {
                let mut w = v.clone();
                w.push(s.clone());
                next.push(w);
            }
        }
        out = next;
        if out.len() > (1 << 22) {
            return Err(Error::CapExceeded(out.len() as u64));
        }
    }
    Ok(out)
}

/// Compute the level-m torsion module of a specialized stratum.
pub fn torsion_module(
    stratum: &SpecializedStratum,
    m: usize,
    precision: i64,
) -> Result<TorsionModule> {
    let k = stratum.rank();
    let q = stratum.q();
    let dense = stratum.etale_division(m).to_dense(&stratum.field);
    let data = splitting_tower(&dense, precision)?;
    let expected = (q as u128).pow((m * k) as u32);
    if data.roots.len() as u128 != expected {
        return Err(Error::RankMismatch {
            found: data.roots.len(),
            expected: expected as u64,
        });
    }
    // identification margin from pairwise differences
    let mut max_v: i64 = 0;
    for i in 0..data.roots.len() {
        for j in i + 1..data.roots.len() {
            match data.roots[i].sub(&data.roots[j]).valuation() {
                Valuation::Exact(v) => max_v = max_v.max(v),
                _ => return Err(Error::AmbiguousIdentification),
            }
        }
    }
    let matcher = RootMatcher {
        margin: max_v + MARGIN_PLACES,
    };
    // g in final coordinates: embed coefficients, substitute the base
    // uniformizer expansion
    let afield = data.ambient.field().clone();
    let texp = data.base_expansion()?;
    let fallback = data.final_precision.max(4) as usize;
    let mut g_terms = Vec::new();
    for (j, c) in stratum.g.iter().enumerate() {
        let ce = c.map_coeffs(&afield, |x| data.ambient.to_ambient(x))?;
        let cf = ce.substitute(&texp, fallback)?;
        g_terms.push((j as u32, cf));
    }
    let g_final = AdditivePoly::from_terms(stratum.s(), g_terms);

    let mut tm = TorsionModule {
        stratum: stratum.clone(),
        m,
        k,
        data,
        matcher,
        g_final,
        basis: vec![],
        coords: vec![],
    };

    // greedy deterministic basis: roots are already in report order
    let mut basis: Vec<usize> = Vec::new();
    for _ in 0..k {
        // span of the current partial basis
        let vectors = all_vectors(&stratum.field, m, basis.len())?;
        let mut in_span = vec![false; tm.data.roots.len()];
        for v in &vectors {
            let x = {
                // phi over the partial basis
                let mut acc = LaurentSeries::exact_zero(tm.afield());
                for (j, aj) in v.iter().enumerate() {
                    let b = &tm.data.roots[basis[j]];
                    let mut power = b.clone();
                    for (l, c) in aj.coeffs().iter().enumerate() {
                        if l > 0 {
                            power = tm.g_final.eval(&power, tm.afield());
                        }
                        if !c.is_zero() {
                            let ce = tm.embed_scalar(c)?;
                            acc = acc.add(&power.scalar_mul(&ce));
                        }
                    }
                }
                acc
            };
            for (i, r) in tm.data.roots.iter().enumerate() {
                if tm.matcher.same(&x, r)? {
                    in_span[i] = true;
                }
            }
        }
        let next = tm
            .data
            .roots
            .iter()
            .enumerate()
            .position(|(i, r)| {
                !in_span[i]
                    && tm
                        .matcher
                        .is_zero(&tm.g_iter(r, m - 1))
                        .map(|z| !z)
                        .unwrap_or(false)
            })
            .ok_or(Error::RankMismatch {
                found: basis.len(),
                expected: k as u64,
            })?;
        basis.push(next);
    }
    tm.basis = basis;

    // complete coordinate table by exhaustive enumeration
    let vectors = all_vectors(&stratum.field, m, k)?;
    let mut coords: Vec<Option<Vec<OElement>>> = vec![None; tm.data.roots.len()];
    for v in vectors {
        let x = tm.phi(&v)?;
        let i = tm.find_root(&x)?;
        if coords[i].is_some() {
            return Err(Error::AmbiguousIdentification);
        }
        coords[i] = Some(v);
    }
    let coords: Vec<Vec<OElement>> = coords
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or(Error::AmbiguousIdentification)?;
    tm.coords = coords;
    Ok(tm)
}

/// Check the specialized level-1 product identity at h = 0:
/// the monic product of (T − phi(a)) over all a equals [w](T) with unit 1.
pub fn verify_product_identity(tm: &TorsionModule) -> Result<()> {
    if tm.stratum.h != 0 || tm.m != 1 {
        return Err(Error::Parse(
            "product identity applies to the h=0, m=1 layer".into(),
        ));
    }
    verify_product_with_roots(tm, tm.roots())
}

/// Division form of the check, exposed separately so a deliberately
/// corrupted root multiset can be shown to fail.
pub fn verify_product_with_roots(tm: &TorsionModule, roots: &[LaurentSeries]) -> Result<()> {
    let afield = tm.afield();
    let mut prod = vec![LaurentSeries::one(afield)];
    for r in roots {
        let lin = vec![r.neg(), LaurentSeries::one(afield)];
        prod = spoly::mul(&prod, &lin, afield);
    }
    // [w] at h=0 level 1 is the étale polynomial itself, in final coordinates
    let div = tm.g_final.to_dense(afield);
    let fallback = tm.data.final_precision.max(4) as usize;
    let (eps, rem) = spoly::divrem(&prod, &div, afield, fallback)?;
    if !rem.iter().all(|c| c.is_zeroish()) {
        return Err(Error::IdentityFailed(
            "level product does not reduce to the division polynomial".into(),
        ));
    }
    if spoly::deg(&eps) != 0 {
        return Err(Error::IdentityFailed(format!(
            "unit has degree {}",
            spoly::deg(&eps)
        )));
    }
    if !eps[0].sub(&LaurentSeries::one(afield)).is_zeroish() {
        return Err(Error::IdentityFailed(format!("unit is {} instead of 1", eps[0])));
    }
    Ok(())
}

/// Power-series division in T with series coefficients: num/den to
/// `nterms` coefficients; den[0] must be invertible.
pub fn tseries_div(
    num: &[LaurentSeries],
    den: &[LaurentSeries],
    nterms: usize,
    field: &Arc<FiniteField>,
    fallback: usize,
) -> Result<Vec<LaurentSeries>> {
    if den.is_empty() || den[0].is_zeroish() {
        return Err(Error::DivisionByZero);
    }
    let d0_inv = den[0].invert(fallback)?;
    let zero = LaurentSeries::exact_zero(field);
    let mut out: Vec<LaurentSeries> = Vec::with_capacity(nterms);
    for i in 0..nterms {
        let mut acc = num.get(i).unwrap_or(&zero).clone();
        for j in 1..=i {
            let dj = den.get(j).unwrap_or(&zero);
            if !dj.is_exact_zero() {
                acc = acc.sub(&dj.mul(&out[i - j]));
            }
        }
        out.push(acc.mul(&d0_inv));
    }
    Ok(out)
}

#[derive(Debug)]
pub struct ReductionReport {
    /// Constant term of the unit power series.
    pub ebar0: LaurentSeries,
    /// Multiplicity with which each level-1 étale root occurs in the
    /// reduced level multiset.
    pub connected_multiplicity: u64,
}

/// Check the stratum reduction identity: g(T)^{q^h} = ε̄(T)·g(T^{q^h})
/// with ε̄ invertible and ε̄(0) = u_h^{q^h−1}, plus the multiset statement
/// that the w^{m−1}-layer of the level structure enumerates the roots of
/// g, each carrying q^h connected labels.
pub fn verify_reduction_identity(tm: &TorsionModule) -> Result<ReductionReport> {
    let s = &tm.stratum;
    let field = &s.field;
    let q = s.q();
    let h = s.h;
    let qh = (q as usize).pow(h as u32);
    let fallback = 64usize;
    // dense g(T) over the base coordinates
    let g_dense = s.etale().to_dense(field);
    // numerator: g(T)^{q^h}; denominator: g(T^{q^h}); strip T^{q^h}
    let mut num = vec![LaurentSeries::one(field)];
    for _ in 0..qh {
        num = spoly::mul(&num, &g_dense, field);
    }
    let mut den = vec![LaurentSeries::exact_zero(field); (g_dense.len() - 1) * qh + 1];
    for (i, c) in g_dense.iter().enumerate() {
        den[i * qh] = c.clone();
    }
    let num_s = num[qh..].to_vec();
    let den_s = den[qh..].to_vec();
    let nterms = 12usize;
    let ebar = tseries_div(&num_s, &den_s, nterms, field, fallback)?;
    // reconstruction check to the computed T-precision
    let recon = spoly::mul(&ebar, &den_s, field);
    for i in 0..nterms {
        let zero = LaurentSeries::exact_zero(field);
        let a = recon.get(i).unwrap_or(&zero);
        let b = num_s.get(i).unwrap_or(&zero);
        if !a.sub(b).is_zeroish() {
            return Err(Error::IdentityFailed(format!(
                "reduction identity fails at T-coefficient {i}"
            )));
        }
    }
    let ebar0 = ebar[0].clone();
    if ebar0.is_zeroish() {
        return Err(Error::IdentityFailed("unit series not invertible".into()));
    }
    let expect = s.g[0].pow((qh - 1) as u64);
    if !ebar0.sub(&expect).is_zeroish() {
        return Err(Error::IdentityFailed(
            "unit constant differs from u_h^{q^h-1}".into(),
        ));
    }
    // multiset statement: the w^{m-1} layer gives exactly the roots of g
    let level1: Vec<Vec<OElement>> = all_vectors(field, 1, tm.k)?
        .into_iter()
        .map(|v| {
            v.into_iter()
                .map(|c| {
                    // lift the level-1 digit into w^{m-1} * c at level m
                    let mut coeffs = vec![field.zero(); tm.m];
                    coeffs[tm.m - 1] = c.coeffs()[0].clone();
                    OElement::new(field, coeffs)
                })
                .collect()
        })
        .collect();
    let mut seen: Vec<LaurentSeries> = Vec::new();
    for v in &level1 {
        let x = tm.phi(v)?;
        let gx = tm.g_final.eval(&x, tm.afield());
        if !tm.matcher.is_zero(&gx)? {
            return Err(Error::IdentityFailed(
                "w^{m-1} layer element is not a root of g".into(),
            ));
        }
        for y in &seen {
            if tm.matcher.same(&x, y)? {
                return Err(Error::IdentityFailed(
                    "w^{m-1} layer values collide".into(),
                ));
            }
        }
        seen.push(x);
    }
    // q^k distinct values, each carrying q^h connected labels, exhaust the
    // q^k roots of g with multiplicity q^h
    Ok(ReductionReport {
        ebar0,
        connected_multiplicity: qh as u64,
    })
}

/// Every nonzero coordinate vector maps to a field element of finite
/// valuation.
pub fn verify_nonvanishing(tm: &TorsionModule) -> Result<bool> {
    for (i, r) in tm.roots().iter().enumerate() {
        let is_zero_vec = tm.coords[i].iter().all(|c| c.is_zero());
        if is_zero_vec {
            continue;
        }
        match r.valuation() {
            Valuation::Exact(_) => {}
            Valuation::AtLeast(_) => {
                return Err(Error::PrecisionExhausted(
                    "nonzero level element only known as an approximate zero".into(),
                ))
            }
            Valuation::Infinite => return Ok(false),
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_field::make_field;
    use crate::formal_module::build_model;

    fn tser(field: &Arc<FiniteField>, e: i64) -> LaurentSeries {
        LaurentSeries::monomial(field.one(), e)
    }

    fn stratum(
        p: u64,
        k: usize,
        n: usize,
        h: usize,
        assign: &[LaurentSeries],
    ) -> SpecializedStratum {
        let fq = make_field(p, k).unwrap();
        build_model(p, &fq, n)
            .unwrap()
            .reduce_to_stratum(h)
            .unwrap()
            .specialize(assign)
            .unwrap()
    }

    #[test]
    fn rank2_level1_torsion() {
        // q=2, n=2, h=0, (u0,u1)=(t,t), m=1: 4 roots, geometric degree 3
        let f2 = make_field(2, 1).unwrap();
        let s = stratum(2, 1, 2, 0, &[tser(&f2, 1), tser(&f2, 1)]);
        let tm = torsion_module(&s, 1, 64).unwrap();
        assert_eq!(tm.k, 2);
        assert_eq!(tm.roots().len(), 4);
        assert_eq!(tm.data.geometric_degree, 3);
        // the three nonzero roots satisfy r1 + r2 = r3 up to margin
        let nz: Vec<_> = tm
            .roots()
            .iter()
            .filter(|r| matches!(r.valuation(), Valuation::Exact(_)))
            .collect();
        assert_eq!(nz.len(), 3);
        let sum = nz[0].add(nz[1]);
        assert!(tm.matcher.same(&sum, nz[2]).unwrap());
    }

    #[test]
    fn rank1_q3_torsion() {
        // q=3, n=2, h=1, u1=t, m=1: roots {0, r, -r} with r^2 = -t
        let f3 = make_field(3, 1).unwrap();
        let s = stratum(3, 1, 2, 1, &[tser(&f3, 1)]);
        let tm = torsion_module(&s, 1, 64).unwrap();
        assert_eq!(tm.roots().len(), 3);
        assert_eq!(tm.data.geometric_degree, 2);
        let nz: Vec<_> = tm
            .roots()
            .iter()
            .filter(|r| matches!(r.valuation(), Valuation::Exact(_)))
            .collect();
        assert_eq!(nz.len(), 2);
        assert!(tm.matcher.same(&nz[0].neg(), nz[1]).unwrap());
        // r^2 + t = 0 in final coordinates
        let texp = tm.data.base_expansion().unwrap();
        let check = nz[0].mul(nz[0]).add(&texp);
        assert!(tm.matcher.is_zero(&check).unwrap());
    }

    #[test]
    fn rank1_level2_wild_torsion() {
        // q=2, n=2, h=1, u1=t, m=2: 4 roots; w-torsion {0, t}
        let f2 = make_field(2, 1).unwrap();
        let s = stratum(2, 1, 2, 1, &[tser(&f2, 1)]);
        let tm = torsion_module(&s, 2, 64).unwrap();
        assert_eq!(tm.roots().len(), 4);
        assert_eq!(tm.data.geometric_degree, 2);
        // the w-torsion layer consists of 0 and the expansion of t
        let texp = tm.data.base_expansion().unwrap();
        let pi_layer: Vec<_> = tm
            .roots()
            .iter()
            .filter(|r| tm.matcher.is_zero(&tm.g_iter(r, 1)).unwrap())
            .collect();
        assert_eq!(pi_layer.len(), 2);
        assert!(pi_layer
            .iter()
            .any(|r| tm.matcher.same(r, &texp).unwrap()));
    }

    #[test]
    fn coordinates_and_express() {
        let f2 = make_field(2, 1).unwrap();
        let s = stratum(2, 1, 2, 0, &[tser(&f2, 1), tser(&f2, 1)]);
        let tm = torsion_module(&s, 1, 64).unwrap();
        // basis roots map to unit vectors
        for (i, &bi) in tm.basis.iter().enumerate() {
            let c = tm.express(&tm.data.roots[bi].clone()).unwrap();
            for (j, cj) in c.iter().enumerate() {
                assert_eq!(cj.is_zero(), j != i);
                if j == i {
                    assert!(cj.is_unit());
                }
            }
        }
        // additivity: express(b1 + b2) = e1 + e2
        let sum = tm.basis_root(0).add(tm.basis_root(1));
        let c = tm.express(&sum).unwrap();
        assert!(c.iter().all(|x| x.is_unit()));
        // express ∘ phi = identity on all vectors
        for v in all_vectors(&f2, 1, 2).unwrap() {
            let x = tm.phi(&v).unwrap();
            assert_eq!(tm.express(&x).unwrap(), v);
        }
    }

    #[test]
    fn g_acts_as_pi_on_level2() {
        let f2 = make_field(2, 1).unwrap();
        let s = stratum(2, 1, 2, 1, &[tser(&f2, 1)]);
        let tm = torsion_module(&s, 2, 64).unwrap();
        let b = tm.basis_root(0).clone();
        let gb = tm.g_final.eval(&b, tm.afield());
        let c = tm.express(&gb).unwrap();
        // coordinate w * e1
        assert_eq!(c[0].coeffs()[0], f2.zero());
        assert_eq!(c[0].coeffs()[1], f2.one());
    }

    #[test]
    fn product_identity_and_corruption() {
        let f2 = make_field(2, 1).unwrap();
        let s = stratum(2, 1, 2, 0, &[tser(&f2, 1), tser(&f2, 1)]);
        let tm = torsion_module(&s, 1, 64).unwrap();
        verify_product_identity(&tm).unwrap();
        // dropping a root breaks the identity
        let fewer: Vec<_> = tm.roots()[..3].to_vec();
        assert!(matches!(
            verify_product_with_roots(&tm, &fewer),
            Err(Error::IdentityFailed(_)) | Err(Error::PrecisionExhausted(_))
        ));
    }

    #[test]
    fn product_identity_height_one() {
        // n=1, u0=t: product over roots of tT + T^q equals it
        let f2 = make_field(2, 1).unwrap();
        let s = stratum(2, 1, 1, 0, &[tser(&f2, 1)]);
        let tm = torsion_module(&s, 1, 64).unwrap();
        verify_product_identity(&tm).unwrap();
    }

    #[test]
    fn reduction_identity_examples() {
        // q=2, h=1, u1=t: ebar(0) = t
        let f2 = make_field(2, 1).unwrap();
        let s = stratum(2, 1, 2, 1, &[tser(&f2, 1)]);
        let tm = torsion_module(&s, 1, 64).unwrap();
        let rep = verify_reduction_identity(&tm).unwrap();
        assert!(rep.ebar0.sub(&tser(&f2, 1)).is_zeroish());
        assert_eq!(rep.connected_multiplicity, 2);
        // q=3, h=1, u1=t: ebar(0) = t^2
        let f3 = make_field(3, 1).unwrap();
        let s3 = stratum(3, 1, 2, 1, &[tser(&f3, 1)]);
        let tm3 = torsion_module(&s3, 1, 64).unwrap();
        let rep3 = verify_reduction_identity(&tm3).unwrap();
        assert!(rep3.ebar0.sub(&tser(&f3, 2)).is_zeroish());
        assert_eq!(rep3.connected_multiplicity, 3);
    }

    #[test]
    fn nonvanishing_examples() {
        let f3 = make_field(3, 1).unwrap();
        let s = stratum(3, 1, 2, 1, &[tser(&f3, 1)]);
        let tm = torsion_module(&s, 1, 64).unwrap();
        assert!(verify_nonvanishing(&tm).unwrap());
        let f2 = make_field(2, 1).unwrap();
        let s2 = stratum(2, 1, 2, 1, &[tser(&f2, 1)]);
        let tm2 = torsion_module(&s2, 2, 64).unwrap();
        assert!(verify_nonvanishing(&tm2).unwrap());
    }

    #[test]
    fn root_set_closed_under_addition_and_g() {
        let f2 = make_field(2, 1).unwrap();
        let s = stratum(2, 1, 2, 0, &[tser(&f2, 1), tser(&f2, 1)]);
        let tm = torsion_module(&s, 1, 64).unwrap();
        for a in tm.roots() {
            for b in tm.roots() {
                tm.find_root(&a.add(b)).unwrap();
            }
            tm.find_root(&tm.g_final.eval(a, tm.afield())).unwrap();
        }
    }
}
