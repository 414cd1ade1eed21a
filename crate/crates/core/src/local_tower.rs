//! Extensions of local function fields F_{q^s}((t)) built from Newton
//! polygons, residual polynomials, Hensel lifting and certified
//! coprime-segment steps; splitting towers of separable polynomials with
//! geometric-degree bookkeeping (only ramification counts, modeling an
//! algebraically closed residue field).

use std::sync::Arc;

use num_integer::Integer;
use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ffpoly;
use crate::finite_field::{roots_in_splitting_field, Ambient, FFElement, FiniteField};
use crate::laurent::{LaurentSeries, Valuation};
use crate::spoly;

pub const DEGREE_CAP: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    /// Slope of the lower hull edge (negative for positive-valuation roots).
    pub slope: Ratio<i64>,
    /// Horizontal run of the edge.
    pub length: usize,
}

#[derive(Clone, Debug)]
pub struct NewtonPolygon {
    pub zero_roots: usize,
    pub segments: Vec<Segment>,
}

/// Lower convex hull of {(i, v(c_i))}. Zero-root count is the T-adic
/// valuation; approximate-zero coefficients must lie on or above the hull
/// or the polygon is undecidable at this precision.
pub fn newton_polygon(f: &[LaurentSeries]) -> Result<NewtonPolygon> {
    let d = spoly::deg(f);
    if spoly::is_zero(f) {
        return Err(Error::DivisionByZero);
    }
    let mut zero_roots = 0usize;
    while zero_roots < d && f[zero_roots].is_exact_zero() {
        zero_roots += 1;
    }
    if f[zero_roots].is_zeroish() && !f[zero_roots].is_exact_zero() {
        return Err(Error::PrecisionExhausted(
            "lowest coefficient is an approximate zero; T-divisibility undecidable".into(),
        ));
    }
    let mut exact: Vec<(i64, i64)> = Vec::new();
    let mut bounded: Vec<(i64, i64)> = Vec::new();
    for i in zero_roots..=d {
        match f[i].valuation() {
            Valuation::Exact(v) => exact.push((i as i64, v)),
            Valuation::AtLeast(b) => bounded.push((i as i64, b)),
            Valuation::Infinite => {}
        }
    }
    // monotone-chain lower hull over the exact points
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for &(x, y) in &exact {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            // keep strictly convex turns: remove (x2,y2) if it is on or
            // above the chord (x1,y1)-(x,y)
            if (y2 - y1) as i128 * (x - x1) as i128 >= (y - y1) as i128 * (x2 - x1) as i128 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((x, y));
    }
    // soundness: every unknown coefficient must sit on or above the hull
    for &(x, b) in &bounded {
        for w in hull.windows(2) {
            let (x1, y1) = w[0];
            let (x2, y2) = w[1];
            if x1 <= x && x <= x2 {
                // hull value at x: y1 + (y2-y1)*(x-x1)/(x2-x1); compare b
                let lhs = (b - y1) as i128 * (x2 - x1) as i128;
                let rhs = (y2 - y1) as i128 * (x - x1) as i128;
                if lhs < rhs {
                    return Err(Error::PrecisionExhausted(format!(
                        "coefficient of T^{x} known only modulo t^{b}, below the hull"
                    )));
                }
            }
        }
    }
    let mut segments = Vec::new();
    for w in hull.windows(2) {
        let (x1, y1) = w[0];
        let (x2, y2) = w[1];
        segments.push(Segment {
            slope: Ratio::new(y2 - y1, x2 - x1),
            length: (x2 - x1) as usize,
        });
    }
    Ok(NewtonPolygon {
        zero_roots,
        segments,
    })
}

/// Generalized Eisenstein certificate: single segment of slope −a/b with
/// b = deg(f) and gcd(a, b) = 1. `true` proves irreducibility; `false`
/// only means "not certified".
pub fn certify_irreducible(f: &[LaurentSeries]) -> Result<bool> {
    let d = spoly::deg(f);
    if d == 0 {
        return Ok(false);
    }
    let np = newton_polygon(f)?;
    if np.zero_roots != 0 || np.segments.len() != 1 {
        return Ok(false);
    }
    let seg = &np.segments[0];
    Ok(seg.length == d && *seg.slope.denom() == d as i64)
}

#[derive(Clone, Debug)]
pub enum StepKind {
    /// Residue-field growth; cost-free for the geometric degree.
    Unramified,
    /// Certified ramified step (tame radical or coprime-segment wild).
    Ramified,
}

#[derive(Clone, Debug)]
pub struct TowerStep {
    pub kind: StepKind,
    pub degree: u64,
    pub slope: Option<Ratio<i64>>,
    /// Expansion of the previous uniformizer in the new one.
    pub prev_uniformizer: Option<LaurentSeries>,
}

#[derive(Clone, Debug)]
pub struct LocalField {
    pub residue_degree: usize,
    pub e: u64,
    pub steps: Vec<TowerStep>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SegmentRecord {
    pub slope: String,
    pub length: u64,
    pub kind: String,
}

#[derive(Clone)]
pub struct SplittingData {
    pub field: LocalField,
    pub ambient: Arc<Ambient>,
    /// Roots as series in the final uniformizer over the ambient field.
    pub roots: Vec<LaurentSeries>,
    pub geometric_degree: u64,
    pub segments: Vec<SegmentRecord>,
    /// Working precision in final-uniformizer places.
    pub final_precision: i64,
    /// Final ramification: one base-uniformizer place equals this many
    /// final-uniformizer places.
    pub e_total: u64,
}

impl SplittingData {
    /// Expansion of the base uniformizer t as a series in the final
    /// uniformizer, composed through all ramified steps.
    pub fn base_expansion(&self) -> Result<LaurentSeries> {
        let afield = self.ambient.field().clone();
        let mut exp = LaurentSeries::monomial(afield.one(), 1);
        let mut seen = false;
        for step in &self.field.steps {
            if let Some(prev) = &step.prev_uniformizer {
                if !seen {
                    exp = prev.clone();
                    seen = true;
                } else {
                    exp = exp.substitute(prev, self.final_precision.max(4) as usize)?;
                }
            }
        }
        Ok(exp)
    }
}

struct Item {
    f: Vec<LaurentSeries>,
    shift: LaurentSeries,
}

struct Ctx {
    ambient: Arc<Ambient>,
    afield: Arc<FiniteField>,
    residue_degree: usize,
    e: u64,
    steps: Vec<TowerStep>,
    records: Vec<SegmentRecord>,
    prec: i64,
    work: Vec<Item>,
    roots: Vec<LaurentSeries>,
    f_orig: Vec<LaurentSeries>,
    budget: i64,
}

/// Split a monic separable polynomial over F_{p^k}((t)) completely,
/// constructing the necessary tower. `precision` is the number of known
/// series places carried in base-uniformizer units.
pub fn splitting_tower(f: &[LaurentSeries], precision: i64) -> Result<SplittingData> {
    let d = spoly::deg(f);
    if d == 0 || spoly::is_zero(f) {
        return Err(Error::Parse("cannot split a constant polynomial".into()));
    }
    if d > DEGREE_CAP {
        return Err(Error::CapExceeded(d as u64));
    }
    let base_field = f[d].field().clone();
    let p = base_field.p();
    let mut big_k = base_field.degree();
    loop {
        let ambient = Arc::new(Ambient::new(p, big_k)?);
        match split_in_ambient(&ambient, f, precision) {
            Err(Error::AmbientTooSmall { need, .. }) => {
                big_k = big_k.lcm(&(need as usize));
            }
            other => return other,
        }
    }
}

fn split_in_ambient(
    ambient: &Arc<Ambient>,
    f: &[LaurentSeries],
    precision: i64,
) -> Result<SplittingData> {
    let afield = ambient.field().clone();
    let fa: Vec<LaurentSeries> = f
        .iter()
        .map(|c| c.map_coeffs(&afield, |x| ambient.to_ambient(x)))
        .collect::<Result<_>>()?;
    let fa = spoly::map_coeffs(&fa, |c| Ok(c.truncate_to(precision)))?;
    let fa = spoly::monic(&fa, precision as usize)?;
    let fpa = spoly::derivative(&fa, &afield);
    if spoly::is_zero(&fpa) {
        return Err(Error::Inseparable);
    }
    let disc_v = match spoly::resultant_valuation(&fa, &fpa, &afield, precision as usize) {
        Ok(v) => v,
        Err(Error::Inseparable) => return Err(Error::Inseparable),
        Err(e) => return Err(e),
    };
    let d = spoly::deg(&fa);
    let mut base_degree = 1usize;
    for c in f {
        base_degree = base_degree.lcm(&c.field().degree());
    }
    let mut ctx = Ctx {
        ambient: ambient.clone(),
        afield: afield.clone(),
        residue_degree: base_degree,
        e: 1,
        steps: vec![],
        records: vec![],
        prec: precision,
        work: vec![Item {
            f: fa.clone(),
            shift: LaurentSeries::exact_zero(&afield),
        }],
        roots: vec![],
        f_orig: fa,
        budget: disc_v + d as i64 + 8,
    };
    while let Some(item) = ctx.work.pop() {
        ctx.process(item)?;
    }
    if ctx.roots.len() != d {
        return Err(Error::InternalSoundnessError {
            d: ctx.roots.len() as u64,
            g: d as u64,
        });
    }
    // reconstruction: product of (T - root_i) must agree with f
    let mut prod = vec![LaurentSeries::one(&afield)];
    for r in &ctx.roots {
        let lin = vec![r.neg(), LaurentSeries::one(&afield)];
        prod = spoly::mul(&prod, &lin, &afield);
    }
    let diff = spoly::sub(&prod, &ctx.f_orig, &afield);
    if !diff.iter().all(|c| c.is_zeroish()) {
        return Err(Error::InternalSoundnessError {
            d: d as u64,
            g: ctx.e,
        });
    }
    let mut roots = ctx.roots;
    roots.sort_by(|a, b| a.report_cmp(b));
    Ok(SplittingData {
        field: LocalField {
            residue_degree: ctx.residue_degree,
            e: ctx.e,
            steps: ctx.steps,
        },
        ambient: ambient.clone(),
        roots,
        geometric_degree: ctx.e,
        segments: ctx.records,
        final_precision: ctx.prec,
        e_total: ctx.e,
    })
}

impl Ctx {
    fn fallback(&self) -> usize {
        self.prec.max(4) as usize
    }

    fn record(&mut self, slope: String, length: usize, kind: &str) {
        self.records.push(SegmentRecord {
            slope,
            length: length as u64,
            kind: kind.to_string(),
        });
    }

    fn remap<F>(&mut self, item: &mut Item, op: F)
    where
        F: Fn(&LaurentSeries) -> LaurentSeries,
    {
        for r in self.roots.iter_mut() {
            *r = op(r);
        }
        for it in self.work.iter_mut() {
            for c in it.f.iter_mut() {
                *c = op(c);
            }
            it.shift = op(&it.shift);
        }
        for c in item.f.iter_mut() {
            *c = op(c);
        }
        item.shift = op(&item.shift);
        for c in self.f_orig.iter_mut() {
            *c = op(c);
        }
    }

    /// Adjoin a tame radical: new uniformizer with (new)^b = old.
    fn extend_tame(&mut self, item: &mut Item, b: u64) -> Result<()> {
        self.remap(item, |s| s.scale_exponents(b as i64));
        self.e = self
            .e
            .checked_mul(b)
            .ok_or(Error::Overflow)?;
        self.prec = self.prec.saturating_mul(b as i64);
        self.budget = self.budget.saturating_mul(b as i64);
        self.steps.push(TowerStep {
            kind: StepKind::Ramified,
            degree: b,
            slope: Some(Ratio::new(-1, b as i64)),
            prev_uniformizer: Some(LaurentSeries::monomial(self.afield.one(), b as i64)),
        });
        Ok(())
    }

    fn process(&mut self, mut item: Item) -> Result<()> {
        spoly::trim(&mut item.f);
        loop {
            let d = spoly::deg(&item.f);
            if d == 0 || spoly::is_zero(&item.f) {
                return Ok(());
            }
            // strip zero roots
            if item.f[0].is_exact_zero() {
                self.roots.push(item.shift.clone());
                self.record("inf".into(), 1, "zero-root");
                item.f.remove(0);
                continue;
            }
            if item.f[0].is_zeroish() {
                return Err(Error::PrecisionExhausted(
                    "constant term is an approximate zero".into(),
                ));
            }
            if d == 1 {
                let root = item.f[0].neg().div(&item.f[1], self.fallback())?;
                self.roots.push(item.shift.add(&root));
                self.record("linear".into(), 1, "linear");
                return Ok(());
            }
            let np = newton_polygon(&item.f)?;
            // realize tame slope denominators by radical steps
            let p = self.afield.p() as i64;
            for seg in &np.segments {
                let b = *seg.slope.denom();
                let mut b_tame = b.abs();
                while b_tame % p == 0 {
                    b_tame /= p;
                }
                if b_tame > 1 {
                    self.record(format!("{}", seg.slope), seg.length, "tame-radical");
                    self.extend_tame(&mut item, b_tame as u64)?;
                    let Item { f, shift } = item;
                    self.work.push(Item { f, shift });
                    return Ok(());
                }
            }
            // harvest simple residual roots on integer slopes
            let mut progress = false;
            let mut repeated: Option<(FFElement, i64)> = None;
            for seg in &np.segments {
                if *seg.slope.denom() != 1 {
                    continue;
                }
                let a = -*seg.slope.numer();
                let (mults, grew) = match self.residual_roots(&item.f, a) {
                    Ok(v) => v,
                    Err(e) => return Err(e),
                };
                if grew > self.residue_degree {
                    let ratio = (grew / self.residue_degree) as u64;
                    self.residue_degree = grew;
                    self.steps.push(TowerStep {
                        kind: StepKind::Unramified,
                        degree: ratio,
                        slope: None,
                        prev_uniformizer: None,
                    });
                    self.record(format!("{}", seg.slope), seg.length, "unramified");
                }
                for (rbar, mult) in mults {
                    if mult == 1 {
                        let root = self.hensel_lift(&item.f, a, &rbar)?;
                        let (quo, rem) = spoly::deflate_root(&item.f, &root, &self.afield);
                        if !rem.is_zeroish() {
                            return Err(Error::PrecisionExhausted(
                                "deflation remainder not approximately zero".into(),
                            ));
                        }
                        self.roots.push(item.shift.add(&root));
                        item.f = quo;
                        self.record(format!("{}", seg.slope), 1, "hensel");
                        progress = true;
                    } else if repeated.is_none() {
                        repeated = Some((rbar, a));
                    }
                }
                if progress {
                    break; // polygon changed; recompute
                }
            }
            if progress {
                continue;
            }
            // stuck: certified wild step or shift recursion
            if certify_irreducible(&item.f)? {
                let d = spoly::deg(&item.f);
                let np1 = &np.segments[0];
                self.record(format!("{}", np1.slope), np1.length, "certified");
                let (alpha, _) = self.extend_wild(&mut item)?;
                let (quo, rem) = spoly::deflate_root(&item.f, &alpha, &self.afield);
                if !rem.is_zeroish() {
                    return Err(Error::PrecisionExhausted(
                        "adjoined root fails to vanish at working precision".into(),
                    ));
                }
                self.roots.push(item.shift.add(&alpha));
                item.f = quo;
                let _ = d;
                continue;
            }
            if let Some((rbar, a)) = repeated {
                self.budget -= 1;
                if self.budget < 0 {
                    return Err(Error::DepthExceeded(self.roots.len() as u64));
                }
                let center = LaurentSeries::monomial(rbar, a);
                item.f = taylor_shift(&item.f, &center, &self.afield);
                item.shift = item.shift.add(&center);
                self.record(format!("-{a}"), 1, "shift");
                continue;
            }
            return Err(Error::Unresolved(format!(
                "no certified step or separable residual progress at degree {}",
                spoly::deg(&item.f)
            )));
        }
    }

    /// Residual polynomial roots for the integer slope −a, with
    /// multiplicities, plus the residue degree needed to house them.
    fn residual_roots(
        &self,
        f: &[LaurentSeries],
        a: i64,
    ) -> Result<(Vec<(FFElement, usize)>, usize)> {
        let d = spoly::deg(f);
        let mut mu: Option<i64> = None;
        for (i, c) in f.iter().enumerate().take(d + 1) {
            if let Valuation::Exact(v) = c.valuation() {
                let w = v + i as i64 * a;
                mu = Some(match mu {
                    Some(m) => m.min(w),
                    None => w,
                });
            }
        }
        let mu = mu.ok_or_else(|| {
            Error::PrecisionExhausted("all coefficients are approximate zeros".into())
        })?;
        let mut res: Vec<FFElement> = Vec::with_capacity(d + 1);
        for (i, c) in f.iter().enumerate().take(d + 1) {
            let e = mu - i as i64 * a;
            match c.coeff_at(e) {
                Some(x) => res.push(x),
                None => {
                    return Err(Error::PrecisionExhausted(format!(
                        "residual coefficient of u^{i} unknown at t^{e}"
                    )))
                }
            }
        }
        ffpoly::trim(&mut res);
        // only nonzero residual roots belong to this slope
        let rm = ffpoly::monic(&res)?;
        let distinct = roots_in_splitting_field(&rm, &self.afield)?;
        let mut out = Vec::new();
        let mut split_deg = 0usize;
        for r in distinct {
            if r.is_zero() {
                continue;
            }
            let mut mult = 0usize;
            let mut g = rm.clone();
            loop {
                let (q, rem) = ffpoly::deflate(&g, &r);
                if !rem.is_zero() {
                    break;
                }
                mult += 1;
                g = q;
            }
            split_deg += mult;
            out.push((r, mult));
        }
        // zero-root multiplicity also splits here
        let mut zcount = 0usize;
        while zcount < res.len() && res[zcount].is_zero() {
            zcount += 1;
        }
        split_deg += zcount;
        if split_deg < ffpoly::deg(&rm) {
            // some irreducible factor does not split in the ambient field
            let need = self.needed_residue_degree(&rm)?;
            return Err(Error::AmbientTooSmall {
                have: self.ambient.degree(),
                need,
            });
        }
        let mut grew = self.residue_degree;
        for (r, _) in &out {
            grew = grew.lcm(&self.ambient.min_subfield_degree(r));
        }
        Ok((out, grew))
    }

    /// Distinct-degree scan to size the ambient field needed for the
    /// residual's splitting field.
    fn needed_residue_degree(&self, rm: &[FFElement]) -> Result<usize> {
        let p = self.afield.p();
        let mut s0 = 1usize;
        for c in rm {
            s0 = s0.lcm(&self.ambient.min_subfield_degree(c));
        }
        // squarefree part
        let der = ffpoly::derivative(rm);
        let g = if ffpoly::is_zero(&der) {
            rm.to_vec()
        } else {
            let gc = ffpoly::gcd(rm, &der)?;
            ffpoly::divrem(rm, &gc)?.0
        };
        let mut g = ffpoly::monic(&g)?;
        let mut need = self.ambient.degree();
        let x = vec![self.afield.zero(), self.afield.one()];
        for dd in 1..=ffpoly::deg(&g).max(1) {
            if ffpoly::deg(&g) == 0 {
                break;
            }
            let e = (s0 * dd) as u32;
            let q_pow = (p as u128)
                .checked_pow(e)
                .ok_or(Error::CapExceeded(e as u64))?;
            let xq = ffpoly::powmod(&x, q_pow, &g);
            let diff = ffpoly::sub(&xq, &x);
            let h = ffpoly::monic(&ffpoly::gcd(&g, &diff)?)?;
            if ffpoly::deg(&h) > 0 {
                need = need.lcm(&(s0 * dd));
                g = ffpoly::monic(&ffpoly::divrem(&g, &h)?.0)?;
            }
        }
        Ok(need)
    }

    /// Lift the simple residual root `rbar` on the slope −a segment.
    /// Works with the normalized polynomial φ(u) = f(π^a u)/π^μ, for
    /// which the classical dominance v(φ(u0)) > 2·v(φ'(u0)) holds.
    fn hensel_lift(&self, f: &[LaurentSeries], a: i64, rbar: &FFElement) -> Result<LaurentSeries> {
        let d = spoly::deg(f);
        let mut mu: Option<i64> = None;
        for (i, c) in f.iter().enumerate().take(d + 1) {
            if let Valuation::Exact(v) = c.valuation() {
                let w = v + i as i64 * a;
                mu = Some(mu.map_or(w, |m: i64| m.min(w)));
            }
        }
        let mu = mu.ok_or_else(|| {
            Error::PrecisionExhausted("all coefficients are approximate zeros".into())
        })?;
        let phi: Vec<LaurentSeries> = f
            .iter()
            .enumerate()
            .take(d + 1)
            .map(|(i, c)| c.shift(i as i64 * a - mu))
            .collect();
        let phip = spoly::derivative(&phi, &self.afield);
        let mut u = LaurentSeries::monomial(rbar.clone(), 0);
        let mut last_v: Option<i64> = None;
        for _ in 0..200 {
            let fu = spoly::eval(&phi, &u, &self.afield);
            if fu.is_zeroish() {
                return Ok(u.shift(a));
            }
            let fpu = spoly::eval(&phip, &u, &self.afield);
            if fpu.is_zeroish() {
                return Err(Error::NotSimple);
            }
            let vfu = fu.valuation().exact()?;
            let vfpu = fpu.valuation().exact()?;
            if vfu <= 2 * vfpu {
                return Err(Error::NotSimple);
            }
            let delta = fu.div(&fpu, self.fallback())?;
            let vd = delta.valuation().lower_bound().unwrap_or(i64::MAX);
            if vd >= self.prec {
                return Ok(u.truncate_to(self.prec).shift(a));
            }
            if let Some(lv) = last_v {
                if vd <= lv {
                    return Err(Error::PrecisionExhausted(
                        "hensel correction stopped improving".into(),
                    ));
                }
            }
            last_v = Some(vd);
            u = u.sub(&delta);
        }
        Err(Error::PrecisionExhausted("hensel iteration cap".into()))
    }

    /// Adjoin the root of a certified polynomial. Returns the adjoined
    /// root and the old uniformizer, both expanded in the new uniformizer,
    /// after remapping all live series.
    fn extend_wild(&mut self, item: &mut Item) -> Result<(LaurentSeries, LaurentSeries)> {
        let f = spoly::monic(&item.f, self.fallback())?;
        let b = spoly::deg(&f) as i64;
        let np = newton_polygon(&f)?;
        let seg = &np.segments[0];
        let a = -*seg.slope.numer();
        let bb = *seg.slope.denom();
        if bb != b || a.gcd(&b) != 1 {
            return Err(Error::NotCertified);
        }
        if !spoly::is_separable(&f, &self.afield, self.fallback())? {
            return Err(Error::InseparableExtension);
        }
        // Bezout witness x·a + y·b = 1 with 0 <= x < b
        let x = mod_inverse(a.rem_euclid(b), b).ok_or(Error::NotCertified)?;
        let y = (1 - x * a) / b;
        let alg = Algebra::new(&f, &self.afield, a, b, self.fallback())?;
        let target = self.prec.saturating_mul(b) + b;
        let pi_new = alg.pi_new(x, y)?;
        let pi_new_inv = alg.pi_new_inv(x, y)?;
        let alpha_series = alg.peel(&alg.basis(1), &pi_new, &pi_new_inv, target)?;
        let old_series = alg.peel(&alg.pi_old_elem(), &pi_new, &pi_new_inv, target)?;
        let fallback = self.fallback();
        let exp = old_series.clone();
        self.remap(item, |s| {
            s.substitute(&exp, fallback)
                .expect("uniformizer re-expansion has positive valuation")
        });
        self.e = self.e.checked_mul(b as u64).ok_or(Error::Overflow)?;
        self.prec = self.prec.saturating_mul(b);
        self.budget = self.budget.saturating_mul(b);
        self.steps.push(TowerStep {
            kind: StepKind::Ramified,
            degree: b as u64,
            slope: Some(seg.slope),
            prev_uniformizer: Some(old_series.clone()),
        });
        Ok((alpha_series, old_series))
    }
}

/// f(T + s) by repeated synthetic division at s.
fn taylor_shift(
    f: &[LaurentSeries],
    s: &LaurentSeries,
    field: &Arc<FiniteField>,
) -> Vec<LaurentSeries> {
    let mut g = f.to_vec();
    let d = spoly::deg(&g);
    let mut out = Vec::with_capacity(d + 1);
    for _ in 0..=d {
        let (q, rem) = spoly::deflate_root(&g, s, field);
        out.push(rem);
        g = q;
        if g.is_empty() {
            break;
        }
    }
    spoly::trim(&mut out);
    out
}

fn mod_inverse(a: i64, m: i64) -> Option<i64> {
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (a.rem_euclid(m), m);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m))
}

/// The algebra K[T]/(f) for a certified f, with element valuations read
/// off term-by-term: for z = Σ z_i α^i the candidate valuations
/// b·v(z_i) + i·a are pairwise distinct mod b, so no cancellation occurs.
struct Algebra {
    f: Vec<LaurentSeries>,
    field: Arc<FiniteField>,
    a: i64,
    b: i64,
    fallback: usize,
    alpha_inv: Vec<LaurentSeries>,
}

impl Algebra {
    fn new(
        f: &[LaurentSeries],
        field: &Arc<FiniteField>,
        a: i64,
        b: i64,
        fallback: usize,
    ) -> Result<Algebra> {
        // alpha^{-1} = -f_0^{-1} (alpha^{b-1} + f_{b-1} alpha^{b-2} + ... + f_1)
        let c0_inv = f[0].invert(fallback)?.neg();
        let mut alpha_inv = vec![LaurentSeries::exact_zero(field); b as usize];
        for i in 0..b as usize - 1 {
            alpha_inv[i] = f[i + 1].mul(&c0_inv);
        }
        alpha_inv[b as usize - 1] = c0_inv;
        Ok(Algebra {
            f: f.to_vec(),
            field: field.clone(),
            a,
            b,
            fallback,
            alpha_inv,
        })
    }

    fn zero(&self) -> Vec<LaurentSeries> {
        vec![LaurentSeries::exact_zero(&self.field); self.b as usize]
    }

    fn basis(&self, i: usize) -> Vec<LaurentSeries> {
        let mut z = self.zero();
        z[i] = LaurentSeries::one(&self.field);
        z
    }

    fn pi_old_elem(&self) -> Vec<LaurentSeries> {
        let mut z = self.zero();
        z[0] = LaurentSeries::monomial(self.field.one(), 1);
        z
    }

    fn mul(&self, x: &[LaurentSeries], y: &[LaurentSeries]) -> Vec<LaurentSeries> {
        let prod = spoly::mul(x, y, &self.field);
        // reduce modulo monic f
        let mut red = prod;
        while spoly::deg(&red) >= self.b as usize && !spoly::is_zero(&red) {
            let dd = spoly::deg(&red);
            let lead = red[dd].clone();
            if lead.is_exact_zero() {
                red.pop();
                continue;
            }
            for j in 0..self.b as usize {
                let t = self.f[j].mul(&lead);
                red[dd - self.b as usize + j] = red[dd - self.b as usize + j].sub(&t);
            }
            red.truncate(dd);
        }
        red.resize(self.b as usize, LaurentSeries::exact_zero(&self.field));
        red
    }

    fn pow(&self, z: &[LaurentSeries], mut e: u64) -> Vec<LaurentSeries> {
        let mut acc = self.basis(0);
        let mut base = z.to_vec();
        base.resize(self.b as usize, LaurentSeries::exact_zero(&self.field));
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    fn scale_t(&self, z: &[LaurentSeries], e: i64) -> Vec<LaurentSeries> {
        z.iter().map(|c| c.shift(e)).collect()
    }

    /// pi_new = alpha^x * t^y.
    fn pi_new(&self, x: i64, y: i64) -> Result<Vec<LaurentSeries>> {
        let mut z = self.basis(x as usize % self.b as usize);
        if x as usize >= self.b as usize {
            // x is reduced into [0, b) by the caller; keep the general path
            z = self.pow(&self.basis(1), x as u64);
        }
        Ok(self.scale_t(&z, y))
    }

    fn pi_new_inv(&self, x: i64, y: i64) -> Result<Vec<LaurentSeries>> {
        let z = self.pow(&self.alpha_inv, x as u64);
        Ok(self.scale_t(&z, -y))
    }

    /// Exact valuation and approximate-zero bound of z in new-uniformizer
    /// units.
    fn valuation_info(&self, z: &[LaurentSeries]) -> (Option<i64>, Option<i64>) {
        let mut exact: Option<i64> = None;
        let mut bound: Option<i64> = None;
        for (i, c) in z.iter().enumerate() {
            match c.valuation() {
                Valuation::Exact(v) => {
                    let w = self.b * v + i as i64 * self.a;
                    exact = Some(exact.map_or(w, |m: i64| m.min(w)));
                }
                Valuation::AtLeast(v) => {
                    let w = self.b * v + i as i64 * self.a;
                    bound = Some(bound.map_or(w, |m: i64| m.min(w)));
                }
                Valuation::Infinite => {}
            }
        }
        (exact, bound)
    }

    /// pi-adic digit expansion of z in powers of pi_new, up to exponent
    /// `limit`, returned as a series in the new uniformizer.
    fn peel(
        &self,
        z: &[LaurentSeries],
        pi_new: &[LaurentSeries],
        pi_new_inv: &[LaurentSeries],
        limit: i64,
    ) -> Result<LaurentSeries> {
        let mut z = z.to_vec();
        z.resize(self.b as usize, LaurentSeries::exact_zero(&self.field));
        let mut digits: Vec<(i64, FFElement)> = Vec::new();
        let mut last: Option<i64> = None;
        // precision actually achieved; shrinks if the remainder is only
        // known to be zero up to some bound
        let mut reached = limit;
        loop {
            let v = match self.valuation_info(&z) {
                (Some(v), Some(bd)) if bd <= v => {
                    reached = limit.min(bd);
                    break;
                }
                (Some(v), _) => v,
                (None, Some(bd)) => {
                    reached = limit.min(bd);
                    break;
                }
                (None, None) => break,
            };
            if v >= limit {
                break;
            }
            if let Some(l) = last {
                if v <= l {
                    return Err(Error::InternalSoundnessError {
                        d: v as u64,
                        g: l as u64,
                    });
                }
            }
            last = Some(v);
            // residue digit: constant coefficient of z * pi_new^{-v}
            let w = if v >= 0 {
                self.mul(&z, &self.pow(pi_new_inv, v as u64))
            } else {
                self.mul(&z, &self.pow(pi_new, (-v) as u64))
            };
            let digit = w[0]
                .coeff_at(0)
                .ok_or_else(|| Error::PrecisionExhausted("digit beyond precision".into()))?;
            if digit.is_zero() {
                return Err(Error::InternalSoundnessError {
                    d: v as u64,
                    g: 0,
                });
            }
            digits.push((v, digit.clone()));
            // z -= digit * pi_new^v
            let mono = if v >= 0 {
                self.pow(pi_new, v as u64)
            } else {
                self.pow(pi_new_inv, (-v) as u64)
            };
            for (i, c) in mono.iter().enumerate() {
                z[i] = z[i].sub(&c.scalar_mul(&digit));
            }
        }
        let v0 = digits.first().map(|d| d.0).unwrap_or(reached);
        let mut coeffs = vec![self.field.zero(); (reached - v0).max(0) as usize];
        for (v, c) in digits {
            coeffs[(v - v0) as usize] = c;
        }
        Ok(LaurentSeries::new(
            self.field.clone(),
            v0,
            coeffs,
            Some(reached),
        ))
    }

    #[allow(dead_code)]
    fn fallback(&self) -> usize {
        self.fallback
    }
}
