//! Driver layer shared by the CLI and the C ABI: specialization-expression
//! parsing, identity-suite reports, and manifest-driven batches.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_field::{factorize_u128, make_field, FiniteField};
use crate::formal_module::{build_model, SpecializedStratum};
use crate::laurent::{LaurentSeries, MAX_PRECISION};
use crate::monodromy::{certify, gl_order, CertParams, Certificate, CertifyOptions, Specialization};
use crate::torsion::{
    torsion_module, verify_nonvanishing, verify_product_identity, verify_reduction_identity,
    TorsionModule,
};

/// Resolve a prime power q = p^k to its field.
pub fn field_for_q(q: u64) -> Result<Arc<FiniteField>> {
    if q < 2 {
        return Err(Error::Parse(format!("q = {q} is not a prime power")));
    }
    let factors = factorize_u128(q as u128);
    let p = factors[0].0 as u64;
    let mut k = 0usize;
    let mut rest = q;
    while rest % p == 0 {
        rest /= p;
        k += 1;
    }
    if rest != 1 {
        return Err(Error::Parse(format!("q = {q} is not a prime power")));
    }
    make_field(p, k)
}

/// Parse a series expression: a sum of terms `c*t^e`, `t^e`, `c*t`, `t`
/// with integer c (reduced into F_q) and e >= 1.
pub fn parse_series(field: &Arc<FiniteField>, expr: &str) -> Result<LaurentSeries> {
    let expr = expr.trim();
    if expr.is_empty() {
        return Err(Error::Parse("empty series expression".into()));
    }
    let mut out = LaurentSeries::exact_zero(field);
    for term in expr.split('+') {
        let term = term.trim();
        let (coeff_str, rest) = match term.split_once('*') {
            Some((c, r)) => (Some(c.trim()), r.trim()),
            None => (None, term),
        };
        let c = match coeff_str {
            Some(s) => {
                let v: i64 = s
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad coefficient `{s}` in `{term}`")))?;
                field.from_int_signed(v)
            }
            None => field.one(),
        };
        let e: i64 = match rest.strip_prefix('t') {
            Some("") => 1,
            Some(pow) => {
                let digits = pow
                    .strip_prefix('^')
                    .ok_or_else(|| Error::Parse(format!("bad term `{term}`")))?;
                digits
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad exponent in `{term}`")))?
            }
            None => return Err(Error::Parse(format!("bad term `{term}` (expected c*t^e)"))),
        };
        if e < 1 {
            return Err(Error::Parse(format!(
                "exponent {e} in `{term}` must be at least 1"
            )));
        }
        out = out.add(&LaurentSeries::monomial(c, e));
    }
    Ok(out)
}

/// Parse a full assignment `u<h>=<expr>,...,u<n-1>=<expr>`.
pub fn parse_spec(
    field: &Arc<FiniteField>,
    n: usize,
    h: usize,
    text: &str,
) -> Result<Specialization> {
    let mut by_index: BTreeMap<usize, LaurentSeries> = BTreeMap::new();
    for part in text.split(',') {
        let part = part.trim();
        let (lhs, rhs) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected u<i>=<expr>, got `{part}`")))?;
        let idx: usize = lhs
            .trim()
            .strip_prefix('u')
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad parameter name `{lhs}`")))?;
        if idx < h || idx >= n {
            return Err(Error::Parse(format!(
                "parameter u{idx} outside stratum range u{h}..u{}",
                n - 1
            )));
        }
        if by_index.insert(idx, parse_series(field, rhs)?).is_some() {
            return Err(Error::Parse(format!("duplicate parameter u{idx}")));
        }
    }
    let mut assignment = Vec::with_capacity(n - h);
    for idx in h..n {
        assignment.push(by_index.remove(&idx).ok_or_else(|| {
            Error::Parse(format!("missing parameter u{idx} in `{text}`"))
        })?);
    }
    Ok(Specialization {
        label: text.trim().to_string(),
        assignment,
    })
}

pub fn build_stratum(
    q_field: &Arc<FiniteField>,
    n: usize,
    h: usize,
    assignment: &[LaurentSeries],
) -> Result<SpecializedStratum> {
    build_model(q_field.p(), q_field, n)?
        .reduce_to_stratum(h)?
        .specialize(assignment)
}

/// Torsion-module construction with automatic precision retry.
pub fn torsion_with_retry(
    stratum: &SpecializedStratum,
    m: usize,
    precision: i64,
) -> Result<TorsionModule> {
    let mut prec = precision;
    loop {
        match torsion_module(stratum, m, prec) {
            Ok(t) => return Ok(t),
            Err(e) if e.is_precision_failure() && prec * 2 <= MAX_PRECISION => prec *= 2,
            Err(e) => return Err(e),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub params: CertParams,
    pub assignment: String,
    pub checks: Vec<CheckResult>,
    pub verdict: String,
    pub precision: i64,
}

impl IdentityReport {
    pub fn all_pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }
}

pub const CHECK_NAMES: [&str; 3] = ["eq31", "eq41", "nonvanishing"];

/// Run the selected identity checks on one specialization. An empty
/// selection runs every check applicable to (h, m).
pub fn run_identities(
    q_field: &Arc<FiniteField>,
    n: usize,
    h: usize,
    m: usize,
    spec: &Specialization,
    selected: &[String],
    precision: i64,
) -> Result<IdentityReport> {
    for name in selected {
        if !CHECK_NAMES.contains(&name.as_str()) {
            return Err(Error::Parse(format!(
                "unknown check `{name}` (expected eq31, eq41, or nonvanishing)"
            )));
        }
    }
    let wants = |name: &str| {
        if selected.is_empty() {
            name != "eq31" || (h == 0 && m == 1)
        } else {
            selected.iter().any(|s| s == name)
        }
    };
    let stratum = build_stratum(q_field, n, h, &spec.assignment)?;
    let tm = torsion_with_retry(&stratum, m, precision)?;
    let mut checks = Vec::new();
    if wants("eq31") {
        let (pass, detail) = match verify_product_identity(&tm) {
            Ok(()) => (true, "product over the level equals the division polynomial with unit 1".to_string()),
            Err(e) => (false, e.to_string()),
        };
        checks.push(CheckResult {
            name: "eq31".into(),
            pass,
            detail,
        });
    }
    if wants("eq41") {
        let (pass, detail) = match verify_reduction_identity(&tm) {
            Ok(rep) => (
                true,
                format!(
                    "unit constant {} ; connected multiplicity {}",
                    rep.ebar0, rep.connected_multiplicity
                ),
            ),
            Err(e) => (false, e.to_string()),
        };
        checks.push(CheckResult {
            name: "eq41".into(),
            pass,
            detail,
        });
    }
    if wants("nonvanishing") {
        let (pass, detail) = match verify_nonvanishing(&tm) {
            Ok(true) => (true, "all nonzero level elements have finite valuation".to_string()),
            Ok(false) => (false, "a nonzero level element vanishes".to_string()),
            Err(e) => (false, e.to_string()),
        };
        checks.push(CheckResult {
            name: "nonvanishing".into(),
            pass,
            detail,
        });
    }
    let verdict = if checks.iter().all(|c| c.pass) {
        "pass"
    } else {
        "fail"
    };
    Ok(IdentityReport {
        params: CertParams {
            q: q_field.order() as u64,
            n,
            h,
            m,
        },
        assignment: spec.label.clone(),
        checks,
        verdict: verdict.to_string(),
        precision,
    })
}

/// Root expansions of the level-m étale division polynomial at one
/// specialization, rendered in the final uniformizer.
pub fn root_expansions(
    q_field: &Arc<FiniteField>,
    n: usize,
    h: usize,
    m: usize,
    spec: &Specialization,
    precision: i64,
) -> Result<Vec<String>> {
    let stratum = build_stratum(q_field, n, h, &spec.assignment)?;
    let tm = torsion_with_retry(&stratum, m, precision)?;
    Ok(tm.roots().iter().map(|r| format!("{r}")).collect())
}

pub const CAP_Q: u64 = 5;
pub const CAP_N: usize = 4;
pub const CAP_M: usize = 3;

#[derive(Clone, Debug, Deserialize)]
pub struct ManifestJob {
    pub kind: String,
    pub q: u64,
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub h: usize,
    #[serde(default = "default_level")]
    pub m: usize,
    #[serde(default)]
    pub spec: Vec<String>,
    #[serde(default)]
    pub check: Vec<String>,
    pub precision: Option<i64>,
    pub expect: Option<String>,
}

fn default_level() -> usize {
    1
}

#[derive(Clone, Debug, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub jobs: Vec<ManifestJob>,
}

#[derive(Clone, Debug, Serialize)]
pub struct JobReport {
    pub index: usize,
    pub kind: String,
    pub outcome: String,
    pub expected: Option<String>,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub jobs: Vec<JobReport>,
    pub all_ok: bool,
}

/// Validate every job before running any; errors are listed exhaustively.
pub fn validate_manifest(manifest: &Manifest) -> std::result::Result<(), Vec<String>> {
    let mut errs = Vec::new();
    for (i, job) in manifest.jobs.iter().enumerate() {
        let mut fail = |msg: String| errs.push(format!("job {i}: {msg}"));
        if !["certify", "identities", "orders"].contains(&job.kind.as_str()) {
            fail(format!("unknown kind `{}`", job.kind));
            continue;
        }
        if job.q > CAP_Q {
            fail(format!("q = {} exceeds cap {CAP_Q}", job.q));
        }
        if job.n == 0 || job.n > CAP_N {
            fail(format!("n = {} outside 1..={CAP_N}", job.n));
        }
        if job.m == 0 || job.m > CAP_M {
            fail(format!("m = {} outside 1..={CAP_M}", job.m));
        }
        if job.h >= job.n.max(1) {
            fail(format!("h = {} must be below n = {}", job.h, job.n));
        }
        let field = match field_for_q(job.q) {
            Ok(f) => f,
            Err(e) => {
                fail(e.to_string());
                continue;
            }
        };
        if job.kind != "orders" && job.spec.is_empty() {
            fail("at least one spec is required".into());
        }
        for s in &job.spec {
            if let Err(e) = parse_spec(&field, job.n, job.h, s) {
                fail(format!("spec `{s}`: {e}"));
            }
        }
        for c in &job.check {
            if !CHECK_NAMES.contains(&c.as_str()) {
                fail(format!("unknown check `{c}`"));
            }
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

/// Run a validated manifest. Exit semantics: all jobs matching their
/// expected outcomes -> 0; any mismatch -> 2; any job error -> 1.
pub fn run_suite(manifest: &Manifest) -> Result<(SuiteReport, i32)> {
    let mut jobs = Vec::new();
    let mut exit = 0i32;
    for (index, job) in manifest.jobs.iter().enumerate() {
        let field = field_for_q(job.q)?;
        let precision = job.precision.unwrap_or(64);
        let outcome: Result<String> = match job.kind.as_str() {
            "certify" => {
                let specs: Vec<Specialization> = job
                    .spec
                    .iter()
                    .map(|s| parse_spec(&field, job.n, job.h, s))
                    .collect::<Result<_>>()?;
                let opts = CertifyOptions {
                    precision,
                    ..CertifyOptions::default()
                };
                certify(&field, job.n, job.h, job.m, &specs, &opts).map(|c| c.verdict)
            }
            "identities" => {
                let mut verdict = "pass".to_string();
                for s in &job.spec {
                    let spec = parse_spec(&field, job.n, job.h, s)?;
                    let rep =
                        run_identities(&field, job.n, job.h, job.m, &spec, &job.check, precision)?;
                    if !rep.all_pass() {
                        verdict = "fail".to_string();
                    }
                }
                Ok(verdict)
            }
            "orders" => gl_order(job.n - job.h, job.m, job.q).map(|o| o.to_string()),
            other => Err(Error::Manifest(format!("unknown kind `{other}`"))),
        };
        match outcome {
            Ok(out) => {
                let expected = job.expect.clone();
                let default_expect = match job.kind.as_str() {
                    "certify" => Some("surjective"),
                    "identities" => Some("pass"),
                    _ => None,
                };
                let want = expected
                    .as_deref()
                    .or(default_expect)
                    .map(|s| s.to_string());
                let ok = want.as_deref().map(|w| w == out).unwrap_or(true);
                if !ok && exit == 0 {
                    exit = 2;
                }
                jobs.push(JobReport {
                    index,
                    kind: job.kind.clone(),
                    outcome: out,
                    expected: want,
                    ok,
                });
            }
            Err(e) => {
                exit = 1;
                jobs.push(JobReport {
                    index,
                    kind: job.kind.clone(),
                    outcome: format!("error: {e}"),
                    expected: job.expect.clone(),
                    ok: false,
                });
            }
        }
    }
    let all_ok = jobs.iter().all(|j| j.ok);
    Ok((SuiteReport { jobs, all_ok }, exit))
}

/// Certificate runner shared by the CLI and the C ABI.
pub fn run_certify(
    q: u64,
    n: usize,
    h: usize,
    m: usize,
    spec_texts: &[String],
    precision: i64,
) -> Result<Certificate> {
    let field = field_for_q(q)?;
    let specs: Vec<Specialization> = spec_texts
        .iter()
        .map(|s| parse_spec(&field, n, h, s))
        .collect::<Result<_>>()?;
    let opts = CertifyOptions {
        precision,
        ..CertifyOptions::default()
    };
    certify(&field, n, h, m, &specs, &opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_grammar() {
        let f3 = field_for_q(3).unwrap();
        let s = parse_series(&f3, "2*t^2").unwrap();
        assert_eq!(format!("{s}"), "2*t^2");
        let s = parse_series(&f3, "t + 2*t^3").unwrap();
        assert_eq!(format!("{s}"), "t + 2*t^3");
        assert!(parse_series(&f3, "t^0").is_err());
        assert!(parse_series(&f3, "1").is_err());
        assert!(parse_series(&f3, "t^-1").is_err());
    }

    #[test]
    fn spec_grammar() {
        let f2 = field_for_q(2).unwrap();
        let s = parse_spec(&f2, 2, 0, "u0=t,u1=t^2").unwrap();
        assert_eq!(s.assignment.len(), 2);
        assert!(parse_spec(&f2, 2, 0, "u0=t").is_err());
        assert!(parse_spec(&f2, 2, 1, "u0=t,u1=t").is_err());
        assert!(parse_spec(&f2, 2, 1, "u1=t,u1=t").is_err());
    }

    #[test]
    fn prime_power_fields() {
        assert_eq!(field_for_q(4).unwrap().order(), 4);
        assert_eq!(field_for_q(5).unwrap().order(), 5);
        assert!(field_for_q(6).is_err());
        assert!(field_for_q(1).is_err());
    }

    #[test]
    fn identity_report_flagship() {
        let f2 = field_for_q(2).unwrap();
        let spec = parse_spec(&f2, 2, 0, "u0=t,u1=t").unwrap();
        let rep = run_identities(&f2, 2, 0, 1, &spec, &[], 64).unwrap();
        assert!(rep.all_pass());
        assert_eq!(rep.checks.len(), 3);
    }

    #[test]
    fn suite_round_trip() {
        let text = r#"{"jobs":[
            {"kind":"certify","q":3,"n":2,"h":1,"m":1,"spec":["u1=t"]},
            {"kind":"certify","q":3,"n":2,"h":1,"m":1,"spec":["u1=2*t^2"],"expect":"inconclusive"},
            {"kind":"orders","q":2,"n":2,"h":0,"m":1,"expect":"6"}
        ]}"#;
        let manifest: Manifest = serde_json::from_str(text).unwrap();
        validate_manifest(&manifest).unwrap();
        let (report, exit) = run_suite(&manifest).unwrap();
        assert!(report.all_ok, "{report:?}");
        assert_eq!(exit, 0);
    }

    #[test]
    fn suite_expectation_mismatch() {
        let text = r#"{"jobs":[
            {"kind":"certify","q":3,"n":2,"h":1,"m":1,"spec":["u1=2*t^2"],"expect":"surjective"}
        ]}"#;
        let manifest: Manifest = serde_json::from_str(text).unwrap();
        let (report, exit) = run_suite(&manifest).unwrap();
        assert!(!report.all_ok);
        assert_eq!(exit, 2);
    }

    #[test]
    fn suite_empty_manifest() {
        let manifest: Manifest = serde_json::from_str("{}").unwrap();
        validate_manifest(&manifest).unwrap();
        let (report, exit) = run_suite(&manifest).unwrap();
        assert!(report.jobs.is_empty());
        assert_eq!(exit, 0);
    }

    #[test]
    fn manifest_validation_lists_all_errors() {
        let text = r#"{"jobs":[
            {"kind":"mystery","q":2,"n":2},
            {"kind":"certify","q":6,"n":9,"m":7,"spec":["u0=bogus"]}
        ]}"#;
        let manifest: Manifest = serde_json::from_str(text).unwrap();
        let errs = validate_manifest(&manifest).unwrap_err();
        assert!(errs.len() >= 4, "{errs:?}");
    }
}
