//! Acceptance gate: end-to-end certificates, identity suites, group-order
//! oracles, seeded property suites, and precision robustness. Each test
//! prints one pass line on success.

use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use omodule::finite_field::{make_field, FFElement, FiniteField};
use omodule::formal_module::{build_model, OElement};
use omodule::laurent::{LaurentSeries, Valuation};
use omodule::local_tower::{newton_polygon, splitting_tower, SplittingData};
use omodule::monodromy::{
    all_invertible, closure_order, gl_order, tame_monodromy_matrix, MatrixModM,
};
use omodule::report::{
    field_for_q, parse_spec, run_certify, run_identities, torsion_with_retry,
};
use omodule::spoly;

fn timed<T>(bound: Duration, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    assert!(took < bound, "took {took:?}, bound {bound:?}");
    out
}

#[test]
fn certificate_rank2_level1() {
    let cert = timed(Duration::from_secs(5), || {
        run_certify(
            2,
            2,
            0,
            1,
            &["u0=t,u1=t".to_string(), "u0=t^2,u1=t".to_string()],
            64,
        )
        .unwrap()
    });
    let degrees: Vec<u64> = cert
        .specializations
        .iter()
        .map(|s| s.geometric_degree)
        .collect();
    assert_eq!(degrees, vec![3, 2]);
    assert_eq!(cert.lcm, 6);
    assert_eq!(cert.group_order, gl_order(2, 1, 2).unwrap());
    assert!(cert.is_surjective());
    println!("pass: certificate q=2 n=2 h=0 m=1 (degrees 3,2; lcm 6; surjective)");
}

#[test]
fn certificate_rank1_q3() {
    let cert = timed(Duration::from_secs(1), || {
        run_certify(3, 2, 1, 1, &["u1=t".to_string()], 64).unwrap()
    });
    assert_eq!(cert.specializations[0].geometric_degree, 2);
    assert_eq!(cert.group_order, gl_order(1, 1, 3).unwrap());
    assert!(cert.is_surjective());
    println!("pass: certificate q=3 n=2 h=1 m=1 (degree 2; surjective)");
}

#[test]
fn certificate_wild_level2() {
    let cert = timed(Duration::from_secs(5), || {
        run_certify(2, 2, 1, 2, &["u1=t".to_string()], 64).unwrap()
    });
    assert_eq!(cert.specializations[0].geometric_degree, 2);
    assert_eq!(cert.group_order, gl_order(1, 2, 2).unwrap());
    assert!(cert.is_surjective());
    // the tower certifies a wild (characteristic-dividing) ramified step
    assert!(cert.specializations[0]
        .tower
        .iter()
        .any(|seg| seg.kind == "certified"));
    println!("pass: certificate q=2 n=2 h=1 m=2 (wild step; degree 2; surjective)");
}

#[test]
fn certificate_height3_rank2() {
    let cert = timed(Duration::from_secs(10), || {
        run_certify(
            2,
            3,
            1,
            1,
            &["u1=t,u2=t".to_string(), "u1=t^2,u2=t".to_string()],
            64,
        )
        .unwrap()
    });
    assert_eq!(cert.lcm, 6);
    assert_eq!(cert.group_order, gl_order(2, 1, 2).unwrap());
    assert!(cert.is_surjective());
    println!("pass: certificate q=2 n=3 h=1 m=1 (lcm 6; surjective)");
}

#[test]
fn negative_control_inconclusive_exit() {
    let cert = run_certify(3, 2, 1, 1, &["u1=2*t^2".to_string()], 64).unwrap();
    assert_eq!(cert.specializations[0].geometric_degree, 1);
    assert_eq!(cert.verdict, "inconclusive");
    let status = Command::new(env!("CARGO_BIN_EXE_omod"))
        .args([
            "certify", "--q", "3", "--n", "2", "--h", "1", "--m", "1", "--spec", "u1=2*t^2",
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    println!("pass: negative control u1=2t^2 (degree 1; inconclusive; exit 2)");
}

#[test]
fn identity_suite() {
    // specialized product identity with unit 1 on the open h=0 layers
    for (q, n, spec) in [
        (2u64, 2usize, "u0=t,u1=t"),
        (2, 2, "u0=t^2,u1=t"),
        (3, 1, "u0=t"),
    ] {
        let field = field_for_q(q).unwrap();
        let s = parse_spec(&field, n, 0, spec).unwrap();
        let rep =
            run_identities(&field, n, 0, 1, &s, &["eq31".to_string()], 64).unwrap();
        assert!(rep.all_pass(), "eq31 failed at q={q} n={n} {spec}");
    }
    // stratum reduction identity: unit constant equals u_h^{q^h - 1}
    for (q, expect_exp) in [(2u64, 1i64), (3, 2)] {
        let field = field_for_q(q).unwrap();
        let s = parse_spec(&field, 2, 1, "u1=t").unwrap();
        let rep =
            run_identities(&field, 2, 1, 1, &s, &["eq41".to_string()], 64).unwrap();
        assert!(rep.all_pass(), "eq41 failed at q={q}");
        assert!(
            rep.checks[0].detail.contains(&format!(
                "unit constant {}",
                LaurentSeries::monomial(field.one(), expect_exp)
            )),
            "unexpected unit constant at q={q}: {}",
            rep.checks[0].detail
        );
    }
    // nonvanishing on every torsion module above
    for (q, n, h, m, spec) in [
        (2u64, 2usize, 0usize, 1usize, "u0=t,u1=t"),
        (2, 2, 0, 1, "u0=t^2,u1=t"),
        (3, 2, 1, 1, "u1=t"),
        (2, 2, 1, 2, "u1=t"),
    ] {
        let field = field_for_q(q).unwrap();
        let s = parse_spec(&field, n, h, spec).unwrap();
        let rep =
            run_identities(&field, n, h, m, &s, &["nonvanishing".to_string()], 64).unwrap();
        assert!(rep.all_pass(), "nonvanishing failed at q={q} h={h} m={m}");
    }
    println!("pass: identity suite (unit-1 product, stratum reduction, nonvanishing)");
}

#[test]
fn order_oracles() {
    // closed form vs brute-force enumeration for every small group
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
                assert_eq!(count, order, "k={k} m={m} q={q}");
            }
        }
    }
    // documented generating sets reach the full orders 6, 48, 96
    let f2 = make_field(2, 1).unwrap();
    let gl2f2 = vec![
        MatrixModM::from_ints(&f2, 2, 1, &[1, 1, 0, 1]),
        MatrixModM::from_ints(&f2, 2, 1, &[1, 0, 1, 1]),
    ];
    assert_eq!(closure_order(&gl2f2, 100).unwrap(), 6);
    let f3 = make_field(3, 1).unwrap();
    let gl2f3 = vec![
        MatrixModM::from_ints(&f3, 2, 1, &[1, 1, 0, 1]),
        MatrixModM::from_ints(&f3, 2, 1, &[2, 0, 0, 1]),
        MatrixModM::from_ints(&f3, 2, 1, &[0, 1, 1, 0]),
    ];
    assert_eq!(closure_order(&gl2f3, 100).unwrap(), 48);
    let one = OElement::one(&f2, 2);
    let zero = OElement::zero(&f2, 2);
    let w = OElement::new(&f2, vec![f2.zero(), f2.one()]);
    let gl2w = vec![
        MatrixModM::new(&f2, 2, 2, vec![one.clone(), one.clone(), zero.clone(), one.clone()]),
        MatrixModM::new(&f2, 2, 2, vec![one.clone(), w.clone(), zero.clone(), one.clone()]),
        MatrixModM::new(&f2, 2, 2, vec![one.clone(), zero.clone(), one.clone(), one.clone()]),
        MatrixModM::new(&f2, 2, 2, vec![one.clone(), zero.clone(), w.clone(), one.clone()]),
        MatrixModM::new(&f2, 2, 2, vec![one.add(&w), zero.clone(), zero.clone(), one.clone()]),
    ];
    assert_eq!(closure_order(&gl2w, 1000).unwrap(), 96);
    println!("pass: group-order oracles (enumeration <= 200; closures 6, 48, 96)");
}

/// The acceptance towers: (q, n, h, m, assignment text).
const TOWERS: [(u64, usize, usize, usize, &str); 6] = [
    (2, 2, 0, 1, "u0=t,u1=t"),
    (2, 2, 0, 1, "u0=t^2,u1=t"),
    (3, 2, 1, 1, "u1=t"),
    (2, 2, 1, 2, "u1=t"),
    (2, 3, 1, 1, "u1=t,u2=t"),
    (2, 3, 1, 1, "u1=t^2,u2=t"),
];

fn tower_inputs(
    q: u64,
    n: usize,
    h: usize,
    m: usize,
    spec: &str,
    precision: i64,
) -> (Arc<FiniteField>, Vec<LaurentSeries>, SplittingData) {
    let field = field_for_q(q).unwrap();
    let s = parse_spec(&field, n, h, spec).unwrap();
    let stratum = build_model(field.p(), &field, n)
        .unwrap()
        .reduce_to_stratum(h)
        .unwrap()
        .specialize(&s.assignment)
        .unwrap();
    let dense = stratum.etale_division(m).to_dense(&field);
    let data = splitting_tower(&dense, precision).unwrap();
    (field, dense, data)
}

fn remap_to_final(
    dense: &[LaurentSeries],
    data: &SplittingData,
) -> Vec<LaurentSeries> {
    let afield = data.ambient.field().clone();
    let texp = data.base_expansion().unwrap();
    let fallback = data.final_precision.max(4) as usize;
    dense
        .iter()
        .map(|c| {
            c.map_coeffs(&afield, |x| data.ambient.to_ambient(x))
                .unwrap()
                .substitute(&texp, fallback)
                .unwrap()
        })
        .collect()
}

#[test]
fn property_suites() {
    // o-action is a ring homomorphism on >= 100 seeded samples
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut samples = 0;
    for (p, k, n) in [(2u64, 1usize, 2usize), (2, 1, 3), (3, 1, 2), (3, 1, 3)] {
        let fq = make_field(p, k).unwrap();
        let model = build_model(p, &fq, n).unwrap();
        for _ in 0..30 {
            let m = rng.gen_range(1..=3usize);
            let a: Vec<FFElement> = (0..m)
                .map(|_| fq.element_at(rng.gen_range(0..fq.order())))
                .collect();
            let b: Vec<FFElement> = (0..m)
                .map(|_| fq.element_at(rng.gen_range(0..fq.order())))
                .collect();
            let prod = OElement::new(&fq, a.clone()).mul_full(&OElement::new(&fq, b.clone()));
            let lhs = model.act(&prod).unwrap();
            let rhs = model.act(&a).unwrap().compose(&model.act(&b).unwrap());
            assert_eq!(lhs, rhs);
            samples += 1;
        }
    }
    assert!(samples >= 100);

    for (q, n, h, m, spec) in TOWERS {
        let (field, dense, data) = tower_inputs(q, n, h, m, spec, 64);
        let afield = data.ambient.field().clone();

        // reconstruction: the monic product over the roots returns f
        let remapped = remap_to_final(&dense, &data);
        let mut prod = vec![LaurentSeries::one(&afield)];
        for r in &data.roots {
            let lin = vec![r.neg(), LaurentSeries::one(&afield)];
            prod = spoly::mul(&prod, &lin, &afield);
        }
        assert_eq!(prod.len(), remapped.len());
        for (a, b) in prod.iter().zip(&remapped) {
            assert!(a.sub(b).is_zeroish(), "reconstruction fails at {spec}");
        }

        // root valuations over the base equal the Newton slopes
        let polygon = newton_polygon(&dense).unwrap();
        let mut expected: Vec<Option<Ratio<i64>>> = vec![None; polygon.zero_roots];
        for seg in &polygon.segments {
            for _ in 0..seg.length {
                expected.push(Some(-seg.slope));
            }
        }
        let mut got: Vec<Option<Ratio<i64>>> = data
            .roots
            .iter()
            .map(|r| match r.valuation() {
                Valuation::Exact(v) => Some(Ratio::new(v, data.e_total as i64)),
                _ => None,
            })
            .collect();
        expected.sort();
        got.sort();
        assert_eq!(got, expected, "valuations vs slopes at {spec}");

        // torsion count q^{m(n-h)}; connected multiplicity q^{mh}
        let k = n - h;
        assert_eq!(data.roots.len() as u64, q.pow((m * k) as u32));
        let stratum = build_model(field.p(), &field, n)
            .unwrap()
            .reduce_to_stratum(h)
            .unwrap()
            .specialize(&parse_spec(&field, n, h, spec).unwrap().assignment)
            .unwrap();
        assert_eq!(stratum.inseparable_degree(m), q.pow((m * h) as u32));
    }

    // tame substitution matrices have the ramification indices as orders
    for (q, n, h, spec, e) in [
        (2u64, 2usize, 0usize, "u0=t,u1=t", 3u64),
        (3, 2, 1, "u1=t", 2),
    ] {
        let field = field_for_q(q).unwrap();
        let s = parse_spec(&field, n, h, spec).unwrap();
        let stratum = build_model(field.p(), &field, n)
            .unwrap()
            .reduce_to_stratum(h)
            .unwrap()
            .specialize(&s.assignment)
            .unwrap();
        let tm = torsion_with_retry(&stratum, 1, 64).unwrap();
        let mat = tame_monodromy_matrix(&tm).unwrap();
        assert_eq!(closure_order(&[mat], 100).unwrap(), e);
    }
    println!("pass: property suites (hom law {samples} samples; reconstruction; slopes; counts; tame orders)");
}

#[test]
fn precision_robustness() {
    // identical verdicts and degrees at precisions 32 and 64
    let cases: [(u64, usize, usize, usize, Vec<&str>); 5] = [
        (2, 2, 0, 1, vec!["u0=t,u1=t", "u0=t^2,u1=t"]),
        (3, 2, 1, 1, vec!["u1=t"]),
        (2, 2, 1, 2, vec!["u1=t"]),
        (2, 3, 1, 1, vec!["u1=t,u2=t", "u1=t^2,u2=t"]),
        (3, 2, 1, 1, vec!["u1=2*t^2"]),
    ];
    for (q, n, h, m, specs) in &cases {
        let texts: Vec<String> = specs.iter().map(|s| s.to_string()).collect();
        let lo = run_certify(*q, *n, *h, *m, &texts, 32).unwrap();
        let hi = run_certify(*q, *n, *h, *m, &texts, 64).unwrap();
        assert_eq!(lo.verdict, hi.verdict, "verdict differs at q={q} h={h} m={m}");
        let dlo: Vec<u64> = lo.specializations.iter().map(|s| s.geometric_degree).collect();
        let dhi: Vec<u64> = hi.specializations.iter().map(|s| s.geometric_degree).collect();
        assert_eq!(dlo, dhi, "degrees differ at q={q} h={h} m={m}");
    }
    for (q, n, h, m, spec) in [
        (2u64, 2usize, 0usize, 1usize, "u0=t,u1=t"),
        (3, 2, 1, 1, "u1=t"),
        (2, 2, 1, 2, "u1=t"),
    ] {
        let field = field_for_q(q).unwrap();
        let s = parse_spec(&field, n, h, spec).unwrap();
        let lo = run_identities(&field, n, h, m, &s, &[], 32).unwrap();
        let hi = run_identities(&field, n, h, m, &s, &[], 64).unwrap();
        assert_eq!(lo.verdict, hi.verdict);
        assert!(hi.all_pass());
    }
    println!("pass: precision robustness (32 vs 64 agree on verdicts and degrees)");
}
