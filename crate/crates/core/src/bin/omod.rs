//! Command-line driver: surjectivity certificates, identity suites, group
//! orders, and manifest-driven batches.
//!
//! Exit codes: 0 pass/surjective, 2 inconclusive or expectation mismatch,
//! 1 operational error, 64 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use omodule::report::{
    field_for_q, parse_spec, root_expansions, run_certify, run_identities, run_suite,
    validate_manifest, Manifest,
};
use omodule::monodromy::gl_order;

#[derive(Parser)]
#[command(name = "omod", version, about = "formal o-module torsion and monodromy certificates")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Certify surjectivity of the level-m monodromy action from
    /// specialization evidence.
    Certify(CertifyArgs),
    /// Run the torsion/level-structure identity checks.
    Identities(IdentitiesArgs),
    /// Print the order of GL_{n-h}(o/(w^m)).
    Orders(OrdersArgs),
    /// Run a manifest of jobs and aggregate the outcomes.
    Suite(SuiteArgs),
}

#[derive(Args)]
struct ParamArgs {
    /// Residue field size (a prime power).
    #[arg(long)]
    q: u64,
    /// Height of the formal module.
    #[arg(long)]
    n: usize,
    /// Newton stratum height.
    #[arg(long, default_value_t = 0)]
    h: usize,
    /// Torsion level.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Working precision in uniformizer places.
    #[arg(long, default_value_t = 64)]
    precision: i64,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Specialization assignment, e.g. "u0=t,u1=t^2" (repeatable).
    #[arg(long = "spec", required = true)]
    spec: Vec<String>,
    /// Write the certificate JSON to this path.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Print root expansions per specialization.
    #[arg(long)]
    emit_roots: bool,
}

#[derive(Args)]
struct IdentitiesArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Specialization assignment (repeatable).
    #[arg(long = "spec", required = true)]
    spec: Vec<String>,
    /// Check to run: eq31, eq41, or nonvanishing (repeatable; default all
    /// applicable).
    #[arg(long = "check")]
    check: Vec<String>,
    /// Write the report JSON to this path.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Print root expansions per specialization.
    #[arg(long)]
    emit_roots: bool,
}

#[derive(Args)]
struct OrdersArgs {
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct SuiteArgs {
    /// Manifest path.
    manifest: PathBuf,
    /// Write the aggregate report JSON to this path.
    #[arg(long)]
    json: Option<PathBuf>,
}

const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_ERROR: u8 = 1;
const EXIT_USAGE: u8 = 64;

fn write_json<T: serde::Serialize>(path: &Option<PathBuf>, value: &T) -> omodule::Result<()> {
    if let Some(path) = path {
        let mut text = serde_json::to_string_pretty(value).expect("report serializes");
        text.push('\n');
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn cmd_certify(args: &CertifyArgs) -> Result<u8, (u8, String)> {
    let p = &args.params;
    let cert = run_certify(p.q, p.n, p.h, p.m, &args.spec, p.precision).map_err(classify)?;
    println!(
        "certificate: q={} n={} h={} m={} group_order={}",
        cert.params.q, cert.params.n, cert.params.h, cert.params.m, cert.group_order
    );
    for s in &cert.specializations {
        println!(
            "  spec {} -> geometric degree {}",
            s.assignment, s.geometric_degree
        );
    }
    println!("lcm of degrees: {}", cert.lcm);
    println!("verdict: {}", cert.verdict);
    if args.emit_roots {
        emit_roots(p, &args.spec)?;
    }
    write_json(&args.json, &cert).map_err(classify)?;
    Ok(if cert.is_surjective() {
        0
    } else {
        EXIT_INCONCLUSIVE
    })
}

fn cmd_identities(args: &IdentitiesArgs) -> Result<u8, (u8, String)> {
    let p = &args.params;
    let field = field_for_q(p.q).map_err(usage)?;
    let mut reports = Vec::new();
    let mut all_pass = true;
    for text in &args.spec {
        let spec = parse_spec(&field, p.n, p.h, text).map_err(usage)?;
        let rep = run_identities(&field, p.n, p.h, p.m, &spec, &args.check, p.precision)
            .map_err(classify)?;
        for c in &rep.checks {
            println!(
                "{} [{}]: {} ({})",
                c.name,
                rep.assignment,
                if c.pass { "pass" } else { "FAIL" },
                c.detail
            );
        }
        all_pass &= rep.all_pass();
        reports.push(rep);
    }
    if args.emit_roots {
        emit_roots(p, &args.spec)?;
    }
    write_json(&args.json, &reports).map_err(classify)?;
    Ok(if all_pass { 0 } else { EXIT_INCONCLUSIVE })
}

fn emit_roots(p: &ParamArgs, specs: &[String]) -> Result<(), (u8, String)> {
    let field = field_for_q(p.q).map_err(usage)?;
    for text in specs {
        let spec = parse_spec(&field, p.n, p.h, text).map_err(usage)?;
        let roots =
            root_expansions(&field, p.n, p.h, p.m, &spec, p.precision).map_err(classify)?;
        println!("roots [{text}]:");
        for r in roots {
            println!("  {r}");
        }
    }
    Ok(())
}

fn cmd_orders(args: &OrdersArgs) -> Result<u8, (u8, String)> {
    let p = &args.params;
    if p.h >= p.n {
        return Err((EXIT_USAGE, format!("h = {} must be below n = {}", p.h, p.n)));
    }
    let order = gl_order(p.n - p.h, p.m, p.q).map_err(classify)?;
    println!("{order}");
    Ok(0)
}

fn cmd_suite(args: &SuiteArgs) -> Result<u8, (u8, String)> {
    let text = std::fs::read_to_string(&args.manifest)
        .map_err(|e| (EXIT_ERROR, format!("cannot read manifest: {e}")))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| (EXIT_USAGE, format!("manifest does not parse: {e}")))?;
    if let Err(errs) = validate_manifest(&manifest) {
        return Err((EXIT_USAGE, errs.join("\n")));
    }
    let (report, exit) = run_suite(&manifest).map_err(classify)?;
    for job in &report.jobs {
        match &job.expected {
            Some(want) if !job.ok => println!(
                "job {} ({}): {} -- expected {}",
                job.index, job.kind, job.outcome, want
            ),
            _ => println!("job {} ({}): {}", job.index, job.kind, job.outcome),
        }
    }
    write_json(&args.json, &report).map_err(classify)?;
    Ok(exit as u8)
}

/// Grammar and flag-value problems are usage errors; everything else is
/// operational.
fn classify(e: omodule::Error) -> (u8, String) {
    match e {
        omodule::Error::Parse(_) => (EXIT_USAGE, e.to_string()),
        _ => (EXIT_ERROR, e.to_string()),
    }
}

fn usage(e: omodule::Error) -> (u8, String) {
    (EXIT_USAGE, e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let result = match &cli.cmd {
        Cmd::Certify(args) => cmd_certify(args),
        Cmd::Identities(args) => cmd_identities(args),
        Cmd::Orders(args) => cmd_orders(args),
        Cmd::Suite(args) => cmd_suite(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
