//! Command-line interface: curve scans, single-curve queries, local
//! deformation lengths, and congruence-algebra reports.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use num_rational::BigRational;

use wdl::congruence::{
    algebra_congruence_length, cotangent_length, module_congruence_length, parse_algebra_json,
    parse_module_json, wiles_defect, wiles_defect_module, OAlgebra, RModule,
};
use wdl::elliptic::reduction_at;
use wdl::error::WdlError;
use wdl::localdef::{
    defect_decomposition, relative_length_closed_form, relative_length_lattice, DeformationPoint,
    RingPair,
};
use wdl::scan::{
    ingest_path, scan, write_report, write_summary, CurveFormat, CurveRecord, ReportFormat,
    ScanOptions,
};
use wdl::tamedefect::{lowered_conductor, nq_via_log, tame_invariants, DEFAULT_CERT_BOUND};

#[derive(Parser)]
#[command(
    name = "wdl",
    about = "Wiles defects of congruence modules: exact lengths, local deformation lattices, and semistable curve scans"
)]
struct Cli {
    /// Worker count for parallel sections (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scan a curve table for tame invariants and defect contributions.
    Scan {
        /// Curve database path (defaults to $WDL_CURVE_DB).
        #[arg(long)]
        curves: Option<PathBuf>,
        #[arg(long, default_value = "cremona")]
        format: String,
        #[arg(long, default_value_t = 1)]
        min_cond: u64,
        #[arg(long, default_value_t = u64::MAX)]
        max_cond: u64,
        /// Comma-separated odd primes p.
        #[arg(long, default_value = "3,5,7,11")]
        primes: String,
        /// Keep only rows with n_q > 0.
        #[arg(long)]
        nonzero_only: bool,
        /// Emit the per-p counts table instead of rows.
        #[arg(long)]
        summarize: bool,
        /// Skip malformed lines instead of failing the run.
        #[arg(long)]
        skip_bad: bool,
        /// Minimum number of distinct primes of N(ρ̄) (0 disables).
        #[arg(long, default_value_t = 2)]
        min_lowered_primes: usize,
        /// Search bound for irreducibility certificates.
        #[arg(long, default_value_t = DEFAULT_CERT_BOUND)]
        cert_bound: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        emit: String,
    },
    /// Report the invariants of one curve by label.
    Curve {
        #[arg(long)]
        curves: Option<PathBuf>,
        #[arg(long, default_value = "cremona")]
        format: String,
        #[arg(long)]
        label: String,
        /// The odd prime p.
        #[arg(long)]
        prime: u64,
        /// Restrict to one multiplicative prime q (default: all bad primes).
        #[arg(long)]
        q: Option<u64>,
    },
    /// Relative cotangent lengths at a Steinberg augmentation (q, p, s, t).
    Localdef {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        s: i64,
        #[arg(long)]
        t: i64,
        #[arg(long)]
        p: u64,
        /// closed | lattice | both
        #[arg(long, default_value = "both")]
        route: String,
    },
    /// Cotangent/congruence lengths and defect of a JSON-presented algebra.
    Algebra {
        /// Algebra JSON: { "p": .., "r": .., "generators": [[..]] }.
        #[arg(long)]
        input: PathBuf,
        /// Optional module JSON: { "rank": .., "actions": [[[..]]] }.
        #[arg(long)]
        module: Option<PathBuf>,
        /// Augmentation index (0-based coordinate).
        #[arg(long)]
        aug: usize,
    },
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn curves_path(arg: Option<PathBuf>) -> Result<PathBuf, WdlError> {
    if let Some(p) = arg {
        return Ok(p);
    }
    match std::env::var_os("WDL_CURVE_DB") {
        Some(v) => Ok(PathBuf::from(v)),
        None => Err(WdlError::InvalidInput(
            "no --curves path given and WDL_CURVE_DB is unset".into(),
        )),
    }
}

fn load_records(
    curves: Option<PathBuf>,
    format: &str,
    skip_bad: bool,
) -> Result<Vec<CurveRecord>, WdlError> {
    let path = curves_path(curves)?;
    let format: CurveFormat = format.parse()?;
    let report = ingest_path(&path, format)?;
    for (line, msg) in &report.errors {
        eprintln!("{}:{line}: {msg}", path.display());
    }
    report.into_records(skip_bad)
}

fn run() -> Result<(), WdlError> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Scan {
            curves,
            format,
            min_cond,
            max_cond,
            primes,
            nonzero_only,
            summarize,
            skip_bad,
            min_lowered_primes,
            cert_bound,
            out,
            emit,
        } => {
            let records = load_records(curves, &format, skip_bad)?;
            let primes = parse_primes(&primes)?;
            let opts = ScanOptions {
                min_cond,
                max_cond,
                primes,
                nonzero_only,
                min_lowered_prime_divisors: min_lowered_primes,
                cert_bound,
                jobs: cli.jobs,
            };
            let outcome = scan(&records, &opts)?;
            for e in &outcome.exclusions {
                match e.p {
                    Some(p) => eprintln!("excluded {} at p={p}: {}", e.label, e.reason),
                    None => eprintln!("skipped {}: {}", e.label, e.reason),
                }
            }
            let mut file = std::fs::File::create(&out)?;
            if summarize {
                write_summary(&outcome.rows, &outcome.exclusions, &mut file)?;
            } else {
                let fmt: ReportFormat = emit.parse()?;
                write_report(&outcome.rows, fmt, &mut file)?;
            }
            eprintln!("{} row(s) written to {}", outcome.rows.len(), out.display());
            Ok(())
        }
        Cmd::Curve { curves, format, label, prime, q } => {
            let records = load_records(curves, &format, true)?;
            let record = records
                .iter()
                .find(|r| r.label == label)
                .ok_or_else(|| WdlError::InvalidInput(format!("label {label} not found")))?;
            curve_report(record, prime, q)
        }
        Cmd::Localdef { q, s, t, p, route } => {
            let pt = DeformationPoint::new(q, p, s, t)?;
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            writeln!(w, "point q={q} p={p} s={s} t={t}: m={} n={}", pt.m(), pt.n())?;
            for pair in RingPair::ALL {
                let name = match pair {
                    RingPair::FramedUnipotent => "framed/unipotent",
                    RingPair::UnipotentSteinberg => "unipotent/steinberg",
                    RingPair::FramedSteinberg => "framed/steinberg",
                };
                match route.as_str() {
                    "closed" => {
                        writeln!(w, "{name}: closed-form {}", relative_length_closed_form(&pt, pair)?)?
                    }
                    "lattice" => {
                        writeln!(w, "{name}: lattice {}", relative_length_lattice(&pt, pair)?)?
                    }
                    "both" => {
                        let c = relative_length_closed_form(&pt, pair)?;
                        let l = relative_length_lattice(&pt, pair)?;
                        let mark = if c == l { "agree" } else { "MISMATCH" };
                        writeln!(w, "{name}: closed-form {c}, lattice {l} ({mark})")?;
                    }
                    other => {
                        return Err(WdlError::InvalidInput(format!("unknown route {other:?}")))
                    }
                }
            }
            let dec = defect_decomposition(&[pt]);
            writeln!(
                w,
                "cotangent change {}, eta change {}, defect {}",
                dec.cotangent_change, dec.eta_change, dec.defect
            )?;
            Ok(())
        }
        Cmd::Algebra { input, module, aug } => {
            let text = std::fs::read_to_string(&input)?;
            let pres = parse_algebra_json(&text)?;
            let algebra = OAlgebra::from_presentation(&pres)?;
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            let phi = cotangent_length(&algebra, aug)?;
            let eta = algebra_congruence_length(&algebra, aug)?;
            writeln!(w, "cotangent length: {phi}")?;
            writeln!(w, "congruence length: {eta}")?;
            let rep = wiles_defect(&algebra, aug)?;
            writeln!(w, "wiles defect (R): {}", format_rat(&rep.defect))?;
            if let Some(mpath) = module {
                let mtext = std::fs::read_to_string(&mpath)?;
                let mpres = parse_module_json(&mtext)?;
                let m = RModule::from_presentation(&algebra, &mpres)?;
                let psi = module_congruence_length(&algebra, &m, aug)?;
                let rep = wiles_defect_module(&algebra, &m, aug)?;
                writeln!(w, "module congruence length: {psi}")?;
                writeln!(w, "module lambda-rank: {}", rep.lambda_rank)?;
                writeln!(w, "module wiles defect: {}", format_rat(&rep.defect))?;
                writeln!(
                    w,
                    "generic ranks: {:?} (rank hypothesis {})",
                    rep.generic_ranks,
                    if rep.rank_hypothesis_ok {
                        "holds"
                    } else {
                        "VIOLATED - defect sign not guaranteed"
                    }
                )?;
            }
            Ok(())
        }
    }
}

fn parse_primes(s: &str) -> Result<Vec<u64>, WdlError> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<u64>()
                .map_err(|_| WdlError::InvalidInput(format!("bad prime {part:?}")))
        })
        .collect()
}

fn format_rat(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn curve_report(record: &CurveRecord, p: u64, q: Option<u64>) -> Result<(), WdlError> {
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    let curve = record.curve();
    let min = curve.minimal_model()?;
    let inv = min.invariants()?;
    writeln!(w, "label: {}", record.label)?;
    writeln!(w, "conductor: {}", record.conductor)?;
    writeln!(
        w,
        "minimal model: [{}, {}, {}, {}, {}]",
        min.a1, min.a2, min.a3, min.a4, min.a6
    )?;
    writeln!(w, "minimal discriminant: {}", inv.disc)?;
    writeln!(w, "j-invariant: {}", inv.j)?;
    let bad: Vec<u64> = match q {
        Some(q) => vec![q],
        None => wdl::arith::factor_u64(record.conductor)
            .into_iter()
            .map(|(q, _)| q)
            .collect(),
    };
    match lowered_conductor(&min, p, DEFAULT_CERT_BOUND) {
        Ok(lc) => writeln!(
            w,
            "level lowering at p={p}: N(rhobar) = {}, dropped {:?}, {:?}",
            lc.n_lowered, lc.dropped, lc.certificate
        )?,
        Err(e) => writeln!(w, "level lowering at p={p}: unavailable ({e})")?,
    }
    for q in bad {
        let red = reduction_at(&min, q)?;
        writeln!(w, "q={q}: reduction {:?}", red.kind)?;
        if !red.kind.is_multiplicative() {
            continue;
        }
        match tame_invariants(&min, q, p) {
            Ok(ti) => {
                writeln!(
                    w,
                    "  vqJ={} t_q={} m_q={} u_q={} k_q={} n_q={} unit_part={} split={}",
                    -(ti.vq_tate as i64),
                    ti.t_q,
                    ti.m_q,
                    ti.u_q,
                    ti.k_q,
                    ti.n_q,
                    ti.unit_part,
                    ti.split
                )?;
                writeln!(
                    w,
                    "  n_q via log route: {} ; defect contribution 2n_q = {}",
                    nq_via_log(&ti)?,
                    2 * ti.n_q
                )?;
            }
            Err(e) => writeln!(w, "  tame invariants unavailable: {e}")?,
        }
    }
    Ok(())
}
