//! Curve-table ingestion and the defect scan over squarefree conductors.
//!
//! Two input formats:
//!
//! * `cremona`: whitespace-separated `N class num [a1,a2,a3,a4,a6] rank torsion`
//!   lines (the allcurves export format); the label is `N ++ class ++ num`
//!   and the stated conductor is cross-checked against radical(Δ_min) for
//!   semistable curves — a mismatch is a data error, never corrected.
//! * `simple`: `label a1 a2 a3 a4 a6` lines with the conductor recomputed
//!   from the minimal discriminant (semistable curves only).
//!
//! The scan visits each semistable curve of squarefree conductor in range
//! and each pair (q, p) with q | N, p | q−1, p ∤ N; curves whose mod-p
//! irreducibility certificate fails are excluded and counted separately.
//! Rows are sorted by (conductor, label, q, p), so reports are byte-stable
//! regardless of the worker count.

use std::io::Write;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::factor_u64;
use crate::elliptic::{
    irreducibility_certificate, reduction_at, IrreducibilityCertificate, WeierstrassCurve,
};
use crate::error::WdlError;
use crate::tamedefect::tame_invariants;

/// One ingested curve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveRecord {
    pub label: String,
    pub conductor: u64,
    pub a_invariants: [BigInt; 5],
}

impl CurveRecord {
    pub fn curve(&self) -> WeierstrassCurve {
        WeierstrassCurve::from_bigints(self.a_invariants.clone(), Some(self.label.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveFormat {
    Cremona,
    Simple,
}

impl std::str::FromStr for CurveFormat {
    type Err = WdlError;
    fn from_str(s: &str) -> Result<Self, WdlError> {
        match s {
            "cremona" => Ok(CurveFormat::Cremona),
            "simple" => Ok(CurveFormat::Simple),
            other => Err(WdlError::InvalidInput(format!("unknown format {other:?}"))),
        }
    }
}

/// Parse outcome: records plus (line number, message) for malformed lines.
#[derive(Debug, Default)]
pub struct IngestReport {
    pub records: Vec<CurveRecord>,
    pub errors: Vec<(usize, String)>,
}

impl IngestReport {
    /// A single malformed line fails the run unless `skip_bad`.
    pub fn into_records(self, skip_bad: bool) -> Result<Vec<CurveRecord>, WdlError> {
        if !skip_bad && !self.errors.is_empty() {
            let (line, msg) = &self.errors[0];
            return Err(WdlError::Parse(format!(
                "line {line}: {msg} ({} malformed line(s) total)",
                self.errors.len()
            )));
        }
        Ok(self.records)
    }
}

pub fn ingest_path(path: &Path, format: CurveFormat) -> Result<IngestReport, WdlError> {
    let content = std::fs::read_to_string(path)?;
    if content.trim().is_empty() {
        return Err(WdlError::Parse(format!("{}: empty file", path.display())));
    }
    Ok(ingest_str(&content, format))
}

pub fn ingest_str(content: &str, format: CurveFormat) -> IngestReport {
    let mut report = IngestReport::default();
    for (idx, raw) in content.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed = match format {
            CurveFormat::Cremona => parse_cremona_line(line),
            CurveFormat::Simple => parse_simple_line(line),
        };
        match parsed {
            Ok(rec) => report.records.push(rec),
            Err(e) => report.errors.push((line_no, e.to_string())),
        }
    }
    report
}

/// Parses `N class num [a1,a2,a3,a4,a6] rank torsion`. Interior spaces in
/// the bracket group are tolerated.
pub fn parse_cremona_line(line: &str) -> Result<CurveRecord, WdlError> {
    let open = line.find('[').ok_or_else(|| WdlError::Parse("missing '['".into()))?;
    let close = line.rfind(']').ok_or_else(|| WdlError::Parse("missing ']'".into()))?;
    if close < open {
        return Err(WdlError::Parse("']' precedes '['".into()));
    }
    let head: Vec<&str> = line[..open].split_whitespace().collect();
    let tail: Vec<&str> = line[close + 1..].split_whitespace().collect();
    if head.len() != 3 {
        return Err(WdlError::Parse(format!(
            "expected 'N class num' before the bracket group, found {} field(s)",
            head.len()
        )));
    }
    if tail.len() != 2 {
        return Err(WdlError::Parse(format!(
            "expected 'rank torsion' after the bracket group, found {} field(s)",
            tail.len()
        )));
    }
    let conductor: u64 = head[0]
        .parse()
        .map_err(|_| WdlError::Parse(format!("bad conductor {:?}", head[0])))?;
    if head[1].is_empty() || !head[1].chars().all(|c| c.is_ascii_lowercase()) {
        return Err(WdlError::Parse(format!("bad isogeny class {:?}", head[1])));
    }
    let num: u32 = head[2]
        .parse()
        .map_err(|_| WdlError::Parse(format!("bad curve number {:?}", head[2])))?;
    for t in &tail {
        let _: i64 = t
            .parse()
            .map_err(|_| WdlError::Parse(format!("bad rank/torsion field {t:?}")))?;
    }
    let a = parse_a_invariants(&line[open + 1..close])?;
    let label = format!("{conductor}{}{num}", head[1]);
    let record = CurveRecord { label, conductor, a_invariants: a };
    check_conductor(&record)?;
    Ok(record)
}

/// Parses `label a1 a2 a3 a4 a6`; the conductor is recomputed from the
/// minimal discriminant (requires the curve to be semistable).
pub fn parse_simple_line(line: &str) -> Result<CurveRecord, WdlError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 6 {
        return Err(WdlError::Parse(format!("expected 6 fields, found {}", fields.len())));
    }
    let mut a: Vec<BigInt> = Vec::with_capacity(5);
    for f in &fields[1..] {
        a.push(
            f.parse::<BigInt>()
                .map_err(|_| WdlError::Parse(format!("bad a-invariant {f:?}")))?,
        );
    }
    let a: [BigInt; 5] = a.try_into().unwrap();
    let curve = WeierstrassCurve::from_bigints(a.clone(), None);
    let conductor = semistable_conductor(&curve)?;
    Ok(CurveRecord { label: fields[0].to_string(), conductor, a_invariants: a })
}

fn parse_a_invariants(inner: &str) -> Result<[BigInt; 5], WdlError> {
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 5 {
        return Err(WdlError::Parse(format!(
            "expected 5 a-invariants, found {}",
            parts.len()
        )));
    }
    let mut a = Vec::with_capacity(5);
    for p in parts {
        a.push(
            p.parse::<BigInt>()
                .map_err(|_| WdlError::Parse(format!("bad a-invariant {p:?}")))?,
        );
    }
    Ok(a.try_into().unwrap())
}

/// radical(Δ_min) for a curve all of whose bad primes are multiplicative.
fn semistable_conductor(curve: &WeierstrassCurve) -> Result<u64, WdlError> {
    let min = curve.minimal_model()?;
    let inv = min.invariants()?;
    let mut n: u64 = 1;
    for (q, _) in factor_bigint(&inv.disc)? {
        let red = reduction_at(&min, q)?;
        if !red.kind.is_multiplicative() {
            return Err(WdlError::Parse(format!(
                "additive reduction at {q}; conductor not recomputable from the radical"
            )));
        }
        n = n
            .checked_mul(q)
            .ok_or_else(|| WdlError::InvalidInput("conductor overflows u64".into()))?;
    }
    Ok(n)
}

fn factor_bigint(x: &BigInt) -> Result<Vec<(u64, u64)>, WdlError> {
    let mut n = x.magnitude().clone();
    let mut out = Vec::new();
    let mut l: u64 = 2;
    while l < 1_000_000 && !n.is_one() {
        let lb = num_bigint::BigUint::from(l);
        if (&n % &lb).is_zero() {
            let mut e = 0u64;
            while (&n % &lb).is_zero() {
                n /= &lb;
                e += 1;
            }
            out.push((l, e));
        }
        l += if l == 2 { 1 } else { 2 };
    }
    if !n.is_one() {
        use num_traits::ToPrimitive;
        match n.to_u64() {
            Some(q) if crate::arith::is_prime_u64(q) => out.push((q, 1)),
            _ => {
                return Err(WdlError::Parse(
                    "discriminant has an unfactorable cofactor".into(),
                ))
            }
        }
    }
    Ok(out)
}

/// The Cremona-format conductor cross-check: for all-multiplicative curves
/// the stated conductor must equal radical(Δ_min).
fn check_conductor(record: &CurveRecord) -> Result<(), WdlError> {
    let curve = record.curve();
    let min = curve.minimal_model()?;
    let inv = min.invariants()?;
    let factors = factor_bigint(&inv.disc)?;
    let mut all_mult = true;
    let mut radical: u64 = 1;
    for &(q, _) in &factors {
        let red = reduction_at(&min, q)?;
        if red.kind.is_multiplicative() {
            radical = radical
                .checked_mul(q)
                .ok_or_else(|| WdlError::InvalidInput("radical overflows u64".into()))?;
        } else {
            all_mult = false;
        }
    }
    if all_mult && radical != record.conductor {
        return Err(WdlError::Parse(format!(
            "stated conductor {} does not match radical(Δ_min) = {radical}",
            record.conductor
        )));
    }
    Ok(())
}

/// One (curve, q, p) result row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanRow {
    pub label: String,
    pub conductor: u64,
    pub q: u64,
    pub p: u64,
    #[serde(rename = "vqJ")]
    pub vq_j: i64,
    pub t_q: u64,
    pub m_q: u64,
    pub u_q: u64,
    pub k_q: u64,
    pub n_q: u64,
    pub split: bool,
    /// `certified-at-ℓ` for the certifying prime ℓ.
    pub irreducibility: String,
    #[serde(rename = "N_lowered")]
    pub n_lowered: u64,
    pub defect_contribution: u64,
}

/// Why a curve (or a (curve, p) pair) produced no rows.
#[derive(Debug, Clone, Serialize)]
pub struct Exclusion {
    pub label: String,
    pub p: Option<u64>,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct ScanOutcome {
    pub rows: Vec<ScanRow>,
    pub exclusions: Vec<Exclusion>,
}

/// Scan parameters; `min_lowered_prime_divisors` filters rows by the number
/// of distinct primes of N(ρ̄) (0 disables the filter).
#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub min_cond: u64,
    pub max_cond: u64,
    pub primes: Vec<u64>,
    pub nonzero_only: bool,
    pub min_lowered_prime_divisors: usize,
    pub cert_bound: u64,
    pub jobs: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            min_cond: 1,
            max_cond: u64::MAX,
            primes: vec![3, 5, 7, 11],
            nonzero_only: false,
            min_lowered_prime_divisors: 2,
            cert_bound: crate::tamedefect::DEFAULT_CERT_BOUND,
            jobs: 0,
        }
    }
}

fn scan_one(record: &CurveRecord, opts: &ScanOptions) -> (Vec<ScanRow>, Vec<Exclusion>) {
    let mut rows = Vec::new();
    let mut excl = Vec::new();
    let skip = |reason: String| Exclusion { label: record.label.clone(), p: None, reason };
    let n = record.conductor;
    let factors = factor_u64(n);
    if factors.iter().any(|&(_, e)| e > 1) {
        return (rows, vec![skip("conductor not squarefree".into())]);
    }
    let curve = record.curve();
    let min = match curve.minimal_model() {
        Ok(m) => m,
        Err(e) => return (rows, vec![skip(format!("minimal model: {e}"))]),
    };
    let inv = match min.invariants() {
        Ok(i) => i,
        Err(e) => return (rows, vec![skip(format!("invariants: {e}"))]),
    };
    // Δ_min must be supported exactly on the conductor primes
    let mut rest = inv.disc.magnitude().clone();
    let mut exps = Vec::new();
    for &(q, _) in &factors {
        let qb = num_bigint::BigUint::from(q);
        let mut e = 0u64;
        while (&rest % &qb).is_zero() {
            rest /= &qb;
            e += 1;
        }
        exps.push((q, e));
    }
    if !rest.is_one() {
        return (
            rows,
            vec![skip("minimal discriminant has primes outside the conductor".into())],
        );
    }
    for &(q, e) in &exps {
        if e == 0 {
            return (rows, vec![skip(format!("conductor prime {q} does not divide Δ_min"))]);
        }
        match reduction_at(&min, q) {
            Ok(red) if red.kind.is_multiplicative() => {}
            Ok(_) => return (rows, vec![skip(format!("additive reduction at {q}"))]),
            Err(e) => return (rows, vec![skip(format!("reduction at {q}: {e}"))]),
        }
    }
    for &p in &opts.primes {
        let usable: Vec<u64> = exps
            .iter()
            .map(|&(q, _)| q)
            .filter(|&q| (q - 1) % p == 0 && n % p != 0)
            .collect();
        if usable.is_empty() {
            continue;
        }
        let cert = match irreducibility_certificate(&min, p, opts.cert_bound) {
            Ok(c) => c,
            Err(e) => {
                excl.push(Exclusion {
                    label: record.label.clone(),
                    p: Some(p),
                    reason: format!("certificate: {e}"),
                });
                continue;
            }
        };
        let cert_ell = match cert {
            IrreducibilityCertificate::CertifiedAt(ell) => ell,
            IrreducibilityCertificate::Undetermined => {
                excl.push(Exclusion {
                    label: record.label.clone(),
                    p: Some(p),
                    reason: "undetermined irreducibility".into(),
                });
                continue;
            }
        };
        // level lowering data at p: drop every q' with p | v_{q'}(Δ_min)
        let mut n_lowered = n;
        for &(qq, ee) in &exps {
            if ee % p == 0 {
                n_lowered /= qq;
            }
        }
        for &q in &usable {
            let ti = match tame_invariants(&min, q, p) {
                Ok(t) => t,
                Err(e) => {
                    excl.push(Exclusion {
                        label: record.label.clone(),
                        p: Some(p),
                        reason: format!("tame invariants at {q}: {e}"),
                    });
                    continue;
                }
            };
            if opts.nonzero_only && ti.n_q == 0 {
                continue;
            }
            if opts.min_lowered_prime_divisors > 0
                && factor_u64(n_lowered).len() < opts.min_lowered_prime_divisors
            {
                continue;
            }
            let vq_j = -(ti.vq_tate as i64);
            rows.push(ScanRow {
                label: record.label.clone(),
                conductor: n,
                q,
                p,
                vq_j,
                t_q: ti.t_q,
                m_q: ti.m_q,
                u_q: ti.u_q,
                k_q: ti.k_q,
                n_q: ti.n_q,
                split: ti.split,
                irreducibility: format!("certified-at-{cert_ell}"),
                n_lowered,
                defect_contribution: 2 * ti.n_q,
            });
        }
    }
    (rows, excl)
}

/// Runs the scan over a worker pool; output order is independent of `jobs`.
pub fn scan(records: &[CurveRecord], opts: &ScanOptions) -> Result<ScanOutcome, WdlError> {
    let in_range: Vec<&CurveRecord> = records
        .iter()
        .filter(|r| r.conductor >= opts.min_cond && r.conductor <= opts.max_cond)
        .collect();
    let run = || {
        in_range
            .par_iter()
            .map(|rec| scan_one(rec, opts))
            .collect::<Vec<_>>()
    };
    let results = if opts.jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| WdlError::Internal(format!("thread pool: {e}")))?;
        pool.install(run)
    } else {
        run()
    };
    let mut outcome = ScanOutcome::default();
    for (rows, excl) in results {
        outcome.rows.extend(rows);
        outcome.exclusions.extend(excl);
    }
    outcome
        .rows
        .sort_by(|a, b| (a.conductor, &a.label, a.q, a.p).cmp(&(b.conductor, &b.label, b.q, b.p)));
    outcome
        .exclusions
        .sort_by(|a, b| (&a.label, a.p).cmp(&(&b.label, b.p)));
    Ok(outcome)
}

pub const CSV_HEADER: &str =
    "label,conductor,q,p,vqJ,t_q,m_q,u_q,k_q,n_q,split,irreducibility,N_lowered,defect_contribution";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = WdlError;
    fn from_str(s: &str) -> Result<Self, WdlError> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(WdlError::InvalidInput(format!("unknown report format {other:?}"))),
        }
    }
}

/// Serializes rows deterministically; CSV carries the exact header above.
pub fn write_report<W: Write>(
    rows: &[ScanRow],
    format: ReportFormat,
    out: &mut W,
) -> Result<(), WdlError> {
    match format {
        ReportFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for r in rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.label,
                    r.conductor,
                    r.q,
                    r.p,
                    r.vq_j,
                    r.t_q,
                    r.m_q,
                    r.u_q,
                    r.k_q,
                    r.n_q,
                    r.split,
                    r.irreducibility,
                    r.n_lowered,
                    r.defect_contribution
                )?;
            }
        }
        ReportFormat::Json => {
            let json = serde_json::to_string_pretty(rows)
                .map_err(|e| WdlError::Internal(format!("serialize: {e}")))?;
            writeln!(out, "{json}")?;
        }
    }
    Ok(())
}

/// Counts #{(E, q) : n_q > 0} per p.
pub fn summarize(rows: &[ScanRow]) -> Vec<(u64, usize)> {
    use std::collections::BTreeMap;
    let mut per_p: BTreeMap<u64, std::collections::BTreeSet<(String, u64)>> = BTreeMap::new();
    for r in rows {
        if r.n_q > 0 {
            per_p.entry(r.p).or_default().insert((r.label.clone(), r.q));
        }
    }
    per_p.into_iter().map(|(p, set)| (p, set.len())).collect()
}

pub fn write_summary<W: Write>(
    rows: &[ScanRow],
    exclusions: &[Exclusion],
    out: &mut W,
) -> Result<(), WdlError> {
    writeln!(out, "p,pairs_with_nq_positive")?;
    for (p, count) in summarize(rows) {
        writeln!(out, "{p},{count}")?;
    }
    let undetermined: Vec<&Exclusion> = exclusions
        .iter()
        .filter(|e| e.reason.contains("undetermined"))
        .collect();
    writeln!(out, "# undetermined-irreducibility exclusions: {}", undetermined.len())?;
    for e in undetermined {
        writeln!(out, "# excluded {} p={}", e.label, e.p.map_or("?".into(), |p| p.to_string()))?;
    }
    Ok(())
}
