mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fourier_ito::coefficients::{build_unit_tensors, read_db, write_db};
use fourier_ito::error::{min_q_table, mse_bound, mse_exact_distinct, MseReport};
use fourier_ito::expansion::{gen_noise, ExpansionPlan, MultiIndex, TruncationSpec};
use fourier_ito::mc::{error_suite, identity_suite, orthogonality_suite, qwiener_suite, ValidationRow};
use fourier_ito::qwiener::{approx_composite, composite_error_bound, composite_noise_index, CompositeKind, MultilinearOperator};
use fourier_ito::tables::{self, MIN_Q_COLUMNS};
use fourier_ito::{CoefficientEngine, Error, WeightSpec};

use output::{Format, Table, Value};

#[derive(Parser, Debug)]
#[command(name = "fourier-ito", version, about = "Fourier-Legendre approximation of iterated Ito integrals")]
struct Cli {
    /// Output format for tabular results.
    #[arg(long, value_enum, global = true, default_value_t = Format::Csv)]
    format: Format,
    /// Write results to this file instead of stdout. Relative paths are
    /// resolved against $FOURIER_ITO_OUT_DIR when it is set.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Cap on worker threads. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the unit-weight coefficient tensor C̄ for one multiplicity.
    GenCoeffs {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=6))]
        k: u64,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute the published coefficient tables for k = 3, 4, 5.
    VerifyTables,
    /// One realization of the truncated expansion.
    Approx {
        /// Comma-separated components; 0 integrates in time.
        #[arg(long, value_delimiter = ',', required = true)]
        indices: Vec<usize>,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        seed: u64,
    },
    /// Mean-square error with pairwise distinct indices for q = 0..q-max.
    ErrorTable {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=6))]
        k: u64,
        #[arg(long)]
        q_max: usize,
        #[arg(long)]
        dt: f64,
        /// Report the Parseval upper bound even where an exact value exists.
        #[arg(long)]
        bound: bool,
    },
    /// Smallest orders q (k=2) and q1 (k=3) with error at most (T-t)^4.
    MinQ {
        /// Interval lengths in (0, 1); defaults to the published columns.
        #[arg(long, value_delimiter = ',')]
        dt: Vec<f64>,
    },
    /// Composite Q-Wiener approximation and its stated error bound.
    Qwiener {
        #[arg(long, value_parser = parse_kind)]
        kind: Option<CompositeKind>,
        #[arg(long = "M")]
        m: Option<usize>,
        #[arg(long)]
        nu: Option<f64>,
        /// Spectrum scale c in λ_r = c r^-ν.
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        q: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Dimension of the random operator's range.
        #[arg(long)]
        dim: Option<usize>,
        /// JSON file with spectrum, operator and run parameters.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Monte Carlo validation suite.
    Validate {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long = "R", default_value_t = 100_000)]
        r: usize,
        #[arg(long = "N", default_value_t = 10_000)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.25)]
        dt: f64,
    },
    /// Write unit-weight tensors for several multiplicities to a database file.
    ExportDb {
        #[arg(long)]
        p: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        ks: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Read a database file, recompute every entry and report mismatches.
    ImportDb {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Suite {
    Errors,
    Identities,
    Orthogonality,
    Qwiener,
}

fn parse_kind(s: &str) -> Result<CompositeKind, String> {
    s.parse::<CompositeKind>().map_err(|e| e.to_string())
}

/// Failure of a subcommand with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Malformed(_) | Error::VersionMismatch { .. } | Error::Io(_) => 1,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

/// Outcome of a successful run: the table to emit and whether a check failed.
struct Outcome {
    table: Table,
    mismatch: bool,
}

impl Outcome {
    fn ok(table: Table) -> Self {
        Outcome { table, mismatch: false }
    }
}

fn check_dt(dt: f64) -> Result<(), Failure> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("--dt must be positive, got {dt}")))
    }
}

fn out_path(p: &std::path::Path) -> PathBuf {
    match std::env::var_os(output::OUT_DIR_ENV) {
        Some(dir) if p.is_relative() => PathBuf::from(dir).join(p),
        _ => p.to_path_buf(),
    }
}

fn gen_coeffs(k: usize, p: usize, out: &std::path::Path) -> Result<Outcome, Failure> {
    let tensors = build_unit_tensors(p, &[k])?;
    let path = out_path(out);
    write_db(&tensors, std::io::BufWriter::new(std::fs::File::create(&path).map_err(Error::from)?))?;
    let mut t = Table::new(&["k", "p", "entries", "path"]);
    t.push(vec![Value::Int(k as i64), Value::Int(p as i64), Value::Int(tensors[0].len() as i64), Value::Str(path.display().to_string())]);
    Ok(Outcome::ok(t))
}

fn verify_tables() -> Result<Outcome, Failure> {
    let report = tables::verify()?;
    let mut t = Table::new(&["indices", "expected", "computed"]);
    for m in &report.mismatches {
        t.push(vec![Value::Str(join(&m.indices)), Value::Str(m.expected.to_string()), Value::Str(m.computed.to_string())]);
    }
    if report.ok() {
        eprintln!("coefficient tables k=3,4,5: OK ({} cells)", report.checked);
    } else {
        eprintln!("coefficient tables k=3,4,5: {} of {} cells differ", report.mismatches.len(), report.checked);
    }
    Ok(Outcome { table: t, mismatch: !report.ok() })
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn approx(indices: Vec<usize>, q: usize, dt: f64, seed: u64) -> Result<Outcome, Failure> {
    check_dt(dt)?;
    let idx = MultiIndex::new(indices)?;
    let k = idx.k();
    let plan = ExpansionPlan::new(&idx, &WeightSpec::unit(k), &TruncationSpec::uniform(k, q), dt)?;
    let rows = plan.components().iter().copied().max().unwrap_or(1);
    let noise = gen_noise(rows, plan.coefficients().max_index(), seed);
    let value = plan.evaluate(&noise)?;
    let mut t = Table::new(&["indices", "q", "dt", "seed", "value", "coefficients", "nonzero"]);
    t.push(vec![
        Value::Str(join(&idx.0)),
        Value::Int(q as i64),
        Value::Float(dt),
        Value::Str(seed.to_string()),
        Value::Float(value),
        Value::Int(plan.coefficients().count() as i64),
        Value::Int(plan.coefficients().nonzero() as i64),
    ]);
    Ok(Outcome::ok(t))
}

fn error_table(k: usize, q_max: usize, dt: f64, bound: bool) -> Result<Outcome, Failure> {
    check_dt(dt)?;
    let weights = WeightSpec::unit(k);
    let mut t = Table::new(&["q", "exact_or_bound", "kind", "equation_tag"]);
    for q in 0..=q_max {
        let trunc = vec![q; k];
        let r: MseReport = if bound || k > 5 {
            mse_bound(&weights, &trunc, dt)?
        } else {
            mse_exact_distinct(&weights, &trunc, dt)?
        };
        t.push(vec![Value::Int(q as i64), Value::Float(r.value), Value::Str(r.kind.as_str().into()), Value::Str(r.tag.into())]);
    }
    Ok(Outcome::ok(t))
}

fn min_q(dt: Vec<f64>) -> Result<Outcome, Failure> {
    let lengths = if dt.is_empty() { MIN_Q_COLUMNS.iter().map(|c| c.0).collect() } else { dt };
    let mut t = Table::new(&["interval_length", "q", "q1"]);
    for row in min_q_table(&lengths)? {
        t.push(vec![Value::Float(row.interval_length), Value::Int(row.q as i64), Value::Int(row.q1 as i64)]);
    }
    Ok(Outcome::ok(t))
}

#[allow(clippy::too_many_arguments)]
fn qwiener(
    kind: Option<CompositeKind>,
    m: Option<usize>,
    nu: Option<f64>,
    scale: Option<f64>,
    q: Option<usize>,
    dt: Option<f64>,
    seed: Option<u64>,
    dim: Option<usize>,
    config: Option<PathBuf>,
) -> Result<Outcome, Failure> {
    let file = match &config {
        Some(p) => Some(config::QWienerConfig::load(p)?),
        None => None,
    };
    let file_ref = file.as_ref();
    let kind = kind.or(file_ref.and_then(|c| c.kind)).ok_or_else(|| usage("--kind is required"))?;
    let q = q.or(file_ref.and_then(|c| c.q)).ok_or_else(|| usage("--q is required"))?;
    let dt = dt.or(file_ref.and_then(|c| c.dt)).ok_or_else(|| usage("--dt is required"))?;
    let seed = seed.or(file_ref.and_then(|c| c.seed)).ok_or_else(|| usage("--seed is required"))?;
    check_dt(dt)?;
    let spec = match file_ref.and_then(|c| c.spectrum.clone()) {
        Some(spec) if m.is_none() && nu.is_none() => spec,
        _ => {
            let m = m.ok_or_else(|| usage("--M is required without a spectrum in --config"))?;
            let nu = nu.ok_or_else(|| usage("--nu is required without a spectrum in --config"))?;
            fourier_ito::qwiener::QWienerSpec::power_law(scale.unwrap_or(1.0), nu, m)?
        }
    };
    let op = match file_ref.and_then(|c| c.operator.clone()) {
        Some(op) => op,
        None => MultilinearOperator::random(kind.arity(), dim.unwrap_or(3), spec.m(), seed)?,
    };
    let noise = gen_noise(spec.m(), composite_noise_index(kind, q), seed);
    let v = approx_composite(kind, &op, &spec, q, &noise, dt)?;
    let bound = composite_error_bound(kind, op.bound(), &spec, q, dt)?;
    let mut t = Table::new(&["quantity", "index", "value"]);
    for (h, x) in v.iter().enumerate() {
        t.push(vec![Value::Str("approx".into()), Value::Int(h as i64), Value::Float(*x)]);
    }
    t.push(vec![Value::Str("bound".into()), Value::Str(String::new()), Value::Float(bound)]);
    t.push(vec![Value::Str("operator_norm".into()), Value::Str(String::new()), Value::Float(op.bound())]);
    t.push(vec![Value::Str("trace".into()), Value::Str(String::new()), Value::Float(spec.trace())]);
    Ok(Outcome::ok(t))
}

fn validate(suite: Suite, r: usize, n: usize, seed: u64, dt: f64) -> Result<Outcome, Failure> {
    check_dt(dt)?;
    if r == 0 || n == 0 {
        return Err(usage("--R and --N must be positive"));
    }
    let rows: Vec<ValidationRow> = match suite {
        Suite::Errors => error_suite(r, n, seed, dt)?,
        Suite::Identities => identity_suite(r, n, seed, dt)?,
        Suite::Orthogonality => orthogonality_suite(r, n, seed, dt)?,
        Suite::Qwiener => qwiener_suite(r, n, seed, dt)?,
    };
    let mut t = Table::new(&["case", "target", "estimate", "se", "tolerance", "verdict"]);
    // Calibration rows measure grid bias on zero-error cases and do not gate.
    let info = |r: &ValidationRow| r.case.starts_with("calibration");
    let mismatch = rows.iter().any(|r| !r.pass && !info(r));
    for row in rows {
        let verdict = if info(&row) { "INFO" } else { row.verdict() };
        t.push(vec![
            Value::Str(row.case.clone()),
            Value::Float(row.target),
            Value::Float(row.estimate),
            Value::Float(row.se),
            Value::Float(row.tolerance),
            Value::Str(verdict.into()),
        ]);
    }
    Ok(Outcome { table: t, mismatch })
}

fn export_db(p: usize, ks: Vec<usize>, out: &std::path::Path) -> Result<Outcome, Failure> {
    if ks.is_empty() || ks.iter().any(|&k| !(1..=6).contains(&k)) {
        return Err(usage("--ks must list multiplicities between 1 and 6"));
    }
    let tensors = build_unit_tensors(p, &ks)?;
    let path = out_path(out);
    write_db(&tensors, std::io::BufWriter::new(std::fs::File::create(&path).map_err(Error::from)?))?;
    let mut t = Table::new(&["k", "p", "entries", "path"]);
    for tensor in &tensors {
        t.push(vec![
            Value::Int(tensor.k() as i64),
            Value::Int(p as i64),
            Value::Int(tensor.len() as i64),
            Value::Str(path.display().to_string()),
        ]);
    }
    Ok(Outcome::ok(t))
}

fn import_db(input: &std::path::Path) -> Result<Outcome, Failure> {
    let file = std::fs::File::open(input).map_err(Error::from)?;
    let tensors = read_db(std::io::BufReader::new(file))?;
    let max = tensors.iter().flat_map(|t| t.trunc().iter().copied()).max().unwrap_or(0);
    let engine = CoefficientEngine::new(max);
    let mut t = Table::new(&["k", "p", "entries", "mismatches"]);
    let mut mismatch = false;
    for tensor in &tensors {
        let fresh = engine.tensor(&WeightSpec::unit(tensor.k()), tensor.trunc())?;
        let bad = tensor.values().iter().zip(fresh.values()).filter(|(a, b)| a != b).count();
        mismatch |= bad > 0;
        let p = tensor.trunc().iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ");
        t.push(vec![Value::Int(tensor.k() as i64), Value::Str(p), Value::Int(tensor.len() as i64), Value::Int(bad as i64)]);
    }
    Ok(Outcome { table: t, mismatch })
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    match cli.command {
        Command::GenCoeffs { k, p, out } => gen_coeffs(k as usize, p, &out),
        Command::VerifyTables => verify_tables(),
        Command::Approx { indices, q, dt, seed } => approx(indices, q, dt, seed),
        Command::ErrorTable { k, q_max, dt, bound } => error_table(k as usize, q_max, dt, bound),
        Command::MinQ { dt } => min_q(dt),
        Command::Qwiener { kind, m, nu, scale, q, dt, seed, dim, config } => {
            qwiener(kind, m, nu, scale, q, dt, seed, dim, config)
        }
        Command::Validate { suite, r, n, seed, dt } => validate(suite, r, n, seed, dt),
        Command::ExportDb { p, ks, out } => export_db(p, ks, &out),
        Command::ImportDb { input } => import_db(&input),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let format = cli.format;
    let output = cli.output.clone();
    match run(cli) {
        Ok(outcome) => {
            let text = outcome.table.render(format);
            let written = match &output {
                Some(p) => std::fs::write(out_path(p), text),
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(text.as_bytes())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(if outcome.mismatch { 1 } else { 0 })
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
