use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;

use conetri::bench::{run_bench, write_csv, BenchConfig, BenchRow};
use conetri::cone::{SimplicialCone, DEFAULT_HILBERT_CAP};
use conetri::error::Error;
use conetri::format::{cone_to_json, parse_cone, BoundRecord, TriangulationFile};
use conetri::lattice::DEFAULT_PAR_CAP;
use conetri::unimodular::{pipeline_finres_with_cap, Strategy};
use conetri::verify::{
    audit_bpft_bounds_with_cap, audit_final_cones, audit_transfer_exponents, audit_transfer_k, audit_unimodular_bounds,
    audit_unimodular_pieces, check_partition, partition_report, BoundReport,
};
use conetri::{generators, run_bpft};

const PAR_CAP_VAR: &str = "CONETRI_PAR_CAP";

#[derive(Parser)]
#[command(name = "conetri", version, about = "Triangulate simplicial lattice cones and audit the dilation bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Triangulate the cone in INPUT.
    Triangulate {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Bpft)]
        method: Method,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for the partition sampling done by --audit.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run every applicable audit and embed the reports.
        #[arg(long)]
        audit: bool,
        #[arg(long, default_value_t = 2_000)]
        samples: usize,
    },
    /// Write one of the prime-multiplicity example cones.
    Example {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long = "N")]
        n: Option<BigInt>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the unimodular pipelines on seeded random cones and write a CSV.
    Bench {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        max_entry: u64,
        /// Comma-separated list of naive, bpft-naive, bpft-transfer.
        #[arg(long, value_delimiter = ',', default_value = "naive,bpft-naive,bpft-transfer")]
        method: Vec<Strategy>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Recheck a triangulation file.
    Verify {
        input: PathBuf,
        /// Partition samples; 0 skips the partition check.
        #[arg(long, default_value_t = 2_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Bpft,
    Naive,
    BpftNaive,
    BpftTransfer,
}

impl Method {
    fn strategy(self) -> Option<Strategy> {
        match self {
            Method::Bpft => None,
            Method::Naive => Some(Strategy::Naive),
            Method::BpftNaive => Some(Strategy::BpftThenNaive),
            Method::BpftTransfer => Some(Strategy::BpftThenTransfer),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Prime,
    TwoDimPrime,
}

enum Failure {
    /// Bad input, I/O, or an unsupported request.
    Operational(String),
    /// A bound or consistency check failed.
    Violation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvariantViolation(_) => Failure::Violation(e.to_string()),
            other => Failure::Operational(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Operational(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Violation(msg)) => {
            eprintln!("violation: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let caps = Caps::from_env()?;
    match cli.command {
        Command::Triangulate {
            input,
            method,
            out,
            seed,
            audit,
            samples,
        } => triangulate(&input, method, out.as_deref(), seed, audit, samples, caps),
        Command::Example { family, d, n, out } => example(family, d, n, out.as_deref()),
        Command::Bench {
            d,
            count,
            seed,
            max_entry,
            method,
            csv,
        } => bench(d, count, seed, max_entry, method, csv.as_deref(), caps),
        Command::Verify { input, samples, seed } => verify(&input, samples, seed, caps),
    }
}

#[derive(Clone, Copy)]
struct Caps {
    par: u64,
    hilbert: u64,
}

impl Caps {
    fn from_env() -> Result<Self, Failure> {
        match std::env::var(PAR_CAP_VAR) {
            Err(std::env::VarError::NotPresent) => Ok(Caps {
                par: DEFAULT_PAR_CAP,
                hilbert: DEFAULT_HILBERT_CAP,
            }),
            Ok(v) => match v.trim().parse::<u64>() {
                Ok(n) if n > 0 => Ok(Caps { par: n, hilbert: n }),
                _ => Err(Failure::Operational(format!("{PAR_CAP_VAR} must be a positive integer, got {v:?}"))),
            },
            Err(e) => Err(Failure::Operational(format!("{PAR_CAP_VAR}: {e}"))),
        }
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Operational(format!("{}: {e}", path.display())))
}

/// Writes `text` to `out` through a temporary file and a rename, or to
/// standard output.
fn emit(out: Option<&Path>, text: &str) -> Outcome {
    let io_err = |e: io::Error| Failure::Operational(format!("writing output: {e}"));
    match out {
        None => io::stdout().lock().write_all(text.as_bytes()).map_err(io_err),
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
            tmp.write_all(text.as_bytes()).map_err(io_err)?;
            tmp.as_file().sync_all().map_err(io_err)?;
            tmp.persist(path).map_err(|e| io_err(e.error))?;
            Ok(())
        }
    }
}

/// Human-readable summary; goes to stderr when stdout carries data.
fn print_table(records: &[BoundRecord], to_stderr: bool) {
    if records.is_empty() {
        return;
    }
    let name_w = records.iter().map(|r| r.bound_name.len()).max().unwrap_or(0).max(5);
    let mut lines = vec![format!(
        "{:<name_w$}  {:<10}  {:>8}  {:>10}  {:<24}  {}",
        "bound", "outcome", "checked", "violations", "measured", "bound value"
    )];
    for r in records {
        let outcome = if r.informational {
            format!("{} (info)", r.outcome)
        } else {
            r.outcome.clone()
        };
        lines.push(format!(
            "{:<name_w$}  {:<10}  {:>8}  {:>10}  {:<24}  {}",
            r.bound_name,
            outcome,
            r.checked,
            r.violations,
            truncate(&r.measured, 24),
            truncate(&r.bound_value, 40)
        ));
    }
    let text = lines.join("\n");
    if to_stderr {
        eprintln!("{text}");
    } else {
        println!("{text}");
    }
}

fn truncate(s: &str, n: usize) -> String {
    if s.chars().count() <= n {
        s.to_string()
    } else {
        let mut t: String = s.chars().take(n - 1).collect();
        t.push('…');
        t
    }
}

fn failures(records: &[BoundRecord]) -> Vec<&str> {
    records
        .iter()
        .filter(|r| r.is_failure())
        .map(|r| r.bound_name.as_str())
        .collect()
}

fn triangulate(input: &Path, method: Method, out: Option<&Path>, seed: u64, audit: bool, samples: usize, caps: Caps) -> Outcome {
    let cone = parse_cone(&read_input(input)?).map_err(|e| Failure::Operational(format!("{}: {e}", input.display())))?;
    let file = match method.strategy() {
        None => {
            let state = run_bpft(&cone)?;
            let mut reports = Vec::new();
            if audit {
                reports = audit_bpft_bounds_with_cap(&state, caps.hilbert);
                let v = check_partition(&cone, &state.current_cones(), samples, seed);
                reports.push(partition_report(&v, seed));
            }
            TriangulationFile::from_bpft(&state, &reports)?
        }
        Some(strategy) => {
            let t = pipeline_finres_with_cap(&cone, strategy, caps.par)?;
            let mut reports = Vec::new();
            if audit {
                if let Some(state) = &t.bpft {
                    reports.extend(audit_bpft_bounds_with_cap(state, caps.hilbert));
                }
                reports.push(audit_unimodular_bounds(&t, &cone));
                if !t.transfers.is_empty() {
                    reports.push(audit_transfer_exponents(&t));
                    reports.push(audit_transfer_k(&t));
                }
                let v = check_partition(&cone, &t.pieces, samples, seed);
                reports.push(partition_report(&v, seed));
            }
            TriangulationFile::from_unimodular(&t, &reports)?
        }
    };
    emit(out, &file.to_json())?;
    print_table(&file.bounds, out.is_none());
    let bad = failures(&file.bounds);
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation(format!("bounds violated: {}", bad.join(", "))))
    }
}

fn example(family: Family, d: Option<usize>, n: Option<BigInt>, out: Option<&Path>) -> Outcome {
    let cone = match family {
        Family::Prime => {
            let d = d.ok_or_else(|| Failure::Operational("--family prime needs --d".into()))?;
            generators::prime_example(d)?
        }
        Family::TwoDimPrime => {
            let n = n.ok_or_else(|| Failure::Operational("--family two-dim-prime needs --N".into()))?;
            generators::two_dim_prime(&n)?
        }
    };
    emit(out, &cone_to_json(&cone))
}

fn bench(d: usize, count: usize, seed: u64, max_entry: u64, methods: Vec<Strategy>, csv: Option<&Path>, caps: Caps) -> Outcome {
    let mut cfg = BenchConfig::new(d, count, seed, max_entry);
    cfg.methods = methods;
    cfg.par_cap = caps.par;
    let rows = run_bench(&cfg)?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    emit(csv, &String::from_utf8(buf).expect("csv output is UTF-8"))?;
    let bad: Vec<&BenchRow> = rows.iter().filter(|r| !r.satisfied).collect();
    let summary = format!("{} rows, {} over the bound", rows.len(), bad.len());
    if csv.is_none() {
        eprintln!("{summary}");
    } else {
        println!("{summary}");
    }
    if bad.is_empty() {
        Ok(())
    } else {
        let which: Vec<String> = bad.iter().map(|r| format!("seed {} {}", r.seed, r.method)).collect();
        Err(Failure::Violation(format!("bound exceeded for {}", which.join(", "))))
    }
}

fn verify(input: &Path, samples: usize, seed: u64, caps: Caps) -> Outcome {
    let op = |e: Error| Failure::Operational(format!("{}: {e}", input.display()));
    let file = TriangulationFile::parse(&read_input(input)?).map_err(op)?;
    let root = file.root_cone().map_err(op)?;
    let unimodular = match file.method.as_str() {
        "bpft" => false,
        other => {
            other.parse::<Strategy>().map_err(Failure::Operational)?;
            true
        }
    };

    let mut diffs = Vec::new();
    let pieces: Vec<SimplicialCone> = match file.piece_cones() {
        Ok(pieces) => {
            for (i, (cone, stored)) in pieces.iter().enumerate() {
                let recomputed = cone.multiplicity().to_string();
                if *stored != recomputed {
                    diffs.push(format!("pieces[{i}].multiplicity: stored {stored}, recomputed {recomputed}"));
                }
            }
            pieces.into_iter().map(|(c, _)| c).collect()
        }
        Err(e) => return Err(Failure::Violation(e.to_string())),
    };
    for v in &file.subdivision_vectors {
        let vector: Vec<BigInt> = v.vector.iter().map(|x| x.0.clone()).collect();
        match root.dilation(&vector) {
            Ok(dil) if dil == v.dilation => {}
            Ok(dil) => diffs.push(format!(
                "subdivision_vectors[{}].dilation: stored {}, recomputed {}",
                v.index,
                v.dilation.value(),
                dil.value()
            )),
            Err(e) => diffs.push(format!("subdivision_vectors[{}]: {e}", v.index)),
        }
    }
    if !diffs.is_empty() {
        for line in &diffs {
            println!("{line}");
        }
        return Err(Failure::Violation(format!("{} stored value(s) disagree with recomputation", diffs.len())));
    }

    let mut reports: Vec<BoundReport> = if unimodular {
        vec![audit_unimodular_pieces(&root, &pieces)]
    } else {
        audit_final_cones(&root, &pieces, caps.hilbert)
    };
    if samples == 0 {
        println!("partition check skipped (--samples 0)");
    } else {
        let v = check_partition(&root, &pieces, samples, seed);
        reports.push(partition_report(&v, seed));
    }
    let records: Vec<BoundRecord> = reports.iter().map(BoundRecord::from).collect();
    print_table(&records, false);
    let bad = failures(&records);
    if bad.is_empty() {
        println!("ok: {} pieces", pieces.len());
        Ok(())
    } else {
        Err(Failure::Violation(format!("checks failed: {}", bad.join(", "))))
    }
}
