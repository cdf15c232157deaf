//! Batch runs over seeded random cones, one CSV row per (cone, method).

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{random_cone_where, ConeSpec};
use crate::lattice::DEFAULT_PAR_CAP;
use crate::unimodular::{pipeline_finres_with_cap, Strategy};
use crate::verify::{audit_unimodular_bounds, implied_exponent, unimodular_bound_log, Outcome};

pub const CSV_COLUMNS: [&str; 10] = [
    "seed",
    "mu",
    "method",
    "pieces",
    "max_dilation_num",
    "max_dilation_den",
    "implied_exponent",
    "bound_value",
    "satisfied",
    "wall_ms",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub seed: u64,
    pub mu: String,
    pub method: String,
    pub pieces: usize,
    pub max_dilation_num: String,
    pub max_dilation_den: String,
    pub implied_exponent: String,
    pub bound_value: String,
    pub satisfied: bool,
    pub wall_ms: u64,
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub d: usize,
    pub count: usize,
    pub seed: u64,
    pub max_entry: u64,
    pub methods: Vec<Strategy>,
    pub par_cap: u64,
}

impl BenchConfig {
    pub fn new(d: usize, count: usize, seed: u64, max_entry: u64) -> Self {
        Self {
            d,
            count,
            seed,
            max_entry,
            methods: Strategy::ALL.to_vec(),
            par_cap: DEFAULT_PAR_CAP,
        }
    }
}

const EXPONENT_DIGITS: usize = 12;

fn run_one(cfg: &BenchConfig, seed: u64, method: Strategy) -> Result<BenchRow> {
    let spec = ConeSpec::random(cfg.d, seed, cfg.max_entry);
    let cone = random_cone_where(&spec, |c| !c.is_unimodular())?;
    let start = Instant::now();
    let t = pipeline_finres_with_cap(&cone, method, cfg.par_cap)?;
    let report = audit_unimodular_bounds(&t, &cone);
    let wall_ms = start.elapsed().as_millis() as u64;
    let mu = cone.multiplicity();
    let dil = t.max_dilation.value();
    Ok(BenchRow {
        seed,
        mu: mu.to_string(),
        method: method.name().into(),
        pieces: t.len(),
        max_dilation_num: dil.numer().to_string(),
        max_dilation_den: dil.denom().to_string(),
        implied_exponent: implied_exponent(dil, mu)
            .map(|e| e.to_decimal(EXPONENT_DIGITS))
            .unwrap_or_else(|| "0".into()),
        bound_value: unimodular_bound_log(cfg.d, mu).exp().to_decimal(6),
        satisfied: report.outcome == Outcome::Satisfied,
        wall_ms,
    })
}

/// Runs every method on `count` random non-unimodular cones with seeds
/// `seed, seed + 1, …`. Rows come back in (seed, method) order regardless
/// of scheduling.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if cfg.methods.is_empty() {
        return Err(Error::Precondition("no methods selected".into()));
    }
    let jobs: Vec<(u64, Strategy)> = (0..cfg.count as u64)
        .flat_map(|i| cfg.methods.iter().map(move |&m| (cfg.seed.wrapping_add(i), m)))
        .collect();
    jobs.par_iter().map(|&(s, m)| run_one(cfg, s, m)).collect()
}

/// Writes the header and rows; with no rows the output is the header only.
pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let io = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

pub fn read_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| Error::Format(e.to_string()))?;
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(Error::Format(format!("unexpected CSV header {headers:?}")));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Format(e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_bench_is_header_only() {
        let mut out = Vec::new();
        write_csv(&run_bench(&BenchConfig::new(2, 0, 1, 5)).unwrap(), &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{}\n", CSV_COLUMNS.join(",")));
    }

    #[test]
    fn small_bench() {
        let cfg = BenchConfig::new(2, 4, 9, 6);
        let rows = run_bench(&cfg).unwrap();
        assert_eq!(rows.len(), 12);
        assert!(rows.iter().all(|r| r.satisfied));
        let mut out = Vec::new();
        write_csv(&rows, &mut out).unwrap();
        let back = read_csv(std::str::from_utf8(&out).unwrap()).unwrap();
        assert_eq!(back, rows);
    }
}
