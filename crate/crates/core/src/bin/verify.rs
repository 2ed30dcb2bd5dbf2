//! Soundness sweep: `splinefit-verify --seeds 0..1000 [--model 1|2]`.
//!
//! Generates one random instance per seed, runs the model's sufficient
//! condition and the oracle rank, and prints a summary table. Exits 1 if
//! any certification is contradicted by the oracle.

use std::process::ExitCode;

use splinefit::oracle::{exhaustive_rank_compare, InstanceConfig, RandomInstance, RankComparison};
use splinefit::{Model, Tolerances, VerdictStatus};

struct Options {
    seeds: std::ops::Range<u64>,
    model: Option<Model>,
}

fn parse_args() -> Result<Options, String> {
    let mut opts = Options {
        seeds: 0..1000,
        model: None,
    };
    let mut args = std::env::args().skip(1);
    while let Some(arg) = args.next() {
        let mut value = || args.next().ok_or(format!("{arg} needs a value"));
        match arg.as_str() {
            "--seeds" => {
                let v = value()?;
                let (a, b) = v.split_once("..").ok_or("--seeds expects A..B")?;
                let a = a.parse().map_err(|_| format!("bad seed range {v}"))?;
                let b = b.parse().map_err(|_| format!("bad seed range {v}"))?;
                opts.seeds = a..b;
            }
            "--model" => {
                opts.model = Some(match value()?.as_str() {
                    "1" => Model::One,
                    "2" => Model::Two,
                    other => return Err(format!("unknown model {other}")),
                })
            }
            "-h" | "--help" => {
                println!("usage: splinefit-verify [--seeds A..B] [--model 1|2]");
                std::process::exit(0);
            }
            other => return Err(format!("unknown argument {other}")),
        }
    }
    Ok(opts)
}

#[derive(Default)]
struct Tally {
    instances: usize,
    full: usize,
    deficient: usize,
    unknown: usize,
    unknown_but_full: usize,
    violations: Vec<u64>,
}

impl Tally {
    fn add(&mut self, rec: &RankComparison) {
        self.instances += 1;
        match rec.theorem_verdict {
            VerdictStatus::CertifiedFullRank { .. } => self.full += 1,
            VerdictStatus::CertifiedDeficient { .. } => self.deficient += 1,
            VerdictStatus::Unknown { .. } => {
                self.unknown += 1;
                if rec.oracle_rank == rec.full_rank {
                    self.unknown_but_full += 1;
                }
            }
        }
        if !rec.consistent {
            self.violations.push(rec.seed);
        }
    }
}

fn main() -> ExitCode {
    let opts = match parse_args() {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let cfg = InstanceConfig {
        model: opts.model,
        ..InstanceConfig::default()
    };
    let tol = Tolerances::default();
    let mut tallies = [Tally::default(), Tally::default()];
    for seed in opts.seeds.clone() {
        let inst = RandomInstance::generate(seed, &cfg);
        let rec = exhaustive_rank_compare(&inst, &tol);
        tallies[u8::from(inst.model) as usize - 1].add(&rec);
    }

    println!(
        "{:<6} {:>9} {:>10} {:>10} {:>8} {:>15} {:>11}  result",
        "model", "instances", "full rank", "deficient", "unknown", "unknown & full", "violations"
    );
    let mut failed = false;
    for (i, t) in tallies.iter().enumerate() {
        if t.instances == 0 {
            continue;
        }
        let ok = t.violations.is_empty();
        failed |= !ok;
        println!(
            "{:<6} {:>9} {:>10} {:>10} {:>8} {:>15} {:>11}  {}",
            i + 1,
            t.instances,
            t.full,
            t.deficient,
            t.unknown,
            t.unknown_but_full,
            t.violations.len(),
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            println!("       violating seeds: {:?}", t.violations);
        }
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
