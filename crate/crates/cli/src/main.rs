use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::RangeInclusive;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use num_bigint::BigUint;
use sdlpq::cost::{max_ell_for_budget, total_cost, CostReport};
use sdlpq::harness::{
    run_differential_with, run_fleet, FleetSpec, Probability, RunOptions, WorkloadFamily,
    WorkloadSpec,
};
use sdlpq::QueueParams;

#[derive(Parser)]
#[command(
    name = "sdlpq",
    version,
    about = "Optical priority queue simulator and verifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one workload against the oracle and print the report as JSON.
    Run {
        #[arg(long)]
        ell: u32,
        #[arg(long, default_value_t = 2000)]
        slots: u64,
        #[arg(long, default_value = "uniform-random")]
        workload: WorkloadFamily,
        #[arg(long, default_value = "1/2")]
        arrival_prob: Probability,
        #[arg(long, default_value = "1/2")]
        request_prob: Probability,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write one JSON record per slot.
        #[arg(long)]
        trace: Option<String>,
        /// Stop at the first divergence or invariant violation.
        #[arg(long)]
        strict: bool,
    },
    /// Run every workload family over a range of ell; exit code 0 iff all clean.
    Verify {
        /// Inclusive, e.g. `1..6`.
        #[arg(long, default_value = "1..6", value_parser = parse_range)]
        ell_range: RangeInclusive<u32>,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 2000)]
        slots: u64,
        #[arg(long, default_value = "1/2")]
        arrival_prob: Probability,
        #[arg(long, default_value = "1/2")]
        request_prob: Probability,
        #[arg(long, default_value_t = 0)]
        base_seed: u64,
        /// Print the full fleet report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Print the parameter table.
    Table {
        #[arg(long, default_value_t = 5)]
        ell: u32,
    },
    /// Print construction cost; defaults to ell 2 through 40.
    Cost {
        #[arg(long, conflicts_with = "budget")]
        ell: Option<u64>,
        /// Largest construction within this many FDLs.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        csv: bool,
    },
}

fn parse_range(s: &str) -> Result<RangeInclusive<u32>, String> {
    let (a, b) = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .ok_or_else(|| format!("expected LO..HI, got {s:?}"))?;
    let lo: u32 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let hi: u32 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {s}"));
    }
    Ok(lo..=hi)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run {
            ell,
            slots,
            workload,
            arrival_prob,
            request_prob,
            seed,
            trace,
            strict,
        } => {
            let spec =
                WorkloadSpec::new(workload, slots, seed).with_probs(arrival_prob, request_prob);
            let opts = RunOptions {
                strict,
                ..RunOptions::default()
            };
            let mut out = match &trace {
                Some(path) => Some(BufWriter::new(
                    File::create(path).with_context(|| format!("creating {path}"))?,
                )),
                None => None,
            };
            let mut io_err = None;
            let report = run_differential_with(ell, &spec, opts, |rec| {
                if let (Some(w), None) = (out.as_mut(), io_err.as_ref()) {
                    let line = serde_json::to_string(rec).expect("trace record serializes");
                    if let Err(e) = writeln!(w, "{line}") {
                        io_err = Some(e);
                    }
                }
            })?;
            if let Some(e) = io_err {
                bail!("writing trace: {e}");
            }
            if let Some(mut w) = out {
                w.flush()?;
            }
            println!("{}", serde_json::to_string(&report)?);
            Ok(if report.is_clean() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Verify {
            ell_range,
            trials,
            slots,
            arrival_prob,
            request_prob,
            base_seed,
            json,
        } => {
            let mut spec = FleetSpec::new(ell_range, trials, slots);
            spec.arrival_prob = arrival_prob;
            spec.request_prob = request_prob;
            spec.base_seed = base_seed;
            let fleet = run_fleet(&spec)?;
            if json {
                println!("{}", serde_json::to_string(&fleet)?);
            } else {
                for s in &fleet.per_ell {
                    println!(
                        "ell={:<3} B*={:<6} runs={:<5} mismatched={} violations={} max_entrants={} edge_hits={} max_occupancy={:?}",
                        s.ell,
                        s.b_star,
                        s.runs,
                        s.mismatched_runs,
                        s.violations,
                        s.max_entrants.iter().max().unwrap_or(&0),
                        s.full_request_arrival_slots,
                        s.max_occupancy,
                    );
                }
                match fleet.first_failure() {
                    None => println!("all {} runs clean", fleet.reports.len()),
                    Some(r) => println!(
                        "FAILED: ell={} workload={} seed={} divergence={:?} violation={:?}",
                        r.ell,
                        r.workload.family,
                        r.workload.seed,
                        r.first_divergence,
                        r.invariant_violations.first()
                    ),
                }
            }
            Ok(if fleet.all_clean() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Table { ell } => {
            print!("{}", QueueParams::new(ell)?.table());
            Ok(ExitCode::SUCCESS)
        }
        Command::Cost { ell, budget, csv } => {
            let rows: Vec<(u64, CostReport)> = match (ell, budget) {
                (Some(l), _) => vec![(l, total_cost(l)?)],
                (None, Some(m)) => vec![max_ell_for_budget(m)?],
                (None, None) => (2..=40)
                    .map(|l| Ok((l, total_cost(l)?)))
                    .collect::<anyhow::Result<_>>()?,
            };
            print_costs(&rows, csv);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_costs(rows: &[(u64, CostReport)], csv: bool) {
    if csv {
        println!("ell,buffer,fdls,switch,buffer_gt_fdls_cubed");
    } else {
        println!(
            "{:>4}  {:>16}  {:>6}  {:>6}  B* > M^3",
            "ell", "B*", "FDLs", "switch"
        );
    }
    for (ell, c) in rows {
        let beats = c.buffer > BigUint::from(c.fdl_count).pow(3);
        if csv {
            println!(
                "{ell},{},{},{},{beats}",
                c.buffer, c.fdl_count, c.switch_size
            );
        } else {
            println!(
                "{ell:>4}  {:>16}  {:>6}  {:>6}  {}",
                c.buffer,
                c.fdl_count,
                c.switch_size,
                if beats { "yes" } else { "no" }
            );
        }
    }
}
