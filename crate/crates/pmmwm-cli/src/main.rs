//! Command-line front end: generate instance suites, solve single
//! instances, benchmark both solver variants, and verify solutions.
//!
//! Exit codes: 0 success, 1 failed verification, 2 parse error,
//! 3 infeasible input, 4 internal error.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use pmmwm::instances::{
    expand_grid, generate, instance_filename, read_instance, read_solution, write_instance,
    write_solution, Family, GenSpec, Instance,
};
use pmmwm::problem::{validate_solution, Matching, Partition, Solution, ValidationReport};
use pmmwm::solver::{run, IterationTrace, SolverConfig, Variant};
use pmmwm::{Error, Result};

#[derive(Parser)]
#[command(
    name = "pmmwm",
    version,
    about = "Min-max weighted matching-and-partitioning toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a reproducible instance suite and its manifest.
    Generate(GenerateArgs),
    /// Solve one instance and write a solution file plus a JSON summary.
    Solve(SolveArgs),
    /// Solve a manifest under each variant and emit timing records.
    Bench(BenchArgs),
    /// Check a solution file against its instance.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Family tag (bps10, bps50, bps80, rand, sparse30, sparse60,
    /// sparse90) or 'all'.
    #[arg(long)]
    family: String,
    /// Left-side sizes, comma separated (e.g. 20,50,100).
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Master seed mixed into every instance's stream seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Instances per (family, n, m, ubar) cell.
    #[arg(long, default_value_t = 1)]
    replicates: u32,
    /// Output directory (created if missing).
    #[arg(long, default_value = "instances")]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, default_value = "mp-km-m")]
    variant: String,
    /// Stop after this many consecutive non-improving iterations.
    #[arg(long, default_value_t = 20)]
    patience: usize,
    /// Penalized edges weigh this many times the heaviest weight.
    #[arg(long, default_value_t = 100)]
    penalty_factor: i64,
    /// Solution file path (default: instance path with extension .sol).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Manifest written by `generate` (or hand-rolled, same columns).
    #[arg(long)]
    manifest: PathBuf,
    /// Variants to run, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [String::from("mp-ls"), String::from("mp-km-m")])]
    variants: Vec<String>,
    /// Concurrent solves; keep at 1 for publishable timing ratios.
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    /// Per-run records file.
    #[arg(long, default_value = "bench.csv")]
    out: PathBuf,
    /// Records format.
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
    /// Optional per-iteration stage-1 timing series (CSV).
    #[arg(long)]
    stage1_series: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    patience: usize,
    #[arg(long, default_value_t = 100)]
    penalty_factor: i64,
}

#[derive(Args)]
struct VerifyArgs {
    instance: PathBuf,
    solution: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(args) => cmd_generate(&args),
        Command::Solve(args) => cmd_solve(&args),
        Command::Bench(args) => cmd_bench(&args),
        Command::Verify(args) => cmd_verify(&args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code(&err));
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::AtIteration { source, .. } => exit_code(source),
        Error::Parse { .. } => 2,
        Error::Infeasible(_)
        | Error::InfeasibleMatching(_)
        | Error::IsolatedVertex(_)
        | Error::GridExhausted { .. } => 3,
        _ => 4,
    }
}

fn parse_family_list(arg: &str) -> Result<Vec<Family>> {
    if arg.eq_ignore_ascii_case("all") {
        return Ok(Family::ALL.to_vec());
    }
    Ok(vec![arg.to_ascii_lowercase().parse()?])
}

fn cmd_generate(args: &GenerateArgs) -> Result<i32> {
    let families = parse_family_list(&args.family)?;
    std::fs::create_dir_all(&args.out)?;
    let manifest_path = args.out.join("manifest.tsv");
    let mut manifest = BufWriter::new(File::create(&manifest_path)?);
    writeln!(manifest, "path\tfamily\tn\tm\tubar\treplicate")?;

    for &family in &families {
        for &n in &args.n {
            for replicate in 0..args.replicates {
                let spec = GenSpec {
                    family,
                    n,
                    master_seed: args.seed,
                    replicate,
                };
                let graph = generate(&spec)?;
                for (m, ubar) in expand_grid(n) {
                    let name = instance_filename(&spec, m, ubar);
                    let inst = Instance {
                        graph: graph.clone(),
                        m,
                        ubar,
                    };
                    write_instance(&args.out.join(&name), &inst)?;
                    writeln!(manifest, "{name}\t{family}\t{n}\t{m}\t{ubar}\t{replicate}")?;
                    println!("{}", args.out.join(&name).display());
                }
            }
        }
    }
    manifest.flush()?;
    println!("manifest: {}", manifest_path.display());
    Ok(0)
}

fn solver_config(variant: &str, patience: usize, penalty_factor: i64) -> Result<SolverConfig> {
    Ok(SolverConfig {
        variant: variant.parse()?,
        patience,
        penalty_factor,
    })
}

fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let inst = read_instance(&args.instance)?;
    let config = solver_config(&args.variant, args.patience, args.penalty_factor)?;
    let (solution, trace) = run(&inst.graph, inst.m, inst.ubar, &config)?;

    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.instance.with_extension("sol"));
    write_solution(&out, &solution)?;

    let (s1, s2, s3) = trace.stage_totals_ns();
    let summary = serde_json::json!({
        "instance": args.instance.display().to_string(),
        "solution": out.display().to_string(),
        "variant": config.variant.tag(),
        "objective": solution.objective.to_string(),
        "iterations": trace.iterations(),
        "stage1_ns": s1,
        "stage2_ns": s2,
        "stage3_ns": s3,
        "total_ns": s1 + s2 + s3,
    });
    println!("{summary}");
    Ok(0)
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let inst = read_instance(&args.instance)?;
    let g = &inst.graph;
    let raw = read_solution(&args.solution, g.n1)?;

    let mut match_of_v = vec![None; g.n2];
    for (u, &v) in raw.match_of_u.iter().enumerate() {
        if v < g.n2 && match_of_v[v].is_none() {
            match_of_v[v] = Some(u);
        }
    }
    let solution = Solution {
        matching: Matching {
            match_of_u: raw.match_of_u.into_iter().map(Some).collect(),
            match_of_v,
        },
        partition: Partition::new(raw.part_of_u, inst.m, inst.ubar),
        objective: raw.objective,
    };
    match validate_solution(g, &solution) {
        ValidationReport::Pass => {
            println!("ok");
            Ok(0)
        }
        ValidationReport::Fail(violation) => {
            println!("{violation}");
            Ok(1)
        }
    }
}

/// One manifest line: where the instance lives and how to label records.
struct ManifestRow {
    path: PathBuf,
    family: String,
    n: usize,
    m: usize,
    ubar: usize,
    replicate: u32,
}

fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for (idx, text) in reader.lines().enumerate() {
        let line = idx + 1;
        let text = text?;
        if idx == 0 || text.trim().is_empty() {
            continue; // header
        }
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 6 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 6 tab-separated fields, found {}", fields.len()),
            });
        }
        let num = |tok: &str, what: &str| -> Result<usize> {
            tok.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("invalid {what} '{tok}'"),
            })
        };
        rows.push(ManifestRow {
            path: base.join(fields[0]),
            family: fields[1].to_string(),
            n: num(fields[2], "n")?,
            m: num(fields[3], "m")?,
            ubar: num(fields[4], "ubar")?,
            replicate: num(fields[5], "replicate")? as u32,
        });
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: "manifest lists no instances".into(),
        });
    }
    Ok(rows)
}

struct BenchOutcome {
    objective: String,
    iterations: usize,
    stage1_ns: u64,
    stage2_ns: u64,
    stage3_ns: u64,
    total_ns: u64,
    status: String,
    trace: Option<IterationTrace>,
}

fn bench_one(row: &ManifestRow, variant: Variant, args: &BenchArgs) -> BenchOutcome {
    let failed = |e: &Error| BenchOutcome {
        objective: String::new(),
        iterations: 0,
        stage1_ns: 0,
        stage2_ns: 0,
        stage3_ns: 0,
        total_ns: 0,
        status: format!("error: {e}").replace(',', ";"),
        trace: None,
    };
    let inst = match read_instance(&row.path) {
        Ok(inst) => inst,
        Err(e) => return failed(&e),
    };
    let config = SolverConfig {
        variant,
        patience: args.patience,
        penalty_factor: args.penalty_factor,
    };
    let started = Instant::now();
    match run(&inst.graph, inst.m, inst.ubar, &config) {
        Ok((solution, trace)) => {
            let total_ns = started.elapsed().as_nanos() as u64;
            let (s1, s2, s3) = trace.stage_totals_ns();
            BenchOutcome {
                objective: solution.objective.to_string(),
                iterations: trace.iterations(),
                stage1_ns: s1,
                stage2_ns: s2,
                stage3_ns: s3,
                total_ns,
                status: "ok".into(),
                trace: Some(trace),
            }
        }
        Err(e) => failed(&e),
    }
}

const CSV_HEADER: &str =
    "family,n,m,ubar,replicate,variant,objective,iterations,stage1_ns,stage2_ns,stage3_ns,total_ns,status";

fn cmd_bench(args: &BenchArgs) -> Result<i32> {
    let rows = read_manifest(&args.manifest)?;
    let variants: Vec<Variant> = args
        .variants
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_>>()?;

    // (row, variant) tasks, variants innermost so paired records sit
    // next to each other in the output.
    let tasks: Vec<(usize, Variant)> = (0..rows.len())
        .flat_map(|i| variants.iter().map(move |&v| (i, v)))
        .collect();

    // One process-wide warmup solve, excluded from every record: the
    // first timed run would otherwise pay for page faults and frequency
    // ramp-up.
    let _ = bench_one(&rows[0], variants[0], args);

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, BenchOutcome)>> = Mutex::new(Vec::with_capacity(tasks.len()));
    std::thread::scope(|scope| {
        for _ in 0..args.parallelism.max(1) {
            scope.spawn(|| loop {
                let t = next.fetch_add(1, Ordering::Relaxed);
                if t >= tasks.len() {
                    break;
                }
                let (row_idx, variant) = tasks[t];
                let outcome = bench_one(&rows[row_idx], variant, args);
                results.lock().unwrap().push((t, outcome));
            });
        }
    });
    let mut outcomes = results.into_inner().unwrap();
    outcomes.sort_by_key(|&(t, _)| t);

    // Per-run records.
    let mut record_lines = Vec::with_capacity(tasks.len());
    let mut json_records = Vec::with_capacity(tasks.len());
    for ((row_idx, variant), outcome) in tasks.iter().zip(outcomes.iter().map(|(_, o)| o)) {
        let row = &rows[*row_idx];
        record_lines.push(format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.family,
            row.n,
            row.m,
            row.ubar,
            row.replicate,
            variant,
            outcome.objective,
            outcome.iterations,
            outcome.stage1_ns,
            outcome.stage2_ns,
            outcome.stage3_ns,
            outcome.total_ns,
            outcome.status
        ));
        if args.format == "json" {
            json_records.push(serde_json::json!({
                "family": row.family,
                "n": row.n,
                "m": row.m,
                "ubar": row.ubar,
                "replicate": row.replicate,
                "variant": variant.tag(),
                "objective": outcome.objective,
                "iterations": outcome.iterations,
                "stage1_ns": outcome.stage1_ns,
                "stage2_ns": outcome.stage2_ns,
                "stage3_ns": outcome.stage3_ns,
                "total_ns": outcome.total_ns,
                "status": outcome.status,
            }));
        }
    }
    let mut out = BufWriter::new(File::create(&args.out)?);
    if args.format == "json" {
        serde_json::to_writer_pretty(&mut out, &json_records)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        writeln!(out)?;
    } else {
        writeln!(out, "{CSV_HEADER}")?;
        for line in &record_lines {
            writeln!(out, "{line}")?;
        }
    }
    out.flush()?;

    // Optional per-iteration stage-1 series.
    if let Some(series_path) = &args.stage1_series {
        let mut series = BufWriter::new(File::create(series_path)?);
        writeln!(
            series,
            "family,n,m,ubar,replicate,variant,iteration,stage1_ns"
        )?;
        for ((row_idx, variant), outcome) in tasks.iter().zip(outcomes.iter().map(|(_, o)| o)) {
            let row = &rows[*row_idx];
            if let Some(trace) = &outcome.trace {
                for r in &trace.records {
                    writeln!(
                        series,
                        "{},{},{},{},{},{},{},{}",
                        row.family,
                        row.n,
                        row.m,
                        row.ubar,
                        row.replicate,
                        variant,
                        r.iteration,
                        r.stage1_ns
                    )?;
                }
            }
        }
        series.flush()?;
    }

    // Aggregate mean runtime per (family, n, variant) and the ratio of
    // the two standard variants where both are present.
    let mut groups: BTreeMap<(String, usize, String), (u64, u64)> = BTreeMap::new();
    for ((row_idx, variant), outcome) in tasks.iter().zip(outcomes.iter().map(|(_, o)| o)) {
        if outcome.status != "ok" {
            continue;
        }
        let row = &rows[*row_idx];
        let entry = groups
            .entry((row.family.clone(), row.n, variant.tag().to_string()))
            .or_insert((0, 0));
        entry.0 += outcome.total_ns;
        entry.1 += 1;
    }
    let mean = |family: &str, n: usize, variant: Variant| -> Option<f64> {
        groups
            .get(&(family.to_string(), n, variant.tag().to_string()))
            .map(|&(sum, count)| sum as f64 / count as f64)
    };
    let mut keys: Vec<(String, usize)> = groups.keys().map(|(f, n, _)| (f.clone(), *n)).collect();
    keys.dedup();
    println!("family     n      mean_mp_ls_ns   mean_mp_km_m_ns   ls_over_km_m");
    for (family, n) in keys {
        let ls = mean(&family, n, Variant::MpLs);
        let kmm = mean(&family, n, Variant::MpKmM);
        let fmt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.0}"));
        let ratio = match (ls, kmm) {
            (Some(a), Some(b)) if b > 0.0 => format!("{:.2}", a / b),
            _ => "-".to_string(),
        };
        println!(
            "{family:<10} {n:<6} {:<15} {:<17} {ratio}",
            fmt(ls),
            fmt(kmm)
        );
    }
    println!("records: {}", args.out.display());

    let failures = outcomes.iter().filter(|(_, o)| o.status != "ok").count();
    if failures > 0 {
        eprintln!(
            "{failures} of {} runs failed; see the status column",
            tasks.len()
        );
    }
    Ok(0)
}
