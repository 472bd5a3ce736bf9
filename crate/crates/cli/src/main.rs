use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rknn_core::data::{load_path, write_cache, write_dimacs_co};
use rknn_core::parallel::default_workers;
use rknn_core::{EarlyTermination, PruningStrategy};
use rknn_cli::bench::run_algo;
use rknn_cli::{
    load_instance, run_bench, run_stats, run_verify, write_csv, write_json, Algo, BenchConfig, GenSpec,
    Instance, InstanceSpec, Source, VerifyConfig,
};

#[derive(Parser)]
#[command(name = "rknn", version, about = "Reverse k-nearest-neighbor queries by vertical ray casting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time each algorithm over sampled queries and write one row per run.
    Bench(BenchArgs),
    /// Compare every algorithm against the brute-force oracle.
    Verify(VerifyArgs),
    /// Occluder counts, zone size and BVH shape for one query.
    Stats(StatsArgs),
    /// Print the result user ids of a single query.
    Query(QueryArgs),
    /// Convert a DIMACS .co file to the binary point cache.
    Ingest { input: PathBuf, output: PathBuf },
    /// Write a synthetic dataset.
    Gen(GenArgs),
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// DIMACS .co file or binary point cache.
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    dataset: Option<PathBuf>,
    /// Synthetic source: uniform:N or clusters:N[:COUNT[:SPREAD]].
    #[arg(long)]
    gen: Option<GenSpec>,
    #[arg(long, default_value_t = InstanceSpec::DEFAULT_GEN_SEED)]
    gen_seed: u64,
    /// Number of points drawn as facilities; the rest are users.
    #[arg(long, default_value_t = 100)]
    facilities: usize,
    #[arg(long, default_value_t = InstanceSpec::DEFAULT_FACILITY_SEED)]
    facility_seed: u64,
    #[arg(long, default_value_t = 10)]
    queries: usize,
    #[arg(long, default_value_t = InstanceSpec::DEFAULT_QUERY_SEED)]
    query_seed: u64,
    /// Worker threads for the per-user phase.
    #[arg(long, env = "RKNN_THREADS")]
    threads: Option<usize>,
}

impl InstanceArgs {
    fn load(&self) -> Result<Instance> {
        let source = match (&self.dataset, self.gen) {
            (Some(p), _) => Source::Path(p.clone()),
            (None, Some(g)) => Source::Gen(g),
            (None, None) => unreachable!("clap requires one source"),
        };
        let inst = load_instance(&InstanceSpec {
            source,
            gen_seed: self.gen_seed,
            facilities: self.facilities,
            facility_seed: self.facility_seed,
            queries: self.queries,
            query_seed: self.query_seed,
        })?;
        eprintln!(
            "# dataset={} facilities={} users={} queries={} sampling={} query_seed={}",
            inst.label,
            inst.facilities().len(),
            inst.users().len(),
            inst.queries.len(),
            inst.sampling,
            self.query_seed
        );
        Ok(inst)
    }

    fn workers(&self) -> usize {
        self.threads.filter(|&t| t > 0).unwrap_or_else(default_workers)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_delimiter = ',', default_value = "10")]
    k: Vec<u32>,
    /// exact, conservative[:N] or none.
    #[arg(long, default_value = "exact")]
    strategy: PruningStrategy,
    #[arg(long, value_delimiter = ',', default_value = "rtrknn")]
    algo: Vec<Algo>,
    /// Untimed runs before measuring each (algo, k).
    #[arg(long, default_value_t = 0)]
    warmup: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_delimiter = ',', default_value = "10")]
    k: Vec<u32>,
    /// Baselines checked alongside rtrknn.
    #[arg(long, value_delimiter = ',', default_value = "infzone,slice")]
    algo: Vec<Algo>,
    /// Print one line per (method, k, query).
    #[arg(long)]
    verbose: bool,
    /// Stop rays one hit early. Test fixture for the negative control.
    #[arg(long, hide = true)]
    break_early_termination: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 10)]
    k: u32,
    /// Strategies to report; all three by default.
    #[arg(long, value_delimiter = ',', default_value = "exact,conservative,none")]
    strategy: Vec<PruningStrategy>,
    /// Append the scene and BVH dump.
    #[arg(long)]
    dump: bool,
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 10)]
    k: u32,
    #[arg(long, default_value = "exact")]
    strategy: PruningStrategy,
    #[arg(long, default_value = "rtrknn")]
    algo: Algo,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenFormat {
    Co,
    Cache,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    gen: GenSpec,
    #[arg(long, default_value_t = InstanceSpec::DEFAULT_GEN_SEED)]
    gen_seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = GenFormat::Co)]
    format: GenFormat,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn bench(a: BenchArgs) -> Result<ExitCode> {
    let inst = a.instance.load()?;
    let rows = run_bench(
        &inst,
        &BenchConfig {
            ks: a.k,
            algos: a.algo,
            strategy: a.strategy,
            workers: a.instance.workers(),
            warmup: a.warmup,
        },
    )?;
    let mut w = output(&a.out)?;
    match a.format {
        Format::Csv => write_csv(&rows, &mut w)?,
        Format::Json => write_json(&rows, &mut w)?,
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let inst = a.instance.load()?;
    let report = run_verify(
        &inst,
        &VerifyConfig {
            ks: a.k,
            baselines: a.algo,
            workers: a.instance.workers(),
            early_termination: if a.break_early_termination {
                EarlyTermination::OffByOne
            } else {
                EarlyTermination::Enabled
            },
        },
    )?;
    for line in &report.lines {
        if a.verbose || !line.ends_with(" 0 mismatches") {
            println!("{line}");
        }
    }
    println!("{}", report.summary());
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn stats(a: StatsArgs) -> Result<ExitCode> {
    let inst = a.instance.load()?;
    print!("{}", run_stats(&inst, a.k, &a.strategy, a.dump)?);
    Ok(ExitCode::SUCCESS)
}

fn query(a: QueryArgs) -> Result<ExitCode> {
    let inst = a.instance.load()?;
    let mut out = BufWriter::new(io::stdout().lock());
    for &q in &inst.queries {
        let r = run_algo(a.algo, &inst, q, a.k, a.strategy, EarlyTermination::Enabled, a.instance.workers())?;
        eprintln!(
            "# query facility {q}: {} results, {} occluders, {:.3} ms",
            r.result_user_ids.len(),
            r.occluders_accepted,
            r.timings.total_ms
        );
        let ids: Vec<String> = r.result_user_ids.iter().map(usize::to_string).collect();
        writeln!(out, "{q}: {}", ids.join(" "))?;
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn ingest(input: PathBuf, output_path: PathBuf) -> Result<ExitCode> {
    let ds = load_path(&input).with_context(|| format!("reading {}", input.display()))?;
    let mut w = output(&Some(output_path))?;
    write_cache(&ds.points, &mut w)?;
    w.flush()?;
    eprintln!("# {} points", ds.len());
    Ok(ExitCode::SUCCESS)
}

fn gen(a: GenArgs) -> Result<ExitCode> {
    let ds = a.gen.generate(a.gen_seed);
    let mut w = output(&Some(a.out))?;
    match a.format {
        GenFormat::Co => write_dimacs_co(&ds, &mut w)?,
        GenFormat::Cache => write_cache(&ds.points, &mut w)?,
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bench(a) => bench(a),
        Command::Verify(a) => verify(a),
        Command::Stats(a) => stats(a),
        Command::Query(a) => query(a),
        Command::Ingest { input, output } => ingest(input, output),
        Command::Gen(a) => gen(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
