use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lanecoll::dispatch::{Collective, Impl};
use lanecoll_cli::bench::{default_exec, parse_collective};
use lanecoll_cli::{emit_csv, emit_table, launch, sim, BenchConfig, BenchKind, CliError, Output, Result, Row, Transport};

#[derive(Parser)]
#[command(name = "lanecoll", version, about = "Lane collective benchmarks and the k-lane simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a benchmark.
    Bench(BenchArgs),
    /// Run the k-lane model simulator.
    #[command(subcommand)]
    Sim(SimCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Lane,
    Multicoll,
    Coll,
}

#[derive(Clone, Copy, ValueEnum)]
enum ImplArg {
    Base,
    Lane,
    Hier,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransportArg {
    Thread,
    Tcp,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputArg {
    Csv,
    Table,
}

#[derive(Args)]
struct BenchArgs {
    kind: KindArg,
    /// Number of nodes (N).
    #[arg(long)]
    nodes: usize,
    /// Processes per node (n).
    #[arg(long)]
    ppn: usize,
    /// Virtual lanes (k); defaults to n.
    #[arg(long)]
    lanes: Option<usize>,
    #[arg(long)]
    count: usize,
    #[arg(long, value_parser = parse_collective, default_value = "bcast")]
    coll: Collective,
    /// Implementation; all available ones when omitted.
    #[arg(long = "impl")]
    imp: Option<ImplArg>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 5)]
    warmup: usize,
    /// Exchanges per repetition in the lane pattern.
    #[arg(long, default_value_t = 50)]
    inner: usize,
    #[arg(long, value_enum, default_value = "thread")]
    transport: TransportArg,
    #[arg(long, env = "LANECOLL_RENDEZVOUS")]
    rendezvous: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    output: OutputArg,
    /// Rank of this process in a TCP run.
    #[arg(long, env = "LANECOLL_RANK", hide = true)]
    rank: Option<usize>,
}

#[derive(Subcommand)]
enum SimCmd {
    /// Pipelined broadcast over the replicated path.
    Pipeline {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        k: usize,
        /// Total message size in elements.
        #[arg(long)]
        c: usize,
        /// Pipeline block size in elements.
        #[arg(long)]
        block: usize,
    },
}

impl BenchArgs {
    fn config(&self) -> BenchConfig {
        let kind = match self.kind {
            KindArg::Lane => BenchKind::Lane,
            KindArg::Multicoll => BenchKind::Multicoll,
            KindArg::Coll => BenchKind::Coll,
        };
        let mut cfg = BenchConfig::new(kind, self.nodes, self.ppn, self.count);
        cfg.lanes = self.lanes.unwrap_or(self.ppn);
        cfg.coll = self.coll;
        cfg.imp = self.imp.map(|i| match i {
            ImplArg::Base => Impl::Base,
            ImplArg::Lane => Impl::Lane,
            ImplArg::Hier => Impl::Hier,
        });
        cfg.reps = self.reps;
        cfg.warmup = self.warmup;
        cfg.inner_iters = self.inner;
        cfg.transport = match self.transport {
            TransportArg::Thread => Transport::Thread,
            TransportArg::Tcp => Transport::Tcp,
        };
        cfg.seed = self.seed;
        cfg.output = match self.output {
            OutputArg::Csv => Output::Csv,
            OutputArg::Table => Output::Table,
        };
        cfg
    }
}

fn print_rows(cfg: &BenchConfig, rows: &[Row]) -> Result<()> {
    let scale = match cfg.transport {
        Transport::Thread => "desk-scale timings over the thread transport",
        Transport::Tcp => "desk-scale timings over loopback TCP",
    };
    let notes = [scale.to_string(), "processes are not pinned".to_string()];
    match cfg.output {
        Output::Csv => {
            for n in &notes {
                eprintln!("# {n}");
            }
            print!("{}", emit_csv(rows)?);
        }
        Output::Table => print!("{}", emit_table(rows, &notes)),
    }
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<i32> {
    let cfg = args.config();
    cfg.validate()?;
    match (cfg.transport, args.rank) {
        (Transport::Thread, _) => {
            print_rows(&cfg, &launch::run_on_threads(&cfg, &default_exec)?)?;
            Ok(0)
        }
        (Transport::Tcp, Some(rank)) => {
            let addr = args.rendezvous.as_deref().ok_or_else(|| CliError::Config("a TCP rank needs --rendezvous".into()))?;
            if let Some(rows) = launch::run_as_rank(&cfg, rank, addr, &default_exec)? {
                print_rows(&cfg, &rows)?;
            }
            Ok(0)
        }
        (Transport::Tcp, None) => {
            let addr = match &args.rendezvous {
                Some(a) => a.clone(),
                None => launch::free_rendezvous()?,
            };
            let forwarded: Vec<String> = std::env::args().skip(1).collect();
            launch::spawn_ranks(cfg.p(), &forwarded, &addr)
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Bench(args) => bench(&args),
        Cmd::Sim(SimCmd::Pipeline { p, k, c, block }) => {
            print!("{}", sim::emit(&sim::sim_pipeline(p, k, c, block)?));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code.clamp(0, 255) as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
