//! Starting the ranks of a benchmark on threads or on OS processes.

use std::net::TcpListener;
use std::process::Command;

use lanecoll::transport::{tcp, thread::run_threads};
use lanecoll::NodeMap;

use crate::bench::{bench_rank, Exec};
use crate::config::BenchConfig;
use crate::error::{CliError, Result};
use crate::report::Row;

fn first_error(results: Vec<Result<Vec<Row>>>) -> Result<Vec<Row>> {
    let mut rows = None;
    let mut err: Option<CliError> = None;
    for (rank, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) if rank == 0 => rows = Some(v),
            Ok(_) => {}
            Err(e) => {
                // a verification failure explains the run better than its fallout
                if err.as_ref().is_none_or(|old| old.exit_code() < e.exit_code()) {
                    err = Some(e);
                }
            }
        }
    }
    match err {
        Some(e) => Err(e),
        None => Ok(rows.unwrap_or_default()),
    }
}

/// All ranks on threads of this process.
pub fn run_on_threads(cfg: &BenchConfig, exec: &Exec<'_>) -> Result<Vec<Row>> {
    let map = NodeMap::blocks(cfg.nodes, cfg.ppn);
    first_error(run_threads(map, |comm| bench_rank(&comm, cfg, exec)))
}

/// All ranks on threads of this process, talking over loopback sockets.
pub fn run_on_loopback(cfg: &BenchConfig, exec: &Exec<'_>) -> Result<Vec<Row>> {
    let map = NodeMap::blocks(cfg.nodes, cfg.ppn);
    first_error(tcp::run_local(map, |comm| bench_rank(&comm, cfg, exec))?)
}

/// This process is `rank` of a TCP fabric. Returns rows on rank 0 only.
pub fn run_as_rank(cfg: &BenchConfig, rank: usize, rendezvous: &str, exec: &Exec<'_>) -> Result<Option<Vec<Row>>> {
    let comm = tcp::join(rank, NodeMap::blocks(cfg.nodes, cfg.ppn), rendezvous)?;
    let rows = bench_rank(&comm, cfg, exec)?;
    comm.barrier()?;
    Ok((rank == 0).then_some(rows))
}

/// A free loopback address for the rendezvous.
pub fn free_rendezvous() -> Result<String> {
    Ok(TcpListener::bind("127.0.0.1:0")?.local_addr()?.to_string())
}

/// Re-runs this executable once per rank with `--rank r` appended and the
/// rendezvous in the environment. Returns the worst exit code.
pub fn spawn_ranks(p: usize, args: &[String], rendezvous: &str) -> Result<i32> {
    let exe = std::env::current_exe()?;
    let children: Vec<_> = (0..p)
        .map(|r| {
            Command::new(&exe)
                .args(args)
                .arg("--rank")
                .arg(r.to_string())
                .env(tcp::RENDEZVOUS_ENV, rendezvous)
                .spawn()
        })
        .collect::<std::io::Result<_>>()?;
    let mut worst = 0;
    for mut child in children {
        let status = child.wait()?;
        let code = status.code().ok_or_else(|| CliError::Launch(format!("rank terminated by signal: {status}")))?;
        worst = worst.max(code);
    }
    Ok(worst)
}
