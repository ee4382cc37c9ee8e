//! Per-rank benchmark bodies. Every rank runs the same function; the rows
//! it returns are identical on all ranks.

use std::time::Instant;

use lanecoll::basecoll::alltoall;
use lanecoll::dispatch::{expected, generate_inputs, initial_recv, run_case, Case, Collective};
use lanecoll::{lanes, Comm, Int, View, ViewMut};

use crate::config::{BenchConfig, BenchKind};
use crate::error::{CliError, Result};
use crate::pattern;
use crate::report::Row;
use crate::stats::summarize;

/// Executes one collective case; swapped out in tests.
pub type Exec<'a> = dyn Fn(&Comm, &Case, &[Int], &mut [Int]) -> lanecoll::Result<()> + Sync + 'a;

pub fn default_exec(comm: &Comm, case: &Case, input: &[Int], recv: &mut [Int]) -> lanecoll::Result<()> {
    run_case(comm, case, input, recv)
}

/// Completion times in microseconds: each repetition starts after a
/// barrier and counts as long as its slowest rank took.
pub fn time_reps(comm: &Comm, reps: usize, mut body: impl FnMut() -> Result<()>) -> Result<Vec<f64>> {
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        comm.barrier()?;
        let start = Instant::now();
        body()?;
        let ns = start.elapsed().as_nanos() as u64;
        times.push(comm.agree_max(ns)? as f64 / 1000.0);
    }
    Ok(times)
}

/// True on every rank iff it is true on every rank.
fn all_agree(comm: &Comm, ok: bool) -> Result<bool> {
    Ok(comm.agree_max(u64::from(!ok))? == 0)
}

pub fn bench_rank(comm: &Comm, cfg: &BenchConfig, exec: &Exec<'_>) -> Result<Vec<Row>> {
    cfg.validate()?;
    if comm.size() != cfg.p() {
        return Err(CliError::Config(format!("{} ranks for a {}x{} layout", comm.size(), cfg.nodes, cfg.ppn)));
    }
    match cfg.kind {
        BenchKind::Lane => lane_pattern(comm, cfg),
        BenchKind::Multicoll => multicoll(comm, cfg),
        BenchKind::Coll => collective(comm, cfg, exec),
    }
}

fn row(cfg: &BenchConfig, imp: &str, times: &[f64], verified: bool) -> Result<Row> {
    let s = summarize(times, cfg.warmup)?;
    Ok(Row {
        imp: imp.to_string(),
        k: cfg.lanes,
        n: cfg.ppn,
        nodes: cfg.nodes,
        p: cfg.p(),
        c: cfg.count,
        avg_us: s.avg_us,
        min_us: s.min_us,
        verified,
    })
}

fn lane_pattern(comm: &Comm, cfg: &BenchConfig) -> Result<Vec<Row>> {
    let (n, c, k, p, rank) = (cfg.ppn, cfg.count, cfg.lanes, comm.size(), comm.rank());
    let stamp = |r: usize| -> Vec<Int> { (0..c).map(|x| (r * 7919 + x) as Int).collect() };
    let buf = stamp(rank);
    let mine = pattern::count_for(rank % n, c, k);
    let mut ok = true;
    if mine > 0 {
        let (dst, src) = pattern::partners(rank, n, p);
        let got = comm.sendrecv(dst, &buf[..mine], src, 3)?;
        ok = got == stamp(src)[..mine];
    }
    if !all_agree(comm, ok)? {
        return Err(CliError::Verification { coll: "lane-pattern".into(), imp: "pattern".into() });
    }
    let times = time_reps(comm, cfg.reps, || pattern::exchange(comm, n, c, k, cfg.inner_iters, &buf))?;
    Ok(vec![row(cfg, "pattern", &times, true)?])
}

fn multicoll(comm: &Comm, cfg: &BenchConfig) -> Result<Vec<Row>> {
    let d = lanes(comm)?;
    let lane = &d.lanecomm;
    let (big_n, me) = (lane.size(), lane.rank());
    let block = cfg.count / big_n;
    let active = d.coords.noderank < cfg.lanes;
    let value = |src: usize, dst: usize, x: usize| (src * 131 + dst * 7 + x) as Int;
    let send: Vec<Int> = (0..big_n * block).map(|i| value(me, i / block.max(1), i % block.max(1))).collect();
    let mut recv = vec![0 as Int; big_n * block];
    let run = |recv: &mut [Int]| -> Result<()> {
        if active {
            alltoall(lane, View::slice(&send), block, ViewMut::slice(recv), block)?;
        }
        Ok(())
    };
    run(&mut recv)?;
    let want: Vec<Int> = (0..big_n * block).map(|i| value(i / block.max(1), me, i % block.max(1))).collect();
    if !all_agree(comm, !active || recv == want)? {
        return Err(CliError::Verification { coll: "alltoall".into(), imp: "multicoll".into() });
    }
    let times = time_reps(comm, cfg.reps, || run(&mut recv))?;
    Ok(vec![row(cfg, "multicoll", &times, true)?])
}

fn collective(comm: &Comm, cfg: &BenchConfig, exec: &Exec<'_>) -> Result<Vec<Row>> {
    let (p, rank) = (comm.size(), comm.rank());
    let imps: Vec<_> = match cfg.imp {
        Some(i) => vec![i],
        None => cfg.coll.implementations().to_vec(),
    };
    let inputs = generate_inputs::<Int>(cfg.coll, p, cfg.count, 0, cfg.seed);
    let mut rows = Vec::new();
    for imp in imps {
        let case = Case::new(cfg.coll, imp, cfg.count);
        let mut recv = initial_recv::<Int>(&case, p, rank);
        exec(comm, &case, &inputs[rank], &mut recv)?;
        let ok = recv == expected(&case, &inputs)[rank];
        if !all_agree(comm, ok)? {
            return Err(CliError::Verification { coll: cfg.coll.to_string(), imp: imp.to_string() });
        }
        let times = time_reps(comm, cfg.reps, || {
            exec(comm, &case, &inputs[rank], &mut recv)?;
            Ok(())
        })?;
        rows.push(row(cfg, imp.name(), &times, true)?);
    }
    Ok(rows)
}

/// Collectives accepted on the command line.
pub fn parse_collective(s: &str) -> std::result::Result<Collective, String> {
    s.parse().map_err(|e: lanecoll::Error| e.to_string())
}
