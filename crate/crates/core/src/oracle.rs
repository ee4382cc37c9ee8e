//! Sequential reference results. `inputs[r]` is rank `r`'s send buffer; the
//! result holds rank `r`'s expected receive buffer, or `None` where the
//! collective leaves it unspecified (non-roots, exscan at rank 0).

use crate::element::Element;
use crate::ops::ReduceOp;

fn fold_ranks<T: Element>(inputs: &[Vec<T>], len: usize, op: &ReduceOp<T>) -> Vec<T> {
    let mut acc = inputs[0][..len].to_vec();
    for x in &inputs[1..] {
        op.fold_higher(&mut acc, &x[..len]);
    }
    acc
}

fn only_at<T>(p: usize, root: usize, v: Vec<T>) -> Vec<Option<Vec<T>>> {
    let mut out: Vec<Option<Vec<T>>> = (0..p).map(|_| None).collect();
    out[root] = Some(v);
    out
}

pub fn bcast<T: Element>(inputs: &[Vec<T>], count: usize, root: usize) -> Vec<Option<Vec<T>>> {
    vec![Some(inputs[root][..count].to_vec()); inputs.len()]
}

pub fn gather<T: Element>(inputs: &[Vec<T>], c: usize, root: usize) -> Vec<Option<Vec<T>>> {
    let all: Vec<T> = inputs.iter().flat_map(|x| x[..c].iter().copied()).collect();
    only_at(inputs.len(), root, all)
}

pub fn scatter<T: Element>(inputs: &[Vec<T>], c: usize, root: usize) -> Vec<Option<Vec<T>>> {
    (0..inputs.len()).map(|r| Some(inputs[root][r * c..(r + 1) * c].to_vec())).collect()
}

pub fn allgather<T: Element>(inputs: &[Vec<T>], c: usize) -> Vec<Option<Vec<T>>> {
    let all: Vec<T> = inputs.iter().flat_map(|x| x[..c].iter().copied()).collect();
    vec![Some(all); inputs.len()]
}

pub fn alltoall<T: Element>(inputs: &[Vec<T>], c: usize) -> Vec<Option<Vec<T>>> {
    let p = inputs.len();
    (0..p)
        .map(|r| Some((0..p).flat_map(|src| inputs[src][r * c..(r + 1) * c].iter().copied()).collect()))
        .collect()
}

pub fn reduce<T: Element>(inputs: &[Vec<T>], count: usize, op: &ReduceOp<T>, root: usize) -> Vec<Option<Vec<T>>> {
    only_at(inputs.len(), root, fold_ranks(inputs, count, op))
}

pub fn allreduce<T: Element>(inputs: &[Vec<T>], count: usize, op: &ReduceOp<T>) -> Vec<Option<Vec<T>>> {
    vec![Some(fold_ranks(inputs, count, op)); inputs.len()]
}

pub fn reduce_scatter_block<T: Element>(inputs: &[Vec<T>], c: usize, op: &ReduceOp<T>) -> Vec<Option<Vec<T>>> {
    let p = inputs.len();
    let all = fold_ranks(inputs, p * c, op);
    (0..p).map(|r| Some(all[r * c..(r + 1) * c].to_vec())).collect()
}

pub fn scan<T: Element>(inputs: &[Vec<T>], count: usize, op: &ReduceOp<T>) -> Vec<Option<Vec<T>>> {
    let mut acc = inputs[0][..count].to_vec();
    let mut out = vec![Some(acc.clone())];
    for x in &inputs[1..] {
        op.fold_higher(&mut acc, &x[..count]);
        out.push(Some(acc.clone()));
    }
    out
}

pub fn exscan<T: Element>(inputs: &[Vec<T>], count: usize, op: &ReduceOp<T>) -> Vec<Option<Vec<T>>> {
    let inclusive = scan(inputs, count, op);
    let mut out = vec![None];
    out.extend(inclusive.into_iter().take(inputs.len() - 1));
    out
}

/// Inclusive scan written as a sum over complete preceding nodes plus the
/// prefix of the own node, for a regular placement with `n` ranks per node.
pub fn scan_by_nodes<T: Element>(inputs: &[Vec<T>], count: usize, n: usize, op: &ReduceOp<T>) -> Vec<Vec<T>> {
    let p = inputs.len();
    (0..p)
        .map(|rank| {
            let (j, i) = (rank / n, rank % n);
            let mut terms = (0..j).flat_map(|jj| (0..n).map(move |ii| jj * n + ii)).chain((0..=i).map(|ii| j * n + ii));
            let mut acc = inputs[terms.next().expect("at least the own term")][..count].to_vec();
            for r in terms {
                op.fold_higher(&mut acc, &inputs[r][..count]);
            }
            acc
        })
        .collect()
}
