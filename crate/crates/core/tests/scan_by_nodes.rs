mod common;

use common::on_nodes;
use lanecoll::basecoll::SendBuf;
use lanecoll::{hiercoll, lanecoll as lc, oracle, ReduceOp};
use proptest::prelude::*;

fn check(nodes: usize, ppn: usize, count: usize, inputs: &[Vec<i64>]) {
    let want = oracle::scan_by_nodes(inputs, count, ppn, &ReduceOp::sum());
    let (out, _) = on_nodes(nodes, ppn, |comm| {
        let x = &inputs[comm.rank()];
        let mut lane = vec![0; count];
        lc::scan_lane(comm, SendBuf::slice(x), &mut lane, count, &ReduceOp::sum()).unwrap();
        let mut hier = x.clone();
        hiercoll::scan_hier(comm, SendBuf::InPlace, &mut hier, count, &ReduceOp::sum()).unwrap();
        (lane, hier)
    });
    for (r, (lane, hier)) in out.into_iter().enumerate() {
        assert_eq!(lane, want[r], "lane rank {r}");
        assert_eq!(hier, want[r], "hier rank {r}");
    }
}

#[test]
fn ranks_as_inputs() {
    let inputs: Vec<Vec<i64>> = (0..6).map(|r| vec![r]).collect();
    check(3, 2, 1, &inputs);
    assert_eq!(oracle::scan_by_nodes(&inputs, 1, 2, &ReduceOp::sum())[3], vec![6]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_inputs(nodes in 1usize..=6, ppn in 1usize..=6, count in 1usize..9, seed in any::<u64>()) {
        let p = nodes * ppn;
        let mut s = seed;
        let inputs: Vec<Vec<i64>> = (0..p)
            .map(|_| (0..count).map(|_| { s = s.wrapping_mul(6364136223846793005).wrapping_add(1); (s >> 40) as i64 - (1 << 23) }).collect())
            .collect();
        check(nodes, ppn, count, &inputs);
    }
}
