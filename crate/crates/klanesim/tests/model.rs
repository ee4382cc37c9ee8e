use klanesim::*;
use proptest::prelude::*;

#[test]
fn replicated_pipeline_matches_closed_form_everywhere() {
    for k in [1, 2, 4] {
        for m in 2..=16 {
            for blocks in 1..=32 {
                let block = 2;
                let (p, c) = (m * k, blocks * k * block);
                let cfg = KLaneConfig::new(p, k, c, block).unwrap();
                let trace = simulate_broadcast(&build_pipeline_replica(p, k).unwrap(), &cfg).unwrap();
                let t = t_klane(p, k, c, block).unwrap();
                assert_eq!(trace.step_count(), t, "p={p} k={k} c={c}");
                let reduced = t_single(m, c / k, block).unwrap() + 3 * block as u64;
                assert_eq!(trace.step_count(), reduced);
            }
        }
    }
}

#[test]
fn node_volumes() {
    for k in [1, 2, 3, 4] {
        for m in 2..=6 {
            let (p, c) = (m * k, 12 * k);
            let cfg = KLaneConfig::new(p, k, c, 3).unwrap();
            let trace = simulate_broadcast(&build_pipeline_replica(p, k).unwrap(), &cfg).unwrap();
            let c = c as u64;
            let k = k as u64;
            assert_eq!(trace.node_ingress[0], (k - 1) * c / k);
            assert!(trace.node_ingress[1..].iter().all(|&x| x == c));
            assert!(trace.node_egress[..m - 1].iter().all(|&x| x == c));
            assert_eq!(trace.node_egress[m - 1], (k - 1) * c / k);
        }
    }
}

#[test]
fn speedup_approaches_k() {
    assert_eq!(t_single(16, 1024, 1).unwrap(), 1038);
    assert_eq!(t_klane(16, 2, 1024, 1).unwrap(), 521);
    for k in [2, 4] {
        let c = 1024 * k;
        let ratio = t_single(16, c, 1).unwrap() as f64 / t_klane(16, k, c, 1).unwrap() as f64;
        assert!(ratio >= 0.95 * k as f64, "k={k} ratio {ratio}");
    }
}

#[test]
fn transform_within_twice_the_kported_steps() {
    for k in [2, 4] {
        for p in (k..=64).step_by(k) {
            let trace = simulate_kported_transform(p, k, 100).unwrap();
            assert!(trace.rounds() <= 2 * kported_baseline_steps(p, k), "p={p} k={k}: {}", trace.rounds());
            assert!(trace.node_ingress[1..].iter().all(|&x| x >= 100));
        }
    }
}

#[test]
fn replays_are_identical() {
    let cfg = KLaneConfig::new(12, 3, 36, 2).unwrap();
    let g = build_pipeline_replica(12, 3).unwrap();
    assert_eq!(simulate_broadcast(&g, &cfg).unwrap(), simulate_broadcast(&g, &cfg).unwrap());
}

proptest! {
    #[test]
    fn every_step_is_legal_and_complete(k in 1usize..6, m in 2usize..10, blocks in 1usize..12, block in 1usize..4) {
        let (p, c) = (m * k, blocks * k * block);
        let cfg = KLaneConfig::new(p, k, c, block).unwrap();
        let g = build_pipeline_replica(p, k).unwrap();
        g.check().unwrap();
        let trace = simulate_broadcast(&g, &cfg).unwrap();
        for step in &trace.steps {
            let mut sends = vec![0; p];
            let mut recvs = vec![0; p];
            for t in &step.offnode {
                sends[t.from] += 1;
                recvs[t.to] += 1;
                prop_assert_ne!(g.node_of(t.from), g.node_of(t.to));
            }
            prop_assert!(sends.iter().chain(&recvs).all(|&x| x <= 1));
            for t in &step.onnode {
                prop_assert_eq!(g.node_of(t.from), g.node_of(t.to));
            }
        }
        let received: usize = trace.steps.iter().map(|s| s.offnode.len() + s.onnode.len()).sum();
        // every non-root vertex receives every block exactly once
        prop_assert_eq!(received, (p - 1) * k * blocks);
    }
}
