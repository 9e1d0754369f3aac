// Scratch investigation binary; removed before release.
use bsf::graph::max_spanning_tree;
use bsf::instances::{generate, InstanceSpec};
use bsf::mip::{solve_mip, MipSpec, DEFAULT_GAP_TOL};
use bsf::models::{build_flow_maxmin, MaxMinMode};
use std::time::Duration;

fn main() {
    for seed in 0..40u64 {
        let spec = InstanceSpec::new(
            5 + (seed % 4) as usize,
            0.7,
            2 + (seed % 2) as usize,
            0xaa00 + seed,
        );
        let Ok((g, k)) = generate(&spec) else { continue };
        let u = max_spanning_tree(&g).unwrap().weight();
        for mode in [MaxMinMode::BigM, MaxMinMode::Theta] {
            let model = build_flow_maxmin(&g, k, u, mode).unwrap();
            let spec2 = MipSpec::new(model.lp.clone(), model.integers.clone());
            match solve_mip(spec2, Duration::from_secs(60), DEFAULT_GAP_TOL) {
                Ok(r) => println!(
                    "seed {seed} {mode:?}: status {:?} obj {:?} nodes {}",
                    r.status, r.objective, r.nodes
                ),
                Err(e) => {
                    println!("seed {seed} {mode:?}: ERROR {e} (n={} m={} k={k} u={u})", g.n(), g.m());
                }
            }
        }
    }
}
