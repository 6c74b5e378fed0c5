use std::time::Instant;

use hqrc::dynamics::{Reservoir, ReservoirParams};
use hqrc::operator::{random_state, StateKind};

fn main() {
    for (n, cut, inp) in [(3, 3, 2), (4, 3, 2), (3, 3, 9), (2, 3, 3), (3, 3, 3)] {
        let cfg = ReservoirParams { n_sites: n, site_cutoff: cut, input_cutoffs: vec![inp], ..Default::default() }
            .sample(1)
            .unwrap();
        let mut r = Reservoir::new(&cfg).unwrap();
        let t0 = Instant::now();
        r.warmup().unwrap();
        let tw = t0.elapsed();
        let beta = random_state(inp, 1, StateKind::Pure).unwrap();
        let t0 = Instant::now();
        for _ in 0..20 {
            r.step(0.5, Some(&beta)).unwrap();
        }
        println!("N={n} cut={cut} in={inp} D={} warmup {:?} step {:?}", cfg.space().total_dim(), tw, t0.elapsed() / 20);
    }
}
