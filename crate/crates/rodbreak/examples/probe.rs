// temporary probe: minus-sine breaking run at N=256
use rodbreak::field::Grid;
use rodbreak::profiles::odd_sine;
use rodbreak::solver::{run, SimulationConfig};
use std::f64::consts::PI;

fn main() {
    for (cfl, dealias) in [(0.3, true), (0.15, true), (0.3, false)] {
        let g = Grid::new(2.0 * PI, 256).unwrap();
        let mut config = SimulationConfig::new(1.0, g, 3.5);
        config.cfl_factor = cfl;
        config.dt_initial = cfl * g.spacing();
        config.blowup_slope_threshold = 1e9; // never fires; watch the whole arc
        config.dealias = dealias;
        let u0 = odd_sine(-1.0, 1, g).unwrap();
        let r = run(&config, &u0).unwrap();
        let e0 = r.invariant_series[0].1.e;
        println!("== cfl={cfl} dealias={dealias}  frames={}", r.frames.len());
        let mut last_drift = 0.0;
        let mut printed = std::collections::BTreeSet::new();
        for (k, (t, g_min)) in r.min_slope_series.iter().enumerate() {
            let drift = (r.invariant_series[k].1.e - e0).abs() / e0;
            let bucket = (-g_min).floor() as i64;
            if bucket >= 2 && printed.insert(bucket) {
                println!("  t={t:.4} min_ux={g_min:.3} Edrift={drift:.2e}");
            }
            last_drift = drift;
        }
        let worst = r.min_slope_series.iter().map(|(_, g)| *g).fold(f64::INFINITY, f64::min);
        println!("  deepest slope {worst:.3}, final E drift {last_drift:.2e}");
    }
}
