//! Served-window throughput against train speed, with and without power
//! allocation.

use irs_hst::harness::{run_throughput_experiment, Scheme};
use irs_hst::scenario::ScenarioConfig;

fn main() -> irs_hst::Result<()> {
    let mut cfg = ScenarioConfig {
        irs_elements: 16,
        ..ScenarioConfig::default()
    };
    let trials = 10;
    println!("speed_kmh  equal_split  allocated  gain");
    for speed in [200.0, 300.0, 400.0, 500.0, 600.0] {
        cfg.train_speed = speed;
        let (mut eq, mut pa) = (0.0, 0.0);
        for t in 0..trials {
            let o = run_throughput_experiment(&cfg, &[Scheme::Proposed], true, 5, t)?;
            eq += o[0].equal_split;
            pa += o[0].throughput();
        }
        println!(
            "{speed:>9}  {:>11.4}  {:>9.4}  {:>4.1}%",
            eq / trials as f64,
            pa / trials as f64,
            100.0 * (pa / eq - 1.0)
        );
    }
    Ok(())
}
