//! Every scheme on the same channels, averaged over a few trials.

use irs_hst::harness::{run_frame_experiment, Scheme};
use irs_hst::scenario::ScenarioConfig;

fn main() -> irs_hst::Result<()> {
    let cfg = ScenarioConfig {
        irs_elements: 16,
        ..ScenarioConfig::default()
    };
    let schemes = [Scheme::Proposed, Scheme::Nce, Scheme::Sr, Scheme::Rps, Scheme::NoIrs];
    let trials = 20;
    let mut totals = [0.0; 5];
    for t in 0..trials {
        for (sum, o) in totals.iter_mut().zip(run_frame_experiment(&cfg, &schemes, 1, t)?) {
            *sum += o.rate;
        }
    }
    for (s, total) in schemes.iter().zip(totals) {
        println!("{:<15} {:.4} bit/s/Hz", s.name(), total / trials as f64);
    }
    Ok(())
}
