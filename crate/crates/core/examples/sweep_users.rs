//! Sum rate versus passengers per cluster, written as CSV to stdout.

use irs_hst::harness::{run_sweep, write_csv, Axis, Scheme, SweepSpec};
use irs_hst::scenario::ScenarioConfig;

fn main() -> irs_hst::Result<()> {
    let cfg = ScenarioConfig {
        irs_elements: 16,
        ..ScenarioConfig::default()
    };
    let spec = SweepSpec {
        axis: Axis::UsersPerCluster,
        values: vec![2.0, 4.0, 6.0, 8.0],
        trials: 20,
        schemes: vec![Scheme::Proposed, Scheme::Rps, Scheme::NoIrs],
        seed: 2024,
        workers: None,
    };
    let result = run_sweep(&spec, &cfg)?;
    write_csv(&result, &mut std::io::stdout()).expect("stdout");
    Ok(())
}
