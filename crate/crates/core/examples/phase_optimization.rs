//! Alternating beam and discrete phase design on one frame, with its trace.

use irs_hst::channel::synthesize_frame;
use irs_hst::numerics::RngStream;
use irs_hst::optimizer::{alternating_optimize, quantization_bounds, Codebook};
use irs_hst::scenario::{build_schedule, ScenarioConfig};

fn main() -> irs_hst::Result<()> {
    let cfg = ScenarioConfig {
        irs_elements: 16,
        ..ScenarioConfig::default()
    };
    let sched = build_schedule(&cfg)?;
    let ch = synthesize_frame(&cfg, &sched, sched.center_frame(), &mut RngStream::new(3, 0))?;
    let out = alternating_optimize(&ch, &cfg)?;

    println!(
        "rate {:.4} bit/s/Hz (continuous relaxation {:.4})",
        out.rate, out.continuous_rate
    );
    println!("{} iterations, converged: {}", out.iterations, out.converged);
    out.write_trace(&mut std::io::stdout()).expect("stdout");

    let cb = Codebook::new(cfg.quant_bits)?;
    let phases = out.phases.phases();
    let levels = out.phases.levels().expect("discrete design");
    println!("element  level  phase  bracket");
    for (m, ((phase, level), (lo, hi))) in phases
        .iter()
        .zip(levels)
        .zip(quantization_bounds(&phases, cb))
        .enumerate()
    {
        println!("{m:>7}  {level:>5}  {phase:>5.3}  [{lo:.3}, {hi:.3}]");
    }
    Ok(())
}
