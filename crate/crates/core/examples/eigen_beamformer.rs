//! Optimal transmit beam for fixed phases, checked against random beams.

use irs_hst::channel::synthesize_frame;
use irs_hst::numerics::{cdot, normalize, RngStream, C64};
use irs_hst::optimizer::{effective_channels, optimal_beamformer};
use irs_hst::scenario::{build_schedule, ScenarioConfig};

fn main() -> irs_hst::Result<()> {
    let cfg = ScenarioConfig::default();
    let sched = build_schedule(&cfg)?;
    let k = sched.center_frame();
    let ch = synthesize_frame(&cfg, &sched, k, &mut RngStream::new(11, 0))?;

    let theta = vec![C64::new(1.0, 0.0); ch.irs_elements()];
    let best = optimal_beamformer(&theta, &ch);
    let b = effective_channels(&theta, &ch);
    let gain = |f: &[C64]| b.iter().map(|bi| cdot(bi, f).norm_sqr()).sum::<f64>();

    let mut rng = RngStream::new(11, 1);
    let mut best_random = 0.0f64;
    for _ in 0..1000 {
        let mut f = rng.cn01_vec(ch.bs_antennas());
        normalize(&mut f);
        best_random = best_random.max(gain(&f));
    }
    println!("eigen beam gain      {:.6e}", best.gain);
    println!("best of 1000 random  {best_random:.6e}");
    println!("ratio                {:.2}", best.gain / best_random);
    Ok(())
}
