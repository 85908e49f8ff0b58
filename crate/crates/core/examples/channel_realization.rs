//! Draws one frame's channels and reports link strengths and geometry.
//!
//! ```bash
//! cargo run --release --example channel_realization
//! ```

use irs_hst::channel::synthesize_frame;
use irs_hst::numerics::{norm, RngStream};
use irs_hst::scenario::{build_schedule, distance_bs_irs, ScenarioConfig};

fn main() -> irs_hst::Result<()> {
    let cfg = ScenarioConfig::default();
    let sched = build_schedule(&cfg)?;
    println!(
        "{} frames per transit, {:.1} m per frame, serving frames {:?}",
        sched.total_frames,
        sched.frame_advance,
        sched.served_frames()
    );

    for k in [
        *sched.served_frames().start(),
        sched.center_frame(),
        *sched.served_frames().end(),
    ] {
        let ch = synthesize_frame(&cfg, &sched, k, &mut RngStream::new(7, k as u64))?;
        println!(
            "frame {k}: BS-surface {:.2} m, |G|_F = {:.3e}, surface at ({})",
            distance_bs_irs(&sched, &cfg, k)?,
            ch.g.frobenius_norm(),
            ch.irs_position
        );
        for (i, (v, h)) in ch.v.iter().zip(&ch.direct).enumerate() {
            let d = ch.user_positions[i].distance(ch.irs_position);
            println!(
                "  passenger {i}: {d:.2} m from the surface, |v| = {:.3e}, |h_direct| = {:.3e}",
                norm(v),
                norm(h)
            );
        }
    }
    Ok(())
}
