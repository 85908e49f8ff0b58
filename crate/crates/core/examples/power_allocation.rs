//! Window power allocation against equal split and the water-filling oracle.

use irs_hst::power::{allocate_window, waterfill_oracle, PaSettings};

fn main() -> irs_hst::Result<()> {
    // Gain over noise of ten consecutive frames, 1/W: the train approaches the
    // base station and then moves away.
    let gains: Vec<f64> = (0..10).map(|k| 40.0 / (1.0 + (k as f64 - 4.5).powi(2))).collect();
    let avg = 0.1;
    let w = allocate_window(&gains, avg, &PaSettings::default())?;
    let oracle = waterfill_oracle(&gains, avg * gains.len() as f64);

    println!("frame     gain   power   oracle");
    for (k, ((g, p), o)) in gains.iter().zip(&w.powers).zip(&oracle).enumerate() {
        println!("{k:>5} {g:>8.3} {p:>7.4} {o:>8.4}");
    }
    let equal: f64 = gains.iter().map(|g| (1.0 + avg * g).log2()).sum();
    println!("sum rate: allocated {:.4}, equal split {equal:.4}", w.sum_rate());
    println!(
        "multiplier iterations {} (converged: {}), rate before projection {:.4}",
        w.iterations,
        w.converged,
        w.raw_sum_rate()
    );
    Ok(())
}
