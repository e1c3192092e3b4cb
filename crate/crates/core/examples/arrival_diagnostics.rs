// Clustering diagnostics: ranked inter-arrival fits on fast-decaying
// self-excitation, then window counts and lagged count correlation on
// Poisson and slowly decaying streams.

use gchp::diagnostics::{autocorrelation, fit_interarrival_distributions, window_counts};
use gchp::hawkes::{simulate, HawkesParams};

pub fn run_example() -> gchp::Result<()> {
    let fast = simulate(&HawkesParams::new(1.0, 0.5, 1.0)?, 50_000.0, 3);
    let fits = fit_interarrival_distributions(&fast)?;
    println!("inter-arrival fits, {} events:", fast.len());
    for f in &fits.ranked {
        println!("  {:<12} ks {:.4} score {:.4}", format!("{:?}", f.fitted.family()), f.ks_distance, f.score);
    }

    let streams = [
        ("poisson", HawkesParams::poisson(0.2)?),
        ("slow hawkes", HawkesParams::new(0.1, 0.005, 0.01)?),
    ];
    for (name, params) in streams {
        let events = simulate(&params, 24_000.0, 3);
        let counts = window_counts(&events, 60.0)?;
        let var = counts.counts.iter().map(|c| (*c as f64 - counts.mean()).powi(2)).sum::<f64>()
            / counts.counts.len() as f64;
        println!("{name}: {} events, per-minute mean {:.2} variance {:.2}", events.len(), counts.mean(), var);
        for row in autocorrelation(&events, 60.0, &[60.0, 600.0, 3000.0])? {
            let band = 3.0 / (row.pairs as f64).sqrt();
            match row.value() {
                Some(c) => println!("  C(60, {:>4}) = {c:+.3}  (noise band ±{band:.3})", row.delta),
                None => println!("  C(60, {:>4}) unavailable", row.delta),
            }
        }
    }
    Ok(())
}

fn main() -> gchp::Result<()> {
    run_example()
}
