// Simulate a self-exciting event stream, then recover its parameters by
// maximum likelihood.

use gchp::hawkes::{fit_mle, log_likelihood, simulate, FitConfig, HawkesParams};

pub fn run_example() -> gchp::Result<()> {
    let truth = HawkesParams::new(1.0, 0.5, 1.0)?;
    let events = simulate(&truth, 5_000.0, 42);
    println!(
        "{} events over {}s (expected about {:.0})",
        events.len(),
        events.horizon(),
        truth.expected_count(events.horizon())
    );

    let fit = fit_mle(&events, &FitConfig::default())?;
    let p = &fit.params;
    println!("fitted  λ₀={:.3} α={:.3} β={:.3} μ̂={:.3}", p.lambda0(), p.alpha(), p.beta(), p.branching_ratio());
    println!("truth   λ₀=1.000 α=0.500 β=1.000 μ̂=0.500");
    println!(
        "log-likelihood: fitted {:.1}, truth {:.1}",
        fit.log_likelihood,
        log_likelihood(&truth, &events)
    );
    Ok(())
}

fn main() -> gchp::Result<()> {
    run_example()
}
