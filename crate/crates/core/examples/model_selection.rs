// Fit every model kind to one synthetic session and pick the one whose
// empirical volatility curve best matches its diffusive limit.

use gchp::calibration::{select_model, summarize, summary_csv, CalibrationConfig};
use gchp::generator::GchpGenerator;
use gchp::hawkes::{FitConfig, HawkesParams};
use gchp::states::{ModelKind, TransitionMatrix};

pub fn run_example() -> gchp::Result<()> {
    let p = TransitionMatrix::from_probabilities(vec![
        vec![0.3, 0.3, 0.2, 0.2],
        vec![0.2, 0.3, 0.3, 0.2],
        vec![0.1, 0.2, 0.4, 0.3],
        vec![0.25, 0.25, 0.25, 0.25],
    ])?;
    let generator = GchpGenerator::new(
        HawkesParams::new(0.5, 0.25, 0.5)?,
        0.01,
        vec![0.01, 0.005, -0.005, -0.015],
        p,
        None,
        100.0,
    )?;
    let mid = generator.simulate("demo", 6.0 * 3600.0, 1)?;
    let cal = CalibrationConfig {
        fit: FitConfig {
            starts: 4,
            ..FitConfig::default()
        },
        ..CalibrationConfig::default()
    };
    let report = select_model(&mid, &ModelKind::ALL, &cal)?;
    println!("{} events", report.events);
    for k in &report.kinds {
        println!(
            "{:<9} empirical √c={:.5} model={:.5} error rate {:.3}",
            k.kind.to_string(),
            k.regression.c.sqrt(),
            k.regression.theoretical,
            k.regression.error_rate
        );
    }
    println!("chosen: {}", report.chosen);
    print!("{}", summary_csv(&summarize(&[report])));
    Ok(())
}

fn main() -> gchp::Result<()> {
    run_example()
}
