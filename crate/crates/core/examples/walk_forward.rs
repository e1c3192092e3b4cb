// Walk-forward backtest of one synthetic trading day with 3h/2h windows
// stepped hourly, scored with the 3-class and 2-class labels.

use gchp::calibration::CalibrationConfig;
use gchp::generator::GchpGenerator;
use gchp::hawkes::{FitConfig, HawkesParams};
use gchp::predict::{confusion_csv, report_metrics, walk_forward, Method, PredictConfig};
use gchp::states::{ModelKind, TransitionMatrix};

pub fn run_example() -> gchp::Result<()> {
    let p = TransitionMatrix::from_probabilities(vec![vec![0.6, 0.4], vec![0.45, 0.55]])?;
    let generator = GchpGenerator::new(HawkesParams::new(0.1, 0.05, 0.1)?, 0.01, vec![0.005, -0.005], p, None, 100.0)?;
    let day = generator.simulate("demo", 8.0 * 3600.0, 9)?;
    let cal = CalibrationConfig {
        fit: FitConfig {
            starts: 4,
            ..FitConfig::default()
        },
        ..CalibrationConfig::default()
    };
    for method in [Method::DiffusiveMean, Method::MonteCarlo] {
        let cfg = PredictConfig {
            method,
            seed: 3,
            ..PredictConfig::default()
        };
        let report = walk_forward(&day, &cfg, &[ModelKind::TwoSdo, ModelKind::FourDo], &cal)?;
        println!("{method}:");
        for r in &report.records {
            println!(
                "  window {} ({}) true Δ {:+.3} predicted Δ {:+.3}  {:?}/{:?}",
                r.window, r.kind, r.delta_true, r.delta_pred, r.class3_true, r.class3_pred
            );
        }
        let m = report_metrics(&report)?;
        println!("  3-class accuracy {:.2}, 2-class accuracy {:.2}", m.accuracy3, m.accuracy2);
        print!("{}", confusion_csv(&report));
    }
    Ok(())
}

fn main() -> gchp::Result<()> {
    run_example()
}
