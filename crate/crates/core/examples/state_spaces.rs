// The four state constructions on one sample of price moves, plus the
// fitted transition matrix and its stationary law.

use gchp::states::{
    build_state_space, estimate_transition_matrix, stationary_distribution, ModelKind, PriceMoveSeries,
};

pub fn run_example() -> gchp::Result<()> {
    let deltas = vec![
        0.005, 0.01, -0.005, 0.005, -0.015, -0.005, 0.02, 0.005, -0.01, -0.005, 0.005, 0.015, -0.005, -0.02, 0.01,
    ];
    let moves = PriceMoveSeries::from_deltas(deltas.clone(), 0.01)?;
    for kind in ModelKind::ALL {
        let space = build_state_space(&moves, kind, Some(4))?;
        let labels = space.classify_all(&deltas)?;
        let p = estimate_transition_matrix(&labels, space.len())?;
        let pi = stationary_distribution(&p)?;
        println!("{kind}: values {:?}", space.values());
        println!("  stationary {:?}", pi.probabilities());
    }
    Ok(())
}

fn main() -> gchp::Result<()> {
    run_example()
}
