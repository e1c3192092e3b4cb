// Drift and diffusion coefficients of the diffusive limit for a skewed
// two-state chain, under both volatility conventions.

use gchp::calibration::VolatilityConvention;
use gchp::hawkes::HawkesParams;
use gchp::limits::limit_params_from_values;
use gchp::states::{stationary_distribution, TransitionMatrix};

pub fn run_example() -> gchp::Result<()> {
    let p = TransitionMatrix::from_probabilities(vec![vec![0.7, 0.3], vec![0.4, 0.6]])?;
    let pi = stationary_distribution(&p)?;
    let hawkes = HawkesParams::new(1.0, 0.5, 1.0)?;
    let lp = limit_params_from_values(&[0.005, -0.005], &p, &pi, &hawkes)?;

    println!("π        = {:?}", pi.probabilities());
    println!("a*       = {:.6}", lp.a_star);
    println!("g        = {:?}", lp.g);
    println!("σ²       = {:.3e}", lp.sigma_sq);
    println!("σ*       = {:.6}", lp.sigma_star);
    println!("σ̄        = {:.6}", lp.sigma_bar);
    for c in [VolatilityConvention::Derived, VolatilityConvention::Printed] {
        println!("{c:?} volatility coefficient = {:.6}", c.coefficient(&lp, &hawkes));
    }
    Ok(())
}

fn main() -> gchp::Result<()> {
    run_example()
}
