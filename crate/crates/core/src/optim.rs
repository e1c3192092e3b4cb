//! Box-constrained Nelder-Mead and deterministic multi-start seeding.
//!
//! Trial points are clipped into the box before evaluation, so the simplex
//! can collapse onto a face when the optimum sits on a bound (for example a
//! branching ratio of zero for Poisson data).

use rand::Rng as _;

use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub fn new(lower: f64, upper: f64) -> Self {
        assert!(lower <= upper, "empty bounds [{lower}, {upper}]");
        Self { lower, upper }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn clip(&self, x: f64) -> f64 {
        x.clamp(self.lower, self.upper)
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadConfig {
    /// Initial simplex edge as a fraction of each box width.
    pub initial_step: f64,
    pub max_evals: usize,
    /// Convergence on the spread of objective values across the simplex.
    pub f_tol: f64,
    /// Convergence on the simplex diameter, relative to each box width.
    pub x_tol: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            max_evals: 3000,
            f_tol: 1e-10,
            x_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

fn clip_point(x: &mut [f64], bounds: &[Bounds]) {
    for (xi, b) in x.iter_mut().zip(bounds) {
        *xi = b.clip(*xi);
    }
}

/// Minimizes `f` over the box from `start`. The returned value is never
/// worse than `f(clip(start))`.
///
/// A converged simplex is rebuilt around its best vertex and searched again
/// until a restart no longer improves the value; clipping can flatten the
/// simplex against a bound before the free coordinates have settled.
pub fn nelder_mead<F>(mut f: F, start: &[f64], bounds: &[Bounds], cfg: &NelderMeadConfig) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    const MAX_RESTARTS: usize = 5;
    let mut best = nelder_mead_once(&mut f, start, bounds, cfg, cfg.max_evals);
    for _ in 0..MAX_RESTARTS {
        if !best.converged || best.evals >= cfg.max_evals {
            break;
        }
        let budget = cfg.max_evals - best.evals;
        let next = nelder_mead_once(&mut f, &best.x, bounds, cfg, budget);
        let improved = next.value < best.value - cfg.f_tol * (1.0 + best.value.abs());
        let evals = best.evals + next.evals;
        if next.value <= best.value {
            best = Minimum { evals, ..next };
        } else {
            best.evals = evals;
        }
        if !improved {
            break;
        }
    }
    best
}

fn nelder_mead_once<F>(f: &mut F, start: &[f64], bounds: &[Bounds], cfg: &NelderMeadConfig, max_evals: usize) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = start.len();
    assert_eq!(dim, bounds.len());
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut x0 = start.to_vec();
    clip_point(&mut x0, bounds);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let f0 = eval(&x0, &mut evals);
    simplex.push((x0.clone(), f0));
    for i in 0..dim {
        let mut xi = x0.clone();
        let step = cfg.initial_step * bounds[i].width();
        // step away from whichever bound is closer
        if xi[i] + step <= bounds[i].upper {
            xi[i] += step;
        } else {
            xi[i] -= step;
        }
        clip_point(&mut xi, bounds);
        let fi = eval(&xi, &mut evals);
        simplex.push((xi, fi));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;

    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));

        let f_best = simplex[0].1;
        let f_worst = simplex[dim].1;
        let f_spread = (f_worst - f_best).abs();
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .zip(bounds)
                    .map(|((a, b), bd)| {
                        let w = bd.width().max(f64::MIN_POSITIVE);
                        ((a - b) / w).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if f_spread <= cfg.f_tol * (1.0 + f_best.abs()) && diameter <= cfg.x_tol {
            converged = true;
            break;
        }
        if f_spread == 0.0 && diameter == 0.0 {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / dim as f64;
            }
        }
        let along = |coef: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| c + coef * (c - w))
                .collect();
            clip_point(&mut p, bounds);
            p
        };

        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(alpha * gamma);
            let fe = eval(&xe, &mut evals);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[dim].1 {
            let xc = along(alpha * rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < simplex[dim].1.min(fr) {
            simplex[dim] = (xc, fc);
            continue;
        }
        // shrink toward the best vertex
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let mut p: Vec<f64> = best
                .iter()
                .zip(&vertex.0)
                .map(|(b, v)| b + sigma * (v - b))
                .collect();
            clip_point(&mut p, bounds);
            let fp = eval(&p, &mut evals);
            *vertex = (p, fp);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        evals,
        converged,
    }
}

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut index: u64, base: u32, perm: &[u32]) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        let digit = (index % b) as usize;
        out += perm[digit] as f64 * scale;
        index /= b;
        scale *= inv;
    }
    out
}

/// `count` points in `[0,1)^dim` from a digit-permuted Halton sequence.
/// The permutations come from `seed`, so the set is fixed for a given seed.
pub fn scrambled_halton(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
    let mut rng = rng_from_seed(seed);
    let perms: Vec<Vec<u32>> = PRIMES[..dim]
        .iter()
        .map(|&base| {
            // keep 0 fixed so the digit expansion stays finite
            let mut p: Vec<u32> = (0..base).collect();
            for i in (2..base as usize).rev() {
                let j = rng.random_range(1..=i);
                p.swap(i, j);
            }
            p
        })
        .collect();
    (1..=count as u64)
        .map(|i| {
            PRIMES[..dim]
                .iter()
                .zip(&perms)
                .map(|(&base, perm)| radical_inverse(i, base, perm))
                .collect()
        })
        .collect()
}

/// Maps unit-cube points into the box.
pub fn scale_to_box(unit: &[f64], bounds: &[Bounds]) -> Vec<f64> {
    unit.iter()
        .zip(bounds)
        .map(|(u, b)| b.lower + u * b.width())
        .collect()
}
