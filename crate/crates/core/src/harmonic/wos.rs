//! Walk-on-spheres sampling of the exit distribution of Brownian motion.

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::MeasureEstimate;
use crate::error::{Error, Result};
use crate::geometry::sampling::unit_sphere;
use crate::geometry::{Ball, Domain, Point, PointIndex};
use crate::par::{self, Exec};

#[derive(Clone, Copy, Debug)]
pub struct WosConfig {
    /// Stopping distance; `None` means `1e-4` times the window diameter.
    pub tol: Option<f64>,
    pub max_steps: usize,
    /// Abort when more than this fraction of walks exhaust the step budget.
    pub max_failure_rate: f64,
    pub exec: Exec,
}

impl Default for WosConfig {
    fn default() -> Self {
        WosConfig {
            tol: None,
            max_steps: 100_000,
            max_failure_rate: 1e-3,
            exec: Exec::Parallel,
        }
    }
}

impl WosConfig {
    pub fn tol_for<const D: usize, Dm: Domain<D> + ?Sized>(&self, domain: &Dm) -> f64 {
        self.tol.unwrap_or_else(|| 1e-4 * domain.window().diameter())
    }
}

/// The random stream of walk `index` under `seed`. Streams are independent of
/// the order in which walks are run.
pub fn walk_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs one walk from `start` and returns the exit point and the step count.
pub fn wos_hit<const D: usize, Dm: Domain<D> + ?Sized>(
    domain: &Dm,
    start: &Point<D>,
    tol: f64,
    max_steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Point<D>, usize)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tol = {tol} must be positive")));
    }
    let mut x = *start;
    for step in 0..=max_steps {
        let s = domain.safe_radius(&x);
        if s < tol {
            let (p, d) = domain.nearest_boundary(&x);
            if d < tol || s <= 0.0 {
                return Ok((p, step));
            }
        }
        if step == max_steps {
            break;
        }
        x += unit_sphere::<D, _>(rng) * s;
    }
    Err(Error::StepBudget { steps: max_steps })
}

/// Exit points of `n` independent walks from one pole.
#[derive(Clone, Debug)]
pub struct ExitSample<const D: usize> {
    pub pole: Point<D>,
    pub seed: u64,
    pub tol: f64,
    /// `tol` plus the boundary representation's projection error.
    pub bias_bound: f64,
    pub walks: usize,
    pub failures: usize,
    pub mean_steps: f64,
    pub max_steps: usize,
    index: PointIndex<D>,
}

/// Runs `n` walks from `pole`; walk `i` uses stream `i` of `seed`.
pub fn sample_exits<const D: usize, Dm: Domain<D> + ?Sized>(
    domain: &Dm,
    pole: &Point<D>,
    n: usize,
    seed: u64,
    cfg: &WosConfig,
) -> Result<ExitSample<D>> {
    if !domain.contains(pole) || domain.safe_radius(pole) <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "pole {:?} is not inside the domain",
            pole.as_slice()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("need at least one walk".into()));
    }
    let tol = cfg.tol_for(domain);
    let runs = par::map_range(cfg.exec, n, |i| {
        let mut rng = walk_rng(seed, i as u64);
        wos_hit(domain, pole, tol, cfg.max_steps, &mut rng).ok()
    });
    let failures = runs.iter().filter(|r| r.is_none()).count();
    let rate = failures as f64 / n as f64;
    if rate > cfg.max_failure_rate {
        return Err(Error::FailureRate {
            rate,
            limit: cfg.max_failure_rate,
        });
    }
    let ok: Vec<(Point<D>, usize)> = runs.into_iter().flatten().collect();
    let total: usize = ok.iter().map(|r| r.1).sum();
    let max_steps = ok.iter().map(|r| r.1).max().unwrap_or(0);
    let mean_steps = total as f64 / ok.len().max(1) as f64;
    let bias_bound = tol + domain.projection_error();
    info!(
        "wos: {} walks, {failures} failures, mean steps {mean_steps:.1}, max {max_steps}, bias <= {bias_bound:.3e}",
        ok.len()
    );
    Ok(ExitSample {
        pole: *pole,
        seed,
        tol,
        bias_bound,
        walks: ok.len(),
        failures,
        mean_steps,
        max_steps,
        index: PointIndex::new(ok.into_iter().map(|r| r.0).collect()),
    })
}

impl<const D: usize> ExitSample<D> {
    pub fn exits(&self) -> &[Point<D>] {
        self.index.points()
    }

    /// Number of exits in the closed ball.
    pub fn hits(&self, ball: &Ball<D>) -> usize {
        self.index.within(ball).len()
    }

    /// Fraction of exits satisfying `pred`, with its binomial standard error.
    pub fn fraction<F: Fn(&Point<D>) -> bool>(&self, pred: F) -> (f64, f64) {
        let k = self.exits().iter().filter(|p| pred(p)).count();
        binomial(k, self.walks)
    }

    pub fn estimate(&self, xi: &Point<D>, r: f64) -> MeasureEstimate<D> {
        let (p, se) = binomial(self.hits(&Ball::new(*xi, r)), self.walks);
        MeasureEstimate {
            xi: *xi,
            r,
            omega_hat: p,
            stderr: se,
            n: self.walks,
            pole: self.pole,
            seed: self.seed,
        }
    }

    /// Scores every exit against every target (shared walks).
    pub fn estimate_all(&self, targets: &[(Point<D>, f64)], exec: Exec) -> Vec<MeasureEstimate<D>> {
        par::map_slice(exec, targets, |(xi, r)| self.estimate(xi, *r))
    }
}

pub(crate) fn binomial(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let p = k as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Runs `n` walks once and scores them against all targets.
pub fn estimate_omega<const D: usize, Dm: Domain<D> + ?Sized>(
    domain: &Dm,
    pole: &Point<D>,
    targets: &[(Point<D>, f64)],
    n: usize,
    seed: u64,
    cfg: &WosConfig,
) -> Result<Vec<MeasureEstimate<D>>> {
    let sample = sample_exits(domain, pole, n, seed, cfg)?;
    Ok(sample.estimate_all(targets, cfg.exec))
}
