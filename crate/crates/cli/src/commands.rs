//! Subcommands as sequences of stages writing into a [`Bundle`].

use anyhow::{bail, ensure, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use reifenberg::enlargement::{base_flatness, enlarge, verify_lemma23, EnlargeConfig, EnlargedDomain, Lemma23Report};
use reifenberg::flatness::{certify_domain, CertifySummary, FlatnessConfig, ProbePlan};
use reifenberg::geometry::domain::Interior;
use reifenberg::geometry::{point_from_slice, to_vec, Aabb, Ball, BallDomain, Domain, HalfSpace, Point};
use reifenberg::harmonic::{
    dimension_fit, dyadic_radii, estimates_csv, extract_singular_candidates, monotonicity_check, r_min_for_budget,
    sample_exits, tabulate, ExitSample, MeasureProvider, PointMass, WosConfig,
};
use reifenberg::measure::{box_count, koch_curve, sample_polyline, theorem31_sweep, Thm31Config};
use reifenberg::snowflake::{build_snowflake, BlipConfig, Snowflake};
use reifenberg::whitney::{decompose, WhitneyConfig};
use reifenberg::Exec;

use crate::bundle::{Bundle, RunManifest};
use crate::config::{BoxFixture, DomainKind, FlatnessTarget, RunConfig};
use crate::domains::AnyDomain;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Build the snowflake approximants and write one OFF mesh per generation.
    Snowflake,
    /// Whitney decomposition of the base domain with its property report.
    Whitney,
    /// Build the enlarged domain around E and check the local graph structure.
    Enlarge,
    /// Certify one-scale flatness of the base or the enlarged domain.
    Flatness,
    /// Walk-on-spheres harmonic measure estimates.
    Wos,
    /// Pointwise dimension fit and singular candidates.
    Dimension,
    /// Box-counting dimension of a fixture curve or surface.
    Boxcount,
    /// Patch area against measure across scales around E.
    Thm31,
    /// All stages from snowflake to the monotonicity check.
    Pipeline,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Snowflake => "snowflake",
            Command::Whitney => "whitney",
            Command::Enlarge => "enlarge",
            Command::Flatness => "flatness",
            Command::Wos => "wos",
            Command::Dimension => "dimension",
            Command::Boxcount => "boxcount",
            Command::Thm31 => "thm31",
            Command::Pipeline => "pipeline",
        }
    }
}

/// Runs `cmd` and writes the bundle. Stage failures leave a partial bundle
/// whose manifest names the stage.
pub fn execute(cmd: Command, cfg: &RunConfig) -> Result<RunManifest> {
    let mut b = Bundle::create(cfg, cmd.name())?;
    match cfg.dimension {
        2 => run::<2>(cmd, cfg, &mut b)?,
        3 => run::<3>(cmd, cfg, &mut b)?,
        d => bail!("dimension {d} unsupported"),
    }
    b.finish()
}

fn run<const D: usize>(cmd: Command, cfg: &RunConfig, b: &mut Bundle) -> Result<()> {
    match cmd {
        Command::Snowflake => {
            b.stage("snowflake", |b| snowflake_stage::<D>(cfg, b))?;
        }
        Command::Whitney => {
            let base = base_domain::<D>(cfg, b)?;
            b.stage("whitney", |b| whitney_stage(cfg, b, &base))?;
        }
        Command::Enlarge => {
            let base = base_domain::<D>(cfg, b)?;
            let e = e_points(cfg, &base, &[]);
            let plus = b.stage("enlarge", |b| {
                enlarge_stage(cfg, b, base, &e, cfg.enlargement.max_level)
            })?;
            b.stage("graph", |b| graph_stage(b, &plus))?;
        }
        Command::Flatness => {
            let base = base_domain::<D>(cfg, b)?;
            let e = e_points(cfg, &base, &[]);
            match cfg.flatness.target {
                FlatnessTarget::Base => {
                    let window = flatness_window(cfg, &base, &e);
                    b.stage("certify", |b| {
                        certify_stage(cfg, b, &base, base.r0(), window, cfg.flatness.delta_max)
                    })?;
                }
                FlatnessTarget::Enlarged => {
                    let plus = b.stage("enlarge", |b| {
                        enlarge_stage(cfg, b, base, &e, cfg.enlargement.max_level)
                    })?;
                    let window = flatness_window(cfg, &plus, &e);
                    let cap = cfg
                        .flatness
                        .delta_max
                        .unwrap_or(cfg.flatness.sqrt_eps_constant * cfg.enlargement.epsilon.sqrt());
                    b.stage("certify", |b| {
                        certify_stage(cfg, b, &plus, plus.r0(), window, Some(cap))
                    })?;
                }
            }
        }
        Command::Wos => {
            let base = base_domain::<D>(cfg, b)?;
            b.stage("estimate", |b| estimate_stage(cfg, b, &base))?;
        }
        Command::Dimension => {
            let base = base_domain::<D>(cfg, b)?;
            let (s, probes) = b.stage("estimate", |b| estimate_stage(cfg, b, &base))?;
            b.stage("dimension", |b| dimension_stage(cfg, b, &s, &base))?;
            b.stage("candidates", |b| candidates_stage(cfg, b, &s, &probes))?;
        }
        Command::Boxcount => {
            b.stage("boxcount", |b| boxcount_stage::<D>(cfg, b))?;
        }
        Command::Thm31 => {
            let base = base_domain::<D>(cfg, b)?;
            let e = e_points(cfg, &base, &[]);
            let ml = cfg.thm31.max_level.unwrap_or(cfg.enlargement.max_level);
            let plus = b.stage("enlarge", |b| enlarge_stage(cfg, b, base, &e, ml))?;
            let mu = PointMass { at: e[0], mass: 1.0 };
            b.stage("thm31", |b| thm31_stage(cfg, b, &plus, &mu))?;
        }
        Command::Pipeline => {
            let base = base_domain::<D>(cfg, b)?;
            let (s, probes) = b.stage("estimate", |b| estimate_stage(cfg, b, &base))?;
            b.stage("dimension", |b| dimension_stage(cfg, b, &s, &base))?;
            let cands = b.stage("candidates", |b| candidates_stage(cfg, b, &s, &probes))?;
            let e = e_points(cfg, &base, &cands);
            let ml = cfg.enlargement.max_level;
            let plus = b.stage("enlarge", |b| enlarge_stage(cfg, b, base.clone(), &e, ml))?;
            b.stage("graph", |b| graph_stage(b, &plus))?;
            let window = flatness_window(cfg, &plus, &e);
            let cap = cfg.flatness.sqrt_eps_constant * cfg.enlargement.epsilon.sqrt();
            b.stage("certify", |b| {
                certify_stage(cfg, b, &plus, plus.r0(), window, Some(cap))
            })?;
            // Singular candidates carry the lower density bound for `ω̂`
            // itself; otherwise a unit point mass on `E` stands in.
            b.stage("thm31", |b| {
                if cands.is_empty() {
                    thm31_stage(cfg, b, &plus, &PointMass { at: e[0], mass: 1.0 })
                } else {
                    thm31_stage(cfg, b, &plus, &s)
                }
            })?;
            b.stage("monotonicity", |b| monotonicity_stage(cfg, b, &base, &plus))?;
        }
    }
    Ok(())
}

fn point<const D: usize>(v: &[f64]) -> Point<D> {
    point_from_slice::<D>(v)
}

fn boxed<const D: usize>(c: &Point<D>, hw: f64) -> Aabb<D> {
    Aabb {
        lo: c - Point::<D>::repeat(hw),
        hi: c + Point::<D>::repeat(hw),
    }
}

fn blip_config(cfg: &RunConfig) -> BlipConfig {
    let s = &cfg.snowflake;
    BlipConfig {
        theta: s.theta,
        n: s.n,
        b: s.b,
        depth: s.depth,
        max_depth: s.max_depth,
        k_max: s.k_max,
        c_w: s.c_w,
        max_faces: s.max_faces,
        ..Default::default()
    }
}

#[derive(Serialize)]
struct GenerationSummary {
    index: usize,
    simplices: usize,
    cubes: usize,
    collar: usize,
    min_side: f64,
    max_side: f64,
    increment: Option<f64>,
}

#[derive(Serialize)]
struct SnowflakeSummary {
    n: u32,
    theta: f64,
    bounded: bool,
    template_children: usize,
    c_low: f64,
    c_high: f64,
    generations: Vec<GenerationSummary>,
    increment_ratios: Vec<f64>,
}

fn snowflake_stage<const D: usize>(cfg: &RunConfig, b: &mut Bundle) -> Result<Snowflake<D>> {
    let sf = build_snowflake::<D>(&blip_config(cfg), cfg.snowflake.bounded)?;
    for g in &sf.generations {
        b.write(&format!("snowflake/gen{}.off", g.index), &g.mesh().to_off_string())?;
        b.write(&format!("snowflake/gen{}_cubes.csv", g.index), &g.cubes_csv())?;
    }
    b.write("snowflake/collar.csv", &sf.last().collar_csv())?;
    let summary = SnowflakeSummary {
        n: sf.template.profile.n,
        theta: cfg.snowflake.theta,
        bounded: cfg.snowflake.bounded,
        template_children: sf.template.children.len(),
        c_low: sf.template.c_low,
        c_high: sf.template.c_high,
        generations: sf
            .generations
            .iter()
            .map(|g| GenerationSummary {
                index: g.index,
                simplices: g.mesh().len(),
                cubes: g.cubes.len(),
                collar: g.collar.len(),
                min_side: g.min_side(),
                max_side: g.max_side(),
                increment: g.increment,
            })
            .collect(),
        increment_ratios: sf.increment_ratios(),
    };
    b.json("snowflake/summary.json", &summary)?;
    let inc: Vec<(f64, f64)> = sf
        .generations
        .iter()
        .filter_map(|g| g.increment.map(|v| (g.index as f64, v)))
        .collect();
    if !inc.is_empty() {
        b.plot("snowflake/increments.dat", "generation dist_H increment", &inc)?;
    }
    b.constant("snowflake.N", summary.n as f64);
    b.constant("snowflake.c_low", summary.c_low);
    b.constant("snowflake.c_high", summary.c_high);
    Ok(sf)
}

fn base_domain<const D: usize>(cfg: &RunConfig, b: &mut Bundle) -> Result<AnyDomain<D>> {
    Ok(match cfg.domain {
        DomainKind::HalfSpace => AnyDomain::HalfSpace(HalfSpace::<D>::upper(4.0)),
        DomainKind::Ball => AnyDomain::Ball(BallDomain::<D>::unit()),
        DomainKind::Snowflake => {
            let sf = b.stage("snowflake", |b| snowflake_stage::<D>(cfg, b))?;
            AnyDomain::Mesh(sf.last().domain.clone())
        }
    })
}

/// Configured `E` projected onto `∂Ω`, or the boundary point nearest the
/// origin; singular candidates take precedence.
fn e_points<const D: usize>(cfg: &RunConfig, base: &AnyDomain<D>, candidates: &[Point<D>]) -> Vec<Point<D>> {
    if !candidates.is_empty() {
        return candidates.to_vec();
    }
    if cfg.enlargement.e.is_empty() {
        return vec![base.nearest_boundary(&Point::<D>::zeros()).0];
    }
    cfg.enlargement
        .e
        .iter()
        .map(|p| base.nearest_boundary(&point::<D>(p)).0)
        .collect()
}

#[derive(Serialize)]
struct WhitneyOut {
    cubes: usize,
    residual: usize,
    top_level: i32,
    report: reifenberg::whitney::WhitneyReport,
    doubled: reifenberg::whitney::WhitneyReport,
}

fn within(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

fn whitney_stage<const D: usize>(cfg: &RunConfig, b: &mut Bundle, base: &AnyDomain<D>) -> Result<()> {
    let set = Interior(base);
    let mut wc = WhitneyConfig::new(cfg.whitney.k, base.r0(), base.window());
    wc.max_level = cfg.whitney.max_level;
    let w = decompose(&set, &wc)?;
    let report = w.verify_properties(&set, cfg.whitney.probes);
    let doubled = w.verify_properties(&set, 2 * cfg.whitney.probes);
    b.write("whitney/cubes.txt", &w.to_text())?;
    let exact = report.maximality_violations == 0 && report.disjointness_violations == 0;
    b.certify(
        "whitney.structure",
        exact && report.covering_failures == 0,
        format!(
            "maximality {}, disjointness {}, covering {}",
            report.maximality_violations, report.disjointness_violations, report.covering_failures
        ),
    );
    let stable = within(report.a_min, doubled.a_min, 0.1)
        && within(report.a_max, doubled.a_max, 0.1)
        && within(report.b_max_ratio, doubled.b_max_ratio, 0.1)
        && within(report.c_max_overlap as f64, doubled.c_max_overlap as f64, 0.1);
    b.certify(
        "whitney.stability",
        stable,
        format!(
            "a [{:.3}, {:.3}] vs [{:.3}, {:.3}]",
            report.a_min, report.a_max, doubled.a_min, doubled.a_max
        ),
    );
    b.constant("whitney.a_min", report.a_min);
    b.constant("whitney.a_max", report.a_max);
    b.constant("whitney.b_max_ratio", report.b_max_ratio);
    b.constant("whitney.c_max_overlap", report.c_max_overlap as f64);
    b.json(
        "whitney/report.json",
        &WhitneyOut {
            cubes: w.cubes.len(),
            residual: w.residual.len(),
            top_level: w.top_level,
            report,
            doubled,
        },
    )
}

#[derive(Serialize)]
struct EnlargeSummary {
    epsilon: f64,
    k: f64,
    balls: usize,
    e: Vec<Vec<f64>>,
    c_low: f64,
    c_high: f64,
    cloud_points: usize,
    cloud_cover: f64,
    base_delta: f64,
    e_membership_failures: usize,
    e_clearance_violations: usize,
    lipschitz_excess: f64,
}

fn enlarge_stage<const D: usize>(
    cfg: &RunConfig,
    b: &mut Bundle,
    base: AnyDomain<D>,
    e: &[Point<D>],
    max_level: i32,
) -> Result<EnlargedDomain<D, AnyDomain<D>>> {
    let en = &cfg.enlargement;
    let mut ec = EnlargeConfig::new(en.epsilon, boxed(&e[0], en.half_width));
    ec.c1 = en.c1;
    ec.family.max_level = max_level;
    let base_delta = base_flatness(&base, &ec)?;
    ensure!(
        base_delta <= en.delta_cap,
        "base flatness {base_delta:.4e} exceeds delta_cap {:.4e}",
        en.delta_cap
    );
    b.constant("enlarge.base_delta", base_delta);
    b.certify(
        "enlarge.base_flatness",
        base_delta <= en.epsilon * en.epsilon,
        format!(
            "base delta {base_delta:.4e} vs epsilon^2 {:.4e}",
            en.epsilon * en.epsilon
        ),
    );
    // Already measured above.
    ec.delta_cap = Some(f64::INFINITY);
    let plus = enlarge(base, e, &ec)?;
    b.write("enlarge/family.csv", &plus.family.to_csv())?;
    let cover = plus.cloud_cover();
    let missing = plus.e_membership(cover);
    let clearance = plus.e_clearance_violations();
    let lip = plus.family.lipschitz_excess(Exec::Parallel);
    let s = EnlargeSummary {
        epsilon: en.epsilon,
        k: plus.family.k,
        balls: plus.family.len(),
        e: e.iter().map(to_vec).collect(),
        c_low: plus.family.c_low,
        c_high: plus.family.c_high,
        cloud_points: plus.cloud_len(),
        cloud_cover: cover,
        base_delta,
        e_membership_failures: missing.len(),
        e_clearance_violations: clearance,
        lipschitz_excess: lip,
    };
    b.json("enlarge/summary.json", &s)?;
    b.constant("enlarge.c_low", s.c_low);
    b.constant("enlarge.c_high", s.c_high);
    b.constant("enlarge.c1", plus.c1);
    b.constant("enlarge.cloud_cover", cover);
    b.certify(
        "enlarge.e_on_boundary",
        missing.is_empty(),
        format!("{} of {} points of E off the boundary", missing.len(), e.len()),
    );
    b.certify(
        "enlarge.radius_law",
        clearance == 0 && lip <= 1e-12,
        format!("clearance violations {clearance}, Lipschitz excess {lip:.3e}"),
    );
    Ok(plus)
}

fn graph_stage<const D: usize>(b: &mut Bundle, plus: &EnlargedDomain<D, AnyDomain<D>>) -> Result<()> {
    let balls = plus.interior_balls(6, 0.0);
    if balls.is_empty() {
        log::warn!("graph: no ball has its 20-fold dilate inside the family box; skipped");
        return Ok(());
    }
    let mut reports: Vec<Lemma23Report> = Vec::new();
    for q in balls {
        let p = plus.patch(q)?;
        reports.push(verify_lemma23(plus, &p, 300, Exec::Parallel));
    }
    b.json("enlarge/graph_patches.json", &reports)?;
    let lip = reports.iter().map(|r| r.lip_measured).fold(0.0, f64::max);
    let c2 = reports.iter().map(|r| r.c2_measured).fold(0.0, f64::max);
    b.constant("graph.lipschitz", lip);
    b.constant("graph.c2", c2);
    let fails = reports.iter().filter(|r| !r.passes()).count();
    b.certify(
        "enlarge.local_graph",
        fails == 0,
        format!("{fails} of {} patches fail; max Lipschitz {lip:.4}", reports.len()),
    );
    Ok(())
}

fn flatness_window<const D: usize, Dm: Domain<D>>(cfg: &RunConfig, dom: &Dm, e: &[Point<D>]) -> Aabb<D> {
    match cfg.flatness.window {
        Some(w) => boxed(&e[0], w),
        None => dom.window(),
    }
}

fn certify_stage<const D: usize>(
    cfg: &RunConfig,
    b: &mut Bundle,
    dom: &dyn Domain<D>,
    r0: f64,
    window: Aabb<D>,
    delta_max: Option<f64>,
) -> Result<CertifySummary> {
    let f = &cfg.flatness;
    let plan = ProbePlan {
        window,
        r_top: f.r_top,
        levels: f.levels,
    };
    let fc = FlatnessConfig {
        strict: false,
        ..Default::default()
    };
    let c = certify_domain(dom, r0, f.probes, &plan, &fc)?;
    let s = c.summary();
    b.write("flatness/probes.csv", &c.to_csv())?;
    b.json("flatness/certificate.json", &s)?;
    let mut by_r: Vec<(f64, f64)> = Vec::new();
    for r in &c.reports {
        match by_r.iter_mut().find(|(x, _)| *x == r.r) {
            Some(row) => row.1 = row.1.max(r.delta),
            None => by_r.push((r.r, r.delta)),
        }
    }
    by_r.sort_by(|a, b| a.0.total_cmp(&b.0));
    b.plot("flatness/delta_by_radius.dat", "r max_delta", &by_r)?;
    b.constant("flatness.delta_sup", s.delta_sup);
    b.certify(
        "flatness.separation",
        s.separation_failures == 0 && s.orientation_failures == 0,
        format!(
            "separation failures {}, orientation failures {}",
            s.separation_failures, s.orientation_failures
        ),
    );
    if let Some(cap) = delta_max {
        b.certify(
            "flatness.delta",
            s.delta_sup <= cap,
            format!("delta_sup {:.4e} vs {cap:.4e}", s.delta_sup),
        );
    }
    Ok(s)
}

fn wos_config(cfg: &RunConfig) -> WosConfig {
    WosConfig {
        tol: cfg.harmonic.tol,
        ..Default::default()
    }
}

fn pole<const D: usize>(cfg: &RunConfig, base: &AnyDomain<D>) -> Point<D> {
    cfg.harmonic
        .pole
        .as_ref()
        .map_or_else(|| base.default_pole(), |p| point::<D>(p))
}

#[derive(Serialize)]
struct WalkSummary {
    pole: Vec<f64>,
    seed: u64,
    requested: usize,
    walks: usize,
    failures: usize,
    mean_steps: f64,
    max_steps: usize,
    tol: f64,
    bias_bound: f64,
    probes: usize,
    radii: Vec<f64>,
}

fn estimate_stage<const D: usize>(
    cfg: &RunConfig,
    b: &mut Bundle,
    base: &AnyDomain<D>,
) -> Result<(ExitSample<D>, Vec<Point<D>>)> {
    let h = &cfg.harmonic;
    let pole = pole(cfg, base);
    let seed = cfg.stream_seed("wos");
    b.seed("wos", seed);
    let s = sample_exits(base, &pole, h.n, seed, &wos_config(cfg))?;
    let win = base.window();
    let spacing = win.diameter() / if D == 2 { 4096.0 } else { 128.0 };
    let pool = base.boundary_samples(&win, spacing);
    ensure!(!pool.is_empty(), "no boundary samples in the domain window");
    let k = h.probes.min(pool.len());
    let probes: Vec<Point<D>> = (0..k).map(|i| pool[i * pool.len() / k]).collect();
    let radii = dyadic_radii(h.r0, h.radii);
    let targets: Vec<(Point<D>, f64)> = probes
        .iter()
        .flat_map(|p| radii.iter().map(move |r| (*p, *r)))
        .collect();
    let est = s.estimate_all(&targets, Exec::Parallel);
    b.write("harmonic/estimates.csv", &estimates_csv(&est))?;
    b.json(
        "harmonic/walks.json",
        &WalkSummary {
            pole: to_vec(&pole),
            seed,
            requested: h.n,
            walks: s.walks,
            failures: s.failures,
            mean_steps: s.mean_steps,
            max_steps: s.max_steps,
            tol: s.tol,
            bias_bound: s.bias_bound,
            probes: probes.len(),
            radii,
        },
    )?;
    b.constant("wos.bias_bound", s.bias_bound);
    Ok((s, probes))
}

fn dimension_stage<const D: usize>(
    cfg: &RunConfig,
    b: &mut Bundle,
    s: &ExitSample<D>,
    base: &AnyDomain<D>,
) -> Result<()> {
    let h = &cfg.harmonic;
    let near = h.xi.as_ref().map_or(s.pole, |p| point::<D>(p));
    let xi = base.nearest_boundary(&near).0;
    let est = tabulate(s, &xi, &dyadic_radii(h.r0, h.radii));
    b.write("harmonic/dimension_estimates.csv", &estimates_csv(&est))?;
    let rows: Vec<(f64, f64)> = est
        .iter()
        .filter(|e| e.omega_hat > 0.0)
        .map(|e| (e.r.ln(), e.omega_hat.ln()))
        .collect();
    b.plot("harmonic/omega_loglog.dat", "log(r) log(omega_hat)", &rows)?;
    let fit = dimension_fit(&est)?;
    b.constant("dimension.slope_fit", fit.slope_fit);
    b.constant("dimension.lower", fit.lower_dim);
    b.constant("dimension.upper", fit.upper_dim);
    b.json("harmonic/dimension.json", &fit)
}

fn candidates_stage<const D: usize>(
    cfg: &RunConfig,
    b: &mut Bundle,
    s: &ExitSample<D>,
    probes: &[Point<D>],
) -> Result<Vec<Point<D>>> {
    let h = &cfg.harmonic;
    let r_min = r_min_for_budget(h.n, D - 1, h.alpha, h.r0);
    let set = extract_singular_candidates(s, probes, h.alpha, h.r0, r_min, h.z, Exec::Parallel)?;
    b.json("harmonic/candidates.json", &set)?;
    b.constant("candidates.count", set.points.len() as f64);
    b.constant("candidates.r_min", r_min);
    Ok(set.points.iter().map(|p| point::<D>(p)).collect())
}

fn thm31_stage<const D: usize, M: MeasureProvider<D> + ?Sized>(
    cfg: &RunConfig,
    b: &mut Bundle,
    plus: &EnlargedDomain<D, AnyDomain<D>>,
    mu: &M,
) -> Result<()> {
    let t = &cfg.thm31;
    // Smaller radii would see a family cut off by `max_level`.
    let floor = plus.resolved;
    let all = dyadic_radii(t.r_top, t.levels);
    let radii: Vec<f64> = all.iter().copied().filter(|r| *r >= floor).collect();
    if radii.len() < all.len() {
        log::warn!(
            "thm31: {} radii below the resolved scale {floor:.3e} dropped",
            all.len() - radii.len()
        );
    }
    ensure!(
        radii.len() >= 2,
        "fewer than two radii above the resolved scale {floor:.3e}; raise max_level"
    );
    let tc = Thm31Config {
        area_resolution: t.area_resolution,
        exec: Exec::Parallel,
    };
    let sweep = theorem31_sweep(plus, mu, &plus.e[0], &radii, cfg.harmonic.alpha, t.c_mu, &tc)?;
    b.json("thm31/sweep.json", &sweep)?;
    let rows: Vec<(f64, f64)> = sweep
        .reports
        .iter()
        .filter(|r| r.ratio > 0.0)
        .map(|r| ((1.0 / r.r).ln(), r.ratio.ln()))
        .collect();
    b.plot("thm31/ratio.dat", "log(1/r) log(LHS/RHS)", &rows)?;
    let n1_max = sweep.reports.iter().map(|r| r.n1).max().unwrap_or(0);
    let n1_min = sweep.reports.iter().map(|r| r.n1).min().unwrap_or(0);
    b.constant("thm31.slope", sweep.slope);
    b.constant("thm31.N1", n1_max as f64);
    b.constant("thm31.C", sweep.c_used);
    b.certify(
        "thm31.slope",
        sweep.slope <= 0.0,
        format!("log-log slope {:.4}", sweep.slope),
    );
    b.certify("thm31.overlap", n1_min == n1_max, format!("N1 in [{n1_min}, {n1_max}]"));
    Ok(())
}

fn monotonicity_stage<const D: usize>(
    cfg: &RunConfig,
    b: &mut Bundle,
    base: &AnyDomain<D>,
    plus: &EnlargedDomain<D, AnyDomain<D>>,
) -> Result<()> {
    let m = &cfg.monotonicity;
    let n = m.n.unwrap_or(cfg.harmonic.n);
    let win = base.window();
    let spacing = win.diameter() / if D == 2 { 4000.0 } else { 200.0 };
    let pool: Vec<Point<D>> = base
        .boundary_samples(&win, spacing)
        .into_iter()
        .filter(|p| !plus.family.inside_any(p))
        .collect();
    ensure!(!pool.is_empty(), "no shared boundary samples");
    let set_seed = cfg.stream_seed("monotonicity-sets");
    let walk_seed = cfg.stream_seed("monotonicity");
    b.seed("monotonicity-sets", set_seed);
    b.seed("monotonicity", walk_seed);
    let mut rng = ChaCha8Rng::seed_from_u64(set_seed);
    let sets: Vec<Vec<Ball<D>>> = (0..m.sets)
        .map(|_| vec![Ball::new(pool[rng.random_range(0..pool.len())], m.radius)])
        .collect();
    let wc = wos_config(cfg);
    let shared_tol = 10.0 * wc.tol_for(base);
    let shared = |w: &Point<D>| base.nearest_boundary(w).1 <= shared_tol && !plus.family.inside_any(w);
    let rep = monotonicity_check(base, plus, &pole(cfg, base), &sets, shared, n, walk_seed, &wc)
        .context("monotonicity walks")?;
    b.json("monotonicity/report.json", &rep)?;
    b.certify(
        "monotonicity",
        rep.passes(),
        format!("{} of {} sets below 3 sigma", rep.failed.len(), rep.rows.len()),
    );
    Ok(())
}

fn boxcount_stage<const D: usize>(cfg: &RunConfig, b: &mut Bundle) -> Result<()> {
    let bc = &cfg.boxcount;
    let scales: Vec<f64> = (bc.scale_lo..=bc.scale_hi).map(|k| 0.5f64.powi(k)).collect();
    let result = match bc.fixture {
        BoxFixture::Koch => {
            let pts = sample_polyline(&koch_curve(bc.depth), bc.h);
            let r = box_count(&pts, bc.h, &scales, 1)?;
            let target = 4f64.ln() / 3f64.ln();
            b.certify(
                "boxcount.koch",
                (r.dim_fit - target).abs() <= 0.03,
                format!("dimension {:.4} vs {target:.4}", r.dim_fit),
            );
            r
        }
        BoxFixture::Square => {
            let m = 1usize << (bc.scale_hi + 3);
            let h = 1.0 / m as f64;
            let mut pts = Vec::with_capacity(m * m);
            for i in 0..m {
                for j in 0..m {
                    pts.push(Point::<3>::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h, 0.3));
                }
            }
            let r = box_count(&pts, h, &scales, 2)?;
            let worst = r.hd_estimates.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
            b.certify(
                "boxcount.square",
                worst <= 0.05,
                format!("largest |N d^2 - 1| = {worst:.4}"),
            );
            r
        }
        BoxFixture::Snowflake => {
            let sf = build_snowflake::<D>(&blip_config(cfg), cfg.snowflake.bounded)?;
            let mesh = sf.last().mesh();
            let pts = mesh.samples_in_box(&mesh.aabb(), bc.h);
            box_count(&pts, bc.h, &scales, D - 1)?
        }
    };
    b.constant("boxcount.dim_fit", result.dim_fit);
    b.write(
        "boxcount/loglog.dat",
        &format!("# log(1/side) log(N)\n{}", result.plot_data()),
    )?;
    b.json("boxcount/result.json", &result)
}
