//! Run configuration: TOML sections per module, defaults, overrides, validation.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    /// `{x_D > 0}`.
    HalfSpace,
    /// The unit ball.
    Ball,
    /// The last snowflake generation.
    Snowflake,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlatnessTarget {
    Base,
    Enlarged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoxFixture {
    Koch,
    Snowflake,
    Square,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Ambient dimension `d + 1`.
    pub dimension: usize,
    /// Root seed; every random stream is derived from it.
    pub seed: u64,
    /// Not part of the hashed configuration.
    #[serde(skip_serializing)]
    pub output: PathBuf,
    pub domain: DomainKind,
    pub snowflake: SnowflakeSection,
    pub whitney: WhitneySection,
    pub enlargement: EnlargementSection,
    pub flatness: FlatnessSection,
    pub harmonic: HarmonicSection,
    pub boxcount: BoxCountSection,
    pub thm31: Thm31Section,
    pub monotonicity: MonotonicitySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dimension: 2,
            seed: 1,
            output: PathBuf::from("reifenberg-out"),
            domain: DomainKind::Snowflake,
            snowflake: Default::default(),
            whitney: Default::default(),
            enlargement: Default::default(),
            flatness: Default::default(),
            harmonic: Default::default(),
            boxcount: Default::default(),
            thm31: Default::default(),
            monotonicity: Default::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnowflakeSection {
    pub theta: f64,
    pub b: f64,
    /// Blip frequency; absent means the smallest separating value.
    pub n: Option<u32>,
    pub depth: usize,
    pub max_depth: usize,
    pub bounded: bool,
    pub k_max: u32,
    pub c_w: f64,
    pub max_faces: usize,
}

impl Default for SnowflakeSection {
    fn default() -> Self {
        SnowflakeSection {
            theta: 0.1,
            b: 0.05,
            n: None,
            depth: 2,
            max_depth: 5,
            bounded: true,
            k_max: 3,
            c_w: 1.0,
            max_faces: 4_000_000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WhitneySection {
    pub k: f64,
    pub max_level: i32,
    /// Probe points for the property report.
    pub probes: usize,
}

impl Default for WhitneySection {
    fn default() -> Self {
        WhitneySection {
            k: 4.0,
            max_level: 8,
            probes: 2000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnlargementSection {
    pub epsilon: f64,
    /// Points of `E`, projected onto the base boundary. Empty means the
    /// boundary point nearest the origin. Singular candidates, when the
    /// pipeline finds any, replace this list.
    pub e: Vec<Vec<f64>>,
    /// Half-width of the family box around the first point of `E`.
    pub half_width: f64,
    pub max_level: i32,
    /// The enlarge stage aborts when the measured base flatness exceeds
    /// this; values above `ε²` are reported as a failed certificate.
    pub delta_cap: f64,
    pub c1: f64,
}

impl Default for EnlargementSection {
    fn default() -> Self {
        EnlargementSection {
            epsilon: 0.04,
            e: Vec::new(),
            half_width: 0.25,
            max_level: 20,
            delta_cap: f64::INFINITY,
            c1: 25.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlatnessSection {
    pub target: FlatnessTarget,
    pub probes: usize,
    pub r_top: f64,
    pub levels: usize,
    /// Half-width of the probe window around the first point of `E`;
    /// absent means the whole boundary window.
    pub window: Option<f64>,
    /// Pass threshold on `δ_sup` for the standalone command.
    pub delta_max: Option<f64>,
    /// Pass threshold `δ_sup ≤ c ε^{1/2}` on the enlarged domain.
    pub sqrt_eps_constant: f64,
}

impl Default for FlatnessSection {
    fn default() -> Self {
        FlatnessSection {
            target: FlatnessTarget::Enlarged,
            probes: 100,
            r_top: 0.05,
            levels: 4,
            window: Some(0.1),
            delta_max: None,
            sqrt_eps_constant: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarmonicSection {
    /// Absent means a default pole for the domain.
    pub pole: Option<Vec<f64>>,
    /// Walks.
    pub n: usize,
    pub tol: Option<f64>,
    pub alpha: f64,
    pub r0: f64,
    /// Confidence multiplier for singular candidates.
    pub z: f64,
    /// Boundary probes scanned for singular candidates.
    pub probes: usize,
    /// Point of the dimension fit; absent means the boundary point nearest the pole.
    pub xi: Option<Vec<f64>>,
    /// Dyadic radii of the dimension fit, starting at `r0`.
    pub radii: usize,
}

impl Default for HarmonicSection {
    fn default() -> Self {
        HarmonicSection {
            pole: None,
            n: 100_000,
            tol: None,
            alpha: 0.5,
            r0: 0.25,
            z: 3.0,
            probes: 32,
            xi: None,
            radii: 7,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxCountSection {
    pub fixture: BoxFixture,
    /// Koch depth; the snowflake fixture uses the snowflake section.
    pub depth: usize,
    /// Sample spacing.
    pub h: f64,
    /// Box sides `2^{-k}` for `scale_lo ≤ k ≤ scale_hi`.
    pub scale_lo: i32,
    pub scale_hi: i32,
}

impl Default for BoxCountSection {
    fn default() -> Self {
        BoxCountSection {
            fixture: BoxFixture::Koch,
            depth: 7,
            h: 1e-4,
            scale_lo: 2,
            scale_hi: 8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thm31Section {
    pub r_top: f64,
    pub levels: usize,
    pub c_mu: f64,
    /// Family depth for the standalone command; absent means the
    /// enlargement value.
    pub max_level: Option<i32>,
    pub area_resolution: usize,
}

impl Default for Thm31Section {
    fn default() -> Self {
        Thm31Section {
            r_top: 0.0625,
            levels: 9,
            c_mu: 1.0,
            max_level: Some(24),
            area_resolution: 32,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonotonicitySection {
    pub sets: usize,
    pub radius: f64,
    /// Walks per domain; absent means `harmonic.n`.
    pub n: Option<usize>,
}

impl Default for MonotonicitySection {
    fn default() -> Self {
        MonotonicitySection {
            sets: 10,
            radius: 0.05,
            n: None,
        }
    }
}

/// Sets `path = value` in a TOML table, creating sections as needed. The
/// value is parsed as TOML and kept as a string when that fails.
pub fn set_key(table: &mut toml::Table, path: &str, value: &str) -> Result<()> {
    let parsed = match format!("v = {value}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key v"),
        Err(_) => toml::Value::String(value.to_string()),
    };
    let mut keys: Vec<&str> = path.split('.').collect();
    let last = keys.pop().filter(|k| !k.is_empty()).context("empty key")?;
    let mut cur = table;
    for k in keys {
        let entry = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => bail!("{k} in {path} is not a section"),
        };
    }
    cur.insert(last.to_string(), parsed);
    Ok(())
}

/// Defaults, then the file, then `overrides` in order.
pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut table = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            text.parse::<toml::Table>()
                .with_context(|| format!("parsing config {}", p.display()))?
        }
        None => toml::Table::new(),
    };
    for (k, v) in overrides {
        set_key(&mut table, k, v).with_context(|| format!("override {k}"))?;
    }
    let cfg: RunConfig = toml::Value::Table(table).try_into().context("invalid configuration")?;
    cfg.validate().context("invalid configuration")?;
    Ok(cfg)
}

fn check_point(name: &str, p: &[f64], dim: usize) -> Result<()> {
    ensure!(p.len() == dim, "{name} has {} coordinates, expected {dim}", p.len());
    ensure!(p.iter().all(|v| v.is_finite()), "{name} must be finite");
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let dim = self.dimension;
        ensure!(dim == 2 || dim == 3, "dimension = {dim} must be 2 or 3");
        let d = (dim - 1) as f64;

        let s = &self.snowflake;
        ensure!(
            (0.0..1.0).contains(&s.theta),
            "snowflake.theta = {} must lie in [0, 1)",
            s.theta
        );
        ensure!(s.b > 0.0 && s.b < 0.5, "snowflake.b = {} must lie in (0, 1/2)", s.b);
        ensure!(s.n.is_none_or(|n| n >= 1), "snowflake.n must be positive");
        ensure!(s.max_depth <= 8, "snowflake.max_depth = {} exceeds 8", s.max_depth);
        ensure!(
            s.depth <= s.max_depth,
            "snowflake.depth = {} exceeds max_depth = {}",
            s.depth,
            s.max_depth
        );
        ensure!(
            (1..=8).contains(&s.k_max),
            "snowflake.k_max = {} must lie in 1..=8",
            s.k_max
        );
        ensure!(s.c_w > 0.0, "snowflake.c_w must be positive");
        ensure!(s.max_faces >= 1, "snowflake.max_faces must be positive");

        let w = &self.whitney;
        ensure!(w.k >= 4.0 && w.k.is_finite(), "whitney.k = {} must be at least 4", w.k);
        ensure!((0..=30).contains(&w.max_level), "whitney.max_level must lie in 0..=30");
        ensure!(w.probes >= 1, "whitney.probes must be positive");

        let e = &self.enlargement;
        ensure!(
            e.epsilon > 0.0 && e.epsilon < 0.5,
            "enlargement.epsilon = {} must lie in (0, 1/2)",
            e.epsilon
        );
        for (i, p) in e.e.iter().enumerate() {
            check_point(&format!("enlargement.e[{i}]"), p, dim)?;
        }
        ensure!(
            e.half_width > 0.0 && e.half_width.is_finite(),
            "enlargement.half_width must be positive"
        );
        ensure!(
            (0..=30).contains(&e.max_level),
            "enlargement.max_level must lie in 0..=30"
        );
        ensure!(e.delta_cap > 0.0, "enlargement.delta_cap must be positive");
        ensure!(e.c1 > 0.0 && e.c1.is_finite(), "enlargement.c1 must be positive");

        let f = &self.flatness;
        ensure!(f.probes >= 1, "flatness.probes must be positive");
        ensure!(f.r_top > 0.0 && f.r_top.is_finite(), "flatness.r_top must be positive");
        ensure!((1..=20).contains(&f.levels), "flatness.levels must lie in 1..=20");
        ensure!(f.window.is_none_or(|w| w > 0.0), "flatness.window must be positive");
        ensure!(
            f.delta_max.is_none_or(|v| v > 0.0),
            "flatness.delta_max must be positive"
        );
        ensure!(f.sqrt_eps_constant > 0.0, "flatness.sqrt_eps_constant must be positive");

        let h = &self.harmonic;
        if let Some(p) = &h.pole {
            check_point("harmonic.pole", p, dim)?;
        }
        if let Some(p) = &h.xi {
            check_point("harmonic.xi", p, dim)?;
        }
        ensure!(
            (1..=1_000_000_000).contains(&h.n),
            "harmonic.n = {} must lie in 1..=1e9",
            h.n
        );
        ensure!(h.tol.is_none_or(|t| t > 0.0), "harmonic.tol must be positive");
        ensure!(
            h.alpha > 0.0 && h.alpha < d,
            "harmonic.alpha = {} must lie in (0, {d})",
            h.alpha
        );
        ensure!(h.r0 > 0.0 && h.r0 <= 1.0, "harmonic.r0 = {} must lie in (0, 1]", h.r0);
        ensure!(h.z >= 0.0 && h.z.is_finite(), "harmonic.z must be nonnegative");
        ensure!(h.probes >= 1, "harmonic.probes must be positive");
        ensure!((4..=30).contains(&h.radii), "harmonic.radii must lie in 4..=30");

        let b = &self.boxcount;
        ensure!(b.depth <= 9, "boxcount.depth = {} exceeds 9", b.depth);
        ensure!(b.h > 0.0, "boxcount.h must be positive");
        ensure!(
            b.scale_lo >= 0 && b.scale_lo < b.scale_hi && b.scale_hi <= 20,
            "boxcount scales need 0 <= scale_lo < scale_hi <= 20"
        );

        let t = &self.thm31;
        ensure!(t.r_top > 0.0 && t.r_top <= 1.0, "thm31.r_top must lie in (0, 1]");
        ensure!((1..=20).contains(&t.levels), "thm31.levels must lie in 1..=20");
        ensure!(t.c_mu > 0.0, "thm31.c_mu must be positive");
        ensure!(
            t.max_level.is_none_or(|l| (0..=30).contains(&l)),
            "thm31.max_level must lie in 0..=30"
        );
        ensure!(t.area_resolution >= 4, "thm31.area_resolution must be at least 4");

        let m = &self.monotonicity;
        ensure!(m.sets >= 1, "monotonicity.sets must be positive");
        ensure!(m.radius > 0.0, "monotonicity.radius must be positive");
        ensure!(m.n.is_none_or(|n| n >= 1), "monotonicity.n must be positive");
        Ok(())
    }

    /// Canonical TOML text of the configuration (without the output path).
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    /// Seed of the named random stream.
    pub fn stream_seed(&self, name: &str) -> u64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(name.as_bytes());
        let out = h.finalize();
        u64::from_le_bytes(out[..8].try_into().expect("8 bytes"))
    }
}
