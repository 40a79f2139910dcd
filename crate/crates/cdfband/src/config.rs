//! Flat `key=value` run configuration.
//!
//! Values come from an optional config file (one `key=value` per line, `#`
//! starts a comment) and are overridden by command-line flags. Every key is
//! validated and unknown keys are rejected before anything runs.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use cdfband_core::bands::{AtomSpec, CurveVariant, DepthSchedule};
use cdfband_core::oracles::{OracleConfig, OracleKind};

use crate::error::{CliError, Result};
use crate::pipeline::{linspace, BandSpec};
use crate::sim::{GeneratorKind, PolyaSchedule, WeightLaw};

/// Every accepted key with its default (empty means "derived").
pub const KEYS: &[(&str, &str)] = &[
    ("command", ""),
    ("generator", "iid-beta"),
    ("oracle", ""),
    ("alpha", "0.05"),
    ("horizon", "10000"),
    ("grid", ""),
    ("seeds", ""),
    ("seed", "1"),
    ("out", "-"),
    ("format", "csv"),
    ("checkpoints", ""),
    ("variant", "auto"),
    ("atoms", ""),
    ("eta", "2"),
    ("prior_b", "1"),
    ("tau", "1"),
    ("beta_a", "6"),
    ("beta_b", "3"),
    ("mu", "0"),
    ("sigma", "1"),
    ("eps", "0.0625"),
    ("polya_scale", "1"),
    ("polya_q", "1"),
    ("w_max", "10"),
    ("weight_law", "exp"),
    ("t_ref", "10000"),
    ("eps_list", "0.0625,0.03125,0.015625,0.0078125,0.00390625,0.001953125"),
    ("sweep_points", "64"),
    ("sweep_steps_per_doubling", "8"),
    ("sweep_max_multiplier", "64"),
    ("timing", "true"),
];

pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Band,
    Simulate,
    Sweep,
    CompareOracles,
    Coverage,
}

impl Command {
    pub const ALL: [Command; 5] =
        [Command::Band, Command::Simulate, Command::Sweep, Command::CompareOracles, Command::Coverage];

    pub fn name(self) -> &'static str {
        match self {
            Command::Band => "band",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::CompareOracles => "compare-oracles",
            Command::Coverage => "coverage",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            CliError::config(format!(
                "unknown command `{s}` (band | simulate | sweep | compare-oracles | coverage)"
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::config(format!("unknown format `{s}` (csv | json)"))),
        }
    }
}

/// Raw key/value pairs in insertion-independent order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    /// Parses config-file text.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::config(format!("line {}: expected key=value, got `{line}`", i + 1))
            })?;
            raw.set(k.trim(), v.trim())?;
        }
        Ok(raw)
    }

    /// Sets one key, rejecting unknown names. Dashes are accepted for
    /// underscores.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(CliError::config(format!("unknown config key `{key}`")));
        }
        self.values.insert(key, value.to_string());
        Ok(())
    }

    /// Parses a `key=value` assignment.
    pub fn set_assignment(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("expected key=value, got `{kv}`")))?;
        self.set(k.trim(), v.trim())
    }

    /// Later values win.
    pub fn merge(&mut self, other: RawConfig) {
        self.values.extend(other.values);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Probe grid: `N:lo:hi` (evenly spaced, inclusive) or an
/// explicit comma-separated list.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Linspace { n: usize, lo: f64, hi: f64 },
    List(Vec<f64>),
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            GridSpec::Linspace { n, lo, hi } => linspace(*n, *lo, *hi),
            GridSpec::List(v) => v.clone(),
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Linspace { n, lo, hi } => write!(f, "{n}:{lo}:{hi}"),
            GridSpec::List(v) => write!(f, "{}", join(v)),
        }
    }
}

impl FromStr for GridSpec {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let spec = match parts.as_slice() {
            [n, lo, hi] => {
                let n: usize = parse_value("grid", n)?;
                let (lo, hi): (f64, f64) = (parse_value("grid", lo)?, parse_value("grid", hi)?);
                if n == 0 || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(CliError::config(format!("grid `{s}` needs N ≥ 1 and lo ≤ hi")));
                }
                GridSpec::Linspace { n, lo, hi }
            }
            [list] => GridSpec::List(parse_list("grid", list)?),
            _ => return Err(CliError::config(format!("grid `{s}` is neither N:lo:hi nor a list"))),
        };
        let values = spec.values();
        crate::pipeline::validate_grid(&values)?;
        Ok(spec)
    }
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn parse_value<T: FromStr>(key: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| CliError::config(format!("cannot parse `{s}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, s: &str) -> Result<Vec<T>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(|p| parse_value(key, p)).collect()
}

fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::config(format!("`{key}` expects true or false, got `{s}`"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantChoice {
    Auto,
    Unit,
    RealLine,
}

/// Settings of the smoothness sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub t_ref: u64,
    pub eps_list: Vec<f64>,
    /// Probe points spread evenly over each `[0, ε]`.
    pub points: usize,
    /// Checkpoints per doubling of `t` in the search after `t_ref`.
    pub steps_per_doubling: u32,
    /// Search stops at `t_ref` times this factor.
    pub max_multiplier: f64,
}

/// Fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub generator: GeneratorKind,
    pub oracle: OracleKind,
    pub oracle_config: OracleConfig,
    pub alpha: f64,
    pub horizon: u64,
    pub grid: GridSpec,
    pub seeds: u64,
    pub seed: u64,
    pub out: String,
    pub format: Format,
    pub checkpoints: Vec<u64>,
    pub variant: CurveVariant,
    pub schedule: DepthSchedule,
    pub sweep: SweepConfig,
    pub timing: bool,
    /// Every key with its resolved value, for the output header.
    pub echo: Vec<(String, String)>,
}

/// Default checkpoints: `{10², 10³, 10⁴}` up to the horizon, plus the horizon.
pub fn default_checkpoints(horizon: u64) -> Vec<u64> {
    let mut c: Vec<u64> = [100, 1000, 10_000].into_iter().filter(|&t| t < horizon).collect();
    c.push(horizon);
    c
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let get = |key: &str| -> String {
            raw.get(key)
                .map(str::to_string)
                .unwrap_or_else(|| KEYS.iter().find(|(k, _)| *k == key).map(|(_, d)| d.to_string()).unwrap_or_default())
        };
        let command: Command = match raw.get("command") {
            Some(c) => c.parse()?,
            None => return Err(CliError::config("no command given (--command)")),
        };

        let mut generator_name = get("generator");
        if command == Command::Sweep {
            match raw.get("generator") {
                None | Some("iid-uniform-eps") => generator_name = "iid-uniform-eps".into(),
                Some(g) => {
                    return Err(CliError::config(format!(
                        "sweep runs the iid-uniform-eps family, not `{g}`"
                    )))
                }
            }
        }
        let schedule_polya = PolyaSchedule {
            scale: parse_value("polya_scale", &get("polya_scale"))?,
            exponent: parse_value("polya_q", &get("polya_q"))?,
        };
        let (a, b): (f64, f64) = (parse_value("beta_a", &get("beta_a"))?, parse_value("beta_b", &get("beta_b"))?);
        let (mu, sigma): (f64, f64) = (parse_value("mu", &get("mu"))?, parse_value("sigma", &get("sigma"))?);
        let generator = match generator_name.as_str() {
            "iid-beta" => GeneratorKind::IidBeta { a, b },
            "iid-lognormal" => GeneratorKind::IidLognormal { mu, sigma },
            "iid-gaussian" => GeneratorKind::IidGaussian { mu, sigma },
            "iid-uniform-eps" => GeneratorKind::IidUniformEps { eps: parse_value("eps", &get("eps"))? },
            "polya" => GeneratorKind::Polya { schedule: schedule_polya },
            "iw-polya" => GeneratorKind::IwPolya {
                schedule: schedule_polya,
                w_max: parse_value("w_max", &get("w_max"))?,
            },
            "iid-iw" => GeneratorKind::IidIw { a, b, law: get("weight_law").parse::<WeightLaw>()? },
            other => {
                return Err(CliError::config(format!(
                    "unknown generator `{other}` ({})",
                    GeneratorKind::NAMES.join(" | ")
                )))
            }
        };
        generator.validate()?;

        let oracle: OracleKind = match raw.get("oracle") {
            Some(o) => o.parse().map_err(|_| {
                CliError::config(format!("unknown oracle `{o}` (bernoulli | subgaussian | empbern | ddrm)"))
            })?,
            None if generator.is_weighted() => OracleKind::Ddrm,
            None => OracleKind::Bernoulli,
        };
        let oracle_config = OracleConfig {
            prior_b: parse_value("prior_b", &get("prior_b"))?,
            tau: parse_value("tau", &get("tau"))?,
            ..OracleConfig::default()
        };
        oracle_config.validate()?;

        let alpha: f64 = parse_value("alpha", &get("alpha"))?;
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(CliError::config(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        let horizon: u64 = parse_value("horizon", &get("horizon"))?;

        let grid: GridSpec = match raw.get("grid") {
            Some(g) => g.parse()?,
            None if generator.unit_support() => GridSpec::Linspace { n: 1000, lo: 0.0, hi: 1.0 },
            None => GridSpec::Linspace { n: 1000, lo: -10.0, hi: 10.0 },
        };

        let seeds: u64 = match raw.get("seeds") {
            Some(s) => parse_value("seeds", s)?,
            None => match command {
                Command::Coverage => 200,
                Command::CompareOracles => 3,
                _ => 1,
            },
        };
        if seeds == 0 {
            return Err(CliError::config("seeds must be at least 1"));
        }
        let seed: u64 = parse_value("seed", &get("seed"))?;
        let format: Format = get("format").parse()?;

        let checkpoints: Vec<u64> = match raw.get("checkpoints") {
            Some(c) => parse_list("checkpoints", c)?,
            None => default_checkpoints(horizon),
        };
        if !matches!(command, Command::Simulate | Command::Sweep) {
            crate::pipeline::validate_checkpoints(&checkpoints, horizon)?;
        }

        let eta: u32 = parse_value("eta", &get("eta"))?;
        let schedule = DepthSchedule::new(eta)?;
        let choice = match get("variant").as_str() {
            "auto" => VariantChoice::Auto,
            "unit" => VariantChoice::Unit,
            "real-line" => VariantChoice::RealLine,
            v => return Err(CliError::config(format!("unknown variant `{v}` (auto | unit | real-line)"))),
        };
        let atoms = get("atoms");
        let variant = if !atoms.is_empty() {
            let mut pairs = Vec::new();
            for item in atoms.split(',') {
                let (v, z) = item
                    .split_once(':')
                    .ok_or_else(|| CliError::config(format!("atom `{item}` is not value:mass")))?;
                pairs.push((parse_value("atoms", v)?, parse_value("atoms", z)?));
            }
            if choice == VariantChoice::RealLine {
                return Err(CliError::config("atoms combine with the unit-interval variant only"));
            }
            CurveVariant::WithAtoms(AtomSpec::new(pairs)?)
        } else {
            match choice {
                VariantChoice::Unit => CurveVariant::UnitInterval,
                VariantChoice::RealLine => CurveVariant::RealLine,
                VariantChoice::Auto if generator.unit_support() => CurveVariant::UnitInterval,
                VariantChoice::Auto => CurveVariant::RealLine,
            }
        };

        let sweep = SweepConfig {
            t_ref: parse_value("t_ref", &get("t_ref"))?,
            eps_list: parse_list("eps_list", &get("eps_list"))?,
            points: parse_value("sweep_points", &get("sweep_points"))?,
            steps_per_doubling: parse_value("sweep_steps_per_doubling", &get("sweep_steps_per_doubling"))?,
            max_multiplier: parse_value("sweep_max_multiplier", &get("sweep_max_multiplier"))?,
        };
        if command == Command::Sweep {
            if sweep.t_ref == 0 || sweep.points == 0 || sweep.steps_per_doubling == 0 {
                return Err(CliError::config("t_ref, sweep_points and sweep_steps_per_doubling must be positive"));
            }
            if !(sweep.max_multiplier >= 1.0) || !sweep.max_multiplier.is_finite() {
                return Err(CliError::config("sweep_max_multiplier must be at least 1"));
            }
            if sweep.eps_list.is_empty() || sweep.eps_list.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
                return Err(CliError::config("eps_list must hold values in (0, 1]"));
            }
        }
        let timing = parse_bool("timing", &get("timing"))?;

        let mut echo: Vec<(String, String)> = KEYS.iter().map(|(k, _)| (k.to_string(), get(k))).collect();
        let resolved = [
            ("command", command.to_string()),
            ("generator", generator.name().to_string()),
            ("oracle", oracle.to_string()),
            ("grid", grid.to_string()),
            ("seeds", seeds.to_string()),
            ("checkpoints", join(&checkpoints)),
            ("variant", variant_name(&variant).to_string()),
        ];
        for (k, v) in resolved {
            if let Some(e) = echo.iter_mut().find(|(key, _)| key == k) {
                e.1 = v;
            }
        }

        Ok(RunConfig {
            command,
            generator,
            oracle,
            oracle_config,
            alpha,
            horizon,
            grid,
            seeds,
            seed,
            out: get("out"),
            format,
            checkpoints,
            variant,
            schedule,
            sweep,
            timing,
            echo,
        })
    }

    pub fn band_spec(&self) -> BandSpec {
        BandSpec {
            oracle: self.oracle,
            oracle_config: self.oracle_config.clone(),
            alpha: self.alpha,
            variant: self.variant.clone(),
            schedule: self.schedule,
        }
    }
}

fn variant_name(v: &CurveVariant) -> &'static str {
    match v {
        CurveVariant::UnitInterval => "unit",
        CurveVariant::RealLine => "real-line",
        CurveVariant::WithAtoms(_) => "unit+atoms",
    }
}
