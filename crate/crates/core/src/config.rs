//! Run configuration: command-line flags layered over an optional flat
//! `key = value` file (`#` starts a comment). Flags win over file values.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};

use crate::error::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "WEDGE_CHAIN_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// One trajectory with Doob parts and coupled reflected walk.
    Simulate,
    /// Monte Carlo ensemble summary.
    Ensemble,
    /// Exponent recipe and constants for an alpha.
    Bounds,
    /// Lattice DLA in the wedge.
    Dla,
    /// Ends report for a site list.
    Ends,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Ensemble => "ensemble",
            Command::Bounds => "bounds",
            Command::Dla => "dla",
            Command::Ends => "ends",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?}; expected csv or json")),
        }
    }
}

/// Command-line surface. Every value flag has a config-file key of the same
/// name with underscores.
#[derive(Debug, Parser)]
#[command(name = "wedge-chain", version, allow_negative_numbers = true, about = "Toy DLA arm-growth chain and wedge DLA laboratory")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Flat key = value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub c: Option<String>,
    /// Permit c = 0.
    #[arg(long)]
    pub allow_degenerate_c0: bool,
    #[arg(long)]
    pub horizon: Option<String>,
    #[arg(long)]
    pub trajectories: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long)]
    pub s_scale: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    /// Comma-separated step indices.
    #[arg(long)]
    pub checkpoints: Option<String>,
    #[arg(long)]
    pub monotone_start: Option<String>,
    #[arg(long)]
    pub coupling: Option<String>,
    #[arg(long)]
    pub doob: Option<String>,
    #[arg(long)]
    pub max_work: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub particles: Option<String>,
    #[arg(long)]
    pub launch_margin: Option<String>,
    #[arg(long)]
    pub resample_cap: Option<String>,
    #[arg(long)]
    pub step_budget: Option<String>,
    /// Comma-separated radii for the ends report.
    #[arg(long)]
    pub radii: Option<String>,
    /// Site list CSV for `ends`.
    #[arg(long)]
    pub input: Option<String>,
    #[arg(long)]
    pub pgm: Option<String>,
}

const KEYS: &[&str] = &[
    "subcommand",
    "alpha",
    "c",
    "allow_degenerate_c0",
    "horizon",
    "trajectories",
    "seed",
    "eps",
    "s_scale",
    "beta",
    "delta",
    "checkpoints",
    "monotone_start",
    "coupling",
    "doob",
    "max_work",
    "output",
    "format",
    "particles",
    "launch_margin",
    "resample_cap",
    "step_budget",
    "radii",
    "input",
    "pgm",
];

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub alpha: f64,
    pub c: f64,
    pub allow_degenerate_c0: bool,
    pub horizon: u64,
    pub trajectories: u64,
    pub seed: u64,
    pub eps: f64,
    pub s_scale: f64,
    /// Overrides the profile's β when set.
    pub beta: Option<f64>,
    /// Overrides the profile's δ when set.
    pub delta: Option<f64>,
    pub checkpoints: Vec<u64>,
    pub monotone_start: Option<u64>,
    pub coupling: bool,
    pub doob: bool,
    pub max_work: u64,
    pub output: PathBuf,
    pub format: Format,
    pub particles: u64,
    pub launch_margin: i64,
    pub resample_cap: u64,
    pub step_budget: u64,
    pub radii: Option<Vec<f64>>,
    pub input: Option<PathBuf>,
    pub pgm: bool,
}

/// Parses `key = value` lines; rejects unknown and repeated keys.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::validation("config", format!("line {}: expected key = value", i + 1))
        })?;
        let k = k.trim().to_string();
        if !KEYS.contains(&k.as_str()) {
            return Err(Error::validation(k, "unknown configuration key"));
        }
        if map.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(Error::validation(k, "key given twice"));
        }
    }
    Ok(map)
}

fn typed<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    map.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|e| Error::validation(key, format!("cannot parse {v:?}: {e}")))
        })
        .transpose()
}

fn list<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<Vec<T>>>
where
    T::Err: fmt::Display,
{
    map.get(key)
        .map(|v| {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<T>()
                        .map_err(|e| Error::validation(key, format!("cannot parse {s:?}: {e}")))
                })
                .collect()
        })
        .transpose()
}

fn required<T>(value: Option<T>, key: &str, command: Command) -> Result<T> {
    value.ok_or_else(|| {
        Error::validation(key, format!("required by the {} subcommand", command.name()))
    })
}

/// Checkpoints `10, 100, ...` below the horizon, then the horizon itself.
pub fn default_checkpoints(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(10u64), |&n| n.checked_mul(10))
        .take_while(|&n| n < horizon)
        .collect();
    out.push(horizon);
    out
}

impl RunConfig {
    /// Merges flags over the optional file and validates every domain.
    pub fn resolve(cli: Cli) -> Result<Self> {
        let mut map = match &cli.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::io(path.display().to_string(), e))?;
                parse_kv(&text)?
            }
            None => BTreeMap::new(),
        };
        if let Some(sub) = map.remove("subcommand") {
            if sub != cli.command.name() {
                return Err(Error::validation(
                    "subcommand",
                    format!("config file is for {sub:?}, command line says {:?}", cli.command.name()),
                ));
            }
        }
        let flags = [
            ("alpha", cli.alpha),
            ("c", cli.c),
            ("horizon", cli.horizon),
            ("trajectories", cli.trajectories),
            ("seed", cli.seed),
            ("eps", cli.eps),
            ("s_scale", cli.s_scale),
            ("beta", cli.beta),
            ("delta", cli.delta),
            ("checkpoints", cli.checkpoints),
            ("monotone_start", cli.monotone_start),
            ("coupling", cli.coupling),
            ("doob", cli.doob),
            ("max_work", cli.max_work),
            ("output", cli.output),
            ("format", cli.format),
            ("particles", cli.particles),
            ("launch_margin", cli.launch_margin),
            ("resample_cap", cli.resample_cap),
            ("step_budget", cli.step_budget),
            ("radii", cli.radii),
            ("input", cli.input),
            ("pgm", cli.pgm),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                map.insert(k.to_string(), v);
            }
        }
        if cli.allow_degenerate_c0 {
            map.insert("allow_degenerate_c0".into(), "true".into());
        }
        Self::from_map(cli.command, &map)
    }

    pub fn from_map(command: Command, map: &BTreeMap<String, String>) -> Result<Self> {
        use Command::*;
        let needs_chain = matches!(command, Simulate | Ensemble);
        let alpha = required(typed::<f64>(map, "alpha")?, "alpha", command)?;
        let c = match typed::<f64>(map, "c")? {
            Some(c) => c,
            None if needs_chain => return Err(required::<f64>(None, "c", command).unwrap_err()),
            None => 1.0,
        };
        let horizon = match typed::<u64>(map, "horizon")? {
            Some(h) => h,
            None if needs_chain => return Err(required::<u64>(None, "horizon", command).unwrap_err()),
            None => 1,
        };
        let default_out = std::env::var(OUT_DIR_ENV).unwrap_or_else(|_| ".".into());
        let cfg = RunConfig {
            command,
            alpha,
            c,
            allow_degenerate_c0: typed(map, "allow_degenerate_c0")?.unwrap_or(false),
            horizon,
            trajectories: typed(map, "trajectories")?.unwrap_or(1000),
            seed: typed(map, "seed")?.unwrap_or(0),
            eps: typed(map, "eps")?.unwrap_or(0.05),
            s_scale: typed(map, "s_scale")?.unwrap_or(0.5),
            beta: typed(map, "beta")?,
            delta: typed(map, "delta")?,
            checkpoints: list(map, "checkpoints")?.unwrap_or_else(|| default_checkpoints(horizon)),
            monotone_start: typed(map, "monotone_start")?,
            coupling: typed(map, "coupling")?.unwrap_or(true),
            doob: typed(map, "doob")?.unwrap_or(true),
            max_work: typed(map, "max_work")?.unwrap_or(crate::estimators::DEFAULT_MAX_WORK),
            output: PathBuf::from(typed::<String>(map, "output")?.unwrap_or(default_out)),
            format: typed(map, "format")?.unwrap_or(Format::Csv),
            particles: typed(map, "particles")?.unwrap_or(2000),
            launch_margin: typed(map, "launch_margin")?.unwrap_or(64),
            resample_cap: typed(map, "resample_cap")?.unwrap_or(16),
            step_budget: typed(map, "step_budget")?.unwrap_or(1 << 32),
            radii: list(map, "radii")?,
            input: typed::<String>(map, "input")?.map(PathBuf::from),
            pgm: typed(map, "pgm")?.unwrap_or(false),
        };
        if command == Ends && cfg.input.is_none() {
            return Err(required::<()>(None, "input", command).unwrap_err());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::validation("alpha", format!("{} is outside the domain (0, 1)", self.alpha)));
        }
        let c_ok = if self.allow_degenerate_c0 { self.c >= 0.0 } else { self.c > 0.0 };
        if !(c_ok && self.c.is_finite()) {
            let dom = if self.allow_degenerate_c0 { "[0, inf)" } else { "(0, inf)" };
            return Err(Error::validation("c", format!("{} is outside the domain {dom}", self.c)));
        }
        if self.horizon == 0 || self.horizon > crate::chain::MAX_HORIZON {
            return Err(Error::validation("horizon", format!("{} is outside 1..={}", self.horizon, crate::chain::MAX_HORIZON)));
        }
        if self.trajectories == 0 {
            return Err(Error::validation("trajectories", "must be at least 1"));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::validation("eps", format!("{} is outside the domain (0, 1)", self.eps)));
        }
        if !(self.s_scale > 0.0 && self.s_scale.is_finite()) {
            return Err(Error::validation("s_scale", "must be positive"));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 0.5) {
                return Err(Error::validation("delta", format!("{d} is outside the domain (0, 1/2)")));
            }
        }
        if let Some(b) = self.beta {
            if !b.is_finite() {
                return Err(Error::validation("beta", "must be finite"));
            }
        }
        if self.command == Command::Ensemble {
            let cps = &self.checkpoints;
            if cps.is_empty() || cps[0] == 0 || !cps.windows(2).all(|w| w[0] < w[1]) || *cps.last().unwrap() > self.horizon {
                return Err(Error::validation("checkpoints", format!("must be strictly increasing within 1..={}", self.horizon)));
            }
            if let Some(s) = self.monotone_start {
                if s == 0 || s >= self.horizon {
                    return Err(Error::validation("monotone_start", format!("must lie in 1..{}", self.horizon)));
                }
            }
        }
        if self.particles == 0 {
            return Err(Error::validation("particles", "must be at least 1"));
        }
        if self.launch_margin < 1 {
            return Err(Error::validation("launch_margin", "must be at least 1"));
        }
        if self.step_budget == 0 {
            return Err(Error::validation("step_budget", "must be positive"));
        }
        if let Some(r) = &self.radii {
            if r.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
                return Err(Error::validation("radii", "must be finite and non-negative"));
            }
        }
        Ok(())
    }

    /// The resolved configuration in the file format, one key per line.
    pub fn echo(&self) -> String {
        fn join<T: ToString>(xs: &[T]) -> String {
            xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
        }
        let mut lines = vec![
            ("subcommand", self.command.name().to_string()),
            ("alpha", self.alpha.to_string()),
            ("c", self.c.to_string()),
            ("allow_degenerate_c0", self.allow_degenerate_c0.to_string()),
            ("horizon", self.horizon.to_string()),
            ("trajectories", self.trajectories.to_string()),
            ("seed", self.seed.to_string()),
            ("eps", self.eps.to_string()),
            ("s_scale", self.s_scale.to_string()),
        ];
        if let Some(b) = self.beta {
            lines.push(("beta", b.to_string()));
        }
        if let Some(d) = self.delta {
            lines.push(("delta", d.to_string()));
        }
        lines.push(("checkpoints", join(&self.checkpoints)));
        if let Some(s) = self.monotone_start {
            lines.push(("monotone_start", s.to_string()));
        }
        lines.extend([
            ("coupling", self.coupling.to_string()),
            ("doob", self.doob.to_string()),
            ("max_work", self.max_work.to_string()),
            ("output", self.output.display().to_string()),
            ("format", self.format.to_string()),
            ("particles", self.particles.to_string()),
            ("launch_margin", self.launch_margin.to_string()),
            ("resample_cap", self.resample_cap.to_string()),
            ("step_budget", self.step_budget.to_string()),
        ]);
        if let Some(r) = &self.radii {
            lines.push(("radii", join(r)));
        }
        if let Some(i) = &self.input {
            lines.push(("input", i.display().to_string()));
        }
        lines.push(("pgm", self.pgm.to_string()));
        let mut out = String::from("# wedge-chain resolved configuration\n");
        for (k, v) in lines {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

/// Parses command-line arguments (program name first) into a run.
pub fn parse_config<I, T>(args: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)
        .map_err(|e| Error::validation("arguments", e.to_string().trim_end().to_string()))?;
    RunConfig::resolve(cli)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        std::iter::once("wedge-chain".to_string())
            .chain(s.split_whitespace().map(String::from))
            .collect()
    }

    fn key_of(e: Error) -> String {
        match e {
            Error::Validation { key, .. } => key,
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn well_formed_simulate() {
        let cfg = parse_config(args("simulate --alpha 0.5 --c 1 --horizon 100000 --seed 42")).unwrap();
        assert_eq!(cfg.command, Command::Simulate);
        assert_eq!((cfg.alpha, cfg.c, cfg.horizon, cfg.seed), (0.5, 1.0, 100_000, 42));
        assert_eq!(cfg.checkpoints, vec![10, 100, 1000, 10_000, 100_000]);
    }

    #[test]
    fn domain_errors_name_the_key() {
        let e = parse_config(args("simulate --alpha 1.2 --c 1 --horizon 10")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("(0, 1)"));
        assert_eq!(key_of(e), "alpha");
        let e = parse_config(args("simulate --alpha 0.5 --c -1 --horizon 10")).unwrap_err();
        assert_eq!(key_of(e), "c");
        assert!(parse_config(args("simulate --alpha 0.5 --c 0 --horizon 10 --allow-degenerate-c0")).is_ok());
        let e = parse_config(args("ensemble --alpha 0.5 --c 1 --horizon 10 --trajectories 0")).unwrap_err();
        assert_eq!(key_of(e), "trajectories");
    }

    #[test]
    fn missing_required_keys() {
        assert_eq!(key_of(parse_config(args("simulate --c 1 --horizon 10")).unwrap_err()), "alpha");
        assert_eq!(key_of(parse_config(args("simulate --alpha 0.5 --horizon 10")).unwrap_err()), "c");
        assert_eq!(key_of(parse_config(args("ensemble --alpha 0.5 --c 1")).unwrap_err()), "horizon");
        assert_eq!(key_of(parse_config(args("ends --alpha 0.5")).unwrap_err()), "input");
        assert!(parse_config(args("bounds --alpha 0.8")).is_ok());
    }

    #[test]
    fn unknown_flag_and_key() {
        assert!(parse_config(args("bounds --alpha 0.8 --bogus 1")).is_err());
        assert_eq!(key_of(parse_kv("bogus = 1").unwrap_err()), "bogus");
        assert_eq!(key_of(parse_kv("alpha = 1\nalpha = 2").unwrap_err()), "alpha");
    }

    #[test]
    fn file_values_and_flag_override() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# a comment\nalpha = 0.3  # inline\nc = 2\nhorizon = 500\nseed = 9\n").unwrap();
        let cfg = parse_config(args(&format!("simulate --config {} --seed 10", path.display()))).unwrap();
        assert_eq!((cfg.alpha, cfg.c, cfg.horizon, cfg.seed), (0.3, 2.0, 500, 10));
    }

    #[test]
    fn echo_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(args(&format!(
            "ensemble --alpha 0.55 --c 0.3 --horizon 777 --checkpoints 7,70,700 --beta 0.8 --monotone-start 100 --radii 0,1.5 --output {}",
            dir.path().display()
        )))
        .unwrap();
        let path = dir.path().join("echo.cfg");
        std::fs::write(&path, cfg.echo()).unwrap();
        let again = parse_config(args(&format!("ensemble --config {}", path.display()))).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn subcommand_mismatch_in_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.cfg");
        std::fs::write(&path, "subcommand = dla\nalpha = 0.5\n").unwrap();
        let e = parse_config(args(&format!("bounds --config {}", path.display()))).unwrap_err();
        assert_eq!(key_of(e), "subcommand");
    }
}
