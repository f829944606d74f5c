//! Run configuration: a TOML file of flat dotted keys plus inline `key=value` overrides,
//! resolved against per-experiment defaults and validated.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use toml::Value;

use crate::error::{Error, Result};
use crate::experiments::{config_hash, DegreeChoice, ExperimentConfig, ExperimentKind};
use crate::geometry::{CompactKind, CompactSubset, Domain, GridWeight, Point, Weight};

/// Every key the parser accepts, in the order `to_toml` writes them.
pub const KEYS: &[&str] = &[
    "experiment",
    "domain.kind",
    "domain.R",
    "domain.R1",
    "domain.R2",
    "weight.kind",
    "weight.c",
    "weight.coeffs",
    "weight.eps",
    "weight.grid.file",
    "weight.grid.values",
    "weight.grid.origin",
    "weight.grid.spacing",
    "compact.kind",
    "compact.rho",
    "compact.rho1",
    "compact.rho2",
    "compact.center",
    "compact.r",
    "ball.center",
    "ball.r",
    "ball.r2",
    "n",
    "trials",
    "eps",
    "master_seed",
    "quadrature.radial_order",
    "quadrature.angular_order",
    "basis.degree",
    "basis.tol",
    "basis.m_max",
    "k_rule.radial_order",
    "k_rule.angular_order",
    "cells.rings",
    "cells.sectors",
    "omega.inflate",
    "stencil.h",
    "output_dir",
    "cache_dir",
    "verbosity",
    "workers",
];

/// Short spellings accepted for convenience.
const ALIASES: &[(&str, &str)] = &[
    ("domain", "domain.kind"),
    ("R", "domain.R"),
    ("R1", "domain.R1"),
    ("R2", "domain.R2"),
    ("weight", "weight.kind"),
    ("seed", "master_seed"),
    ("radial_order", "quadrature.radial_order"),
    ("angular_order", "quadrature.angular_order"),
];

/// A fully resolved run: the experiment, its parameters and where outputs go.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub output_dir: PathBuf,
    /// None: `GAF_CACHE_DIR`, else `<output_dir>/cache`.
    pub cache_dir: Option<PathBuf>,
    pub verbosity: u8,
    /// None: available parallelism.
    pub workers: Option<usize>,
}

impl RunConfig {
    /// Hash of the experiment and its parameters; output, cache, workers and verbosity
    /// do not enter.
    pub fn hash(&self) -> String {
        config_hash(self.experiment, &self.config)
    }

    /// Serializes every materialized value as flat dotted keys that parse back to the
    /// same configuration.
    pub fn to_toml(&self) -> String {
        let cfg = &self.config;
        let mut out: Vec<(&str, Value)> = vec![("experiment", self.experiment.name().into())];
        let r = cfg.domain.radii();
        match cfg.domain.dim() {
            1 => {
                out.push(("domain.kind", "disk".into()));
                out.push(("domain.R", r[0].into()));
            }
            _ => {
                out.push(("domain.kind", "polydisc".into()));
                out.push(("domain.R1", r[0].into()));
                out.push(("domain.R2", r[1].into()));
            }
        }
        out.push(("weight.kind", cfg.weight.name().into()));
        match &cfg.weight {
            Weight::Zero | Weight::MaxLog => {}
            Weight::Quadratic { c } => out.push(("weight.c", (*c).into())),
            Weight::LogAbsPoly { coeffs, eps } => {
                out.push(("weight.coeffs", Value::Array(coeffs.iter().map(complex_value).collect())));
                out.push(("weight.eps", (*eps).into()));
            }
            Weight::Grid(g) => {
                let rows = g
                    .values
                    .chunks(g.nx)
                    .map(|row| Value::Array(row.iter().map(|v| Value::Float(*v)).collect()))
                    .collect();
                out.push(("weight.grid.values", Value::Array(rows)));
                out.push(("weight.grid.origin", Value::Array(vec![g.origin[0].into(), g.origin[1].into()])));
                out.push(("weight.grid.spacing", g.spacing.into()));
            }
        }
        match cfg.compact.kind() {
            CompactKind::ClosedDisk { rho } => {
                out.push(("compact.kind", "disk".into()));
                out.push(("compact.rho", (*rho).into()));
            }
            CompactKind::ClosedPolydisc { rho1, rho2 } => {
                out.push(("compact.kind", "polydisc".into()));
                out.push(("compact.rho1", (*rho1).into()));
                out.push(("compact.rho2", (*rho2).into()));
            }
            CompactKind::ClosedBall { center, r } => {
                out.push(("compact.kind", "ball".into()));
                out.push(("compact.center", point_value(center)));
                out.push(("compact.r", (*r).into()));
            }
        }
        out.push(("ball.center", point_value(&cfg.ball_center)));
        out.push(("ball.r", cfg.ball_r.into()));
        out.push(("ball.r2", cfg.ball_r2.into()));
        out.push(("n", Value::Array(cfg.n.iter().map(|&n| Value::Integer(n as i64)).collect())));
        out.push(("trials", Value::Integer(cfg.trials as i64)));
        out.push(("eps", cfg.eps.into()));
        out.push(("master_seed", Value::Integer(cfg.seed as i64)));
        if let Some((r, a)) = cfg.orders {
            out.push(("quadrature.radial_order", Value::Integer(r as i64)));
            out.push(("quadrature.angular_order", Value::Integer(a as i64)));
        }
        match cfg.degree {
            DegreeChoice::Fixed { degree } => out.push(("basis.degree", Value::Integer(degree as i64))),
            DegreeChoice::Auto { tol, m_max } => {
                out.push(("basis.tol", tol.into()));
                out.push(("basis.m_max", Value::Integer(m_max as i64)));
            }
        }
        out.push(("k_rule.radial_order", Value::Integer(cfg.k_orders.0 as i64)));
        out.push(("k_rule.angular_order", Value::Integer(cfg.k_orders.1 as i64)));
        out.push(("cells.rings", Value::Integer(cfg.cells.0 as i64)));
        out.push(("cells.sectors", Value::Integer(cfg.cells.1 as i64)));
        out.push(("omega.inflate", cfg.omega_inflate.into()));
        out.push(("stencil.h", cfg.stencil_h.into()));
        out.push(("output_dir", self.output_dir.display().to_string().into()));
        if let Some(dir) = &self.cache_dir {
            out.push(("cache_dir", dir.display().to_string().into()));
        }
        out.push(("verbosity", Value::Integer(self.verbosity as i64)));
        if let Some(w) = self.workers {
            out.push(("workers", Value::Integer(w as i64)));
        }
        out.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Defaults for an experiment on the given domain and weight.
pub fn defaults_for(kind: ExperimentKind, domain: Domain, weight: Weight) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(domain, weight)?;
    match kind {
        ExperimentKind::Tails => {
            cfg.n = (1..=8).map(|k| 2 * k).collect();
            cfg.trials = 2000;
        }
        ExperimentKind::Sandwich => cfg.n = vec![1, 2, 5, 10, 20, 40],
        ExperimentKind::ZeroDensity => {
            cfg.n = vec![30];
            cfg.trials = 200;
        }
        ExperimentKind::Covariance | ExperimentKind::TailVariance => {
            cfg.n = vec![10];
            cfg.trials = 10_000;
        }
        ExperimentKind::Horcor => {
            cfg.n = vec![10, 20, 40];
            cfg.trials = 1;
        }
        ExperimentKind::SupL2 | ExperimentKind::Pointwise | ExperimentKind::L1 => {}
    }
    Ok(cfg)
}

/// Parses an optional config file and `key=value` overrides. `experiment` (from the
/// subcommand) must agree with the file's `experiment` key when both are present.
pub fn parse_config(path: Option<&Path>, overrides: &[String], experiment: Option<ExperimentKind>) -> Result<RunConfig> {
    parse_with(path, overrides, experiment, None)
}

/// Like [`parse_config`], but a config without an `experiment` key resolves with the
/// defaults of `fallback`. Used by the basis, kernel, sample and zeros tools.
pub fn parse_tool_config(path: Option<&Path>, overrides: &[String], fallback: ExperimentKind) -> Result<RunConfig> {
    parse_with(path, overrides, None, Some(fallback))
}

fn parse_with(
    path: Option<&Path>,
    overrides: &[String],
    experiment: Option<ExperimentKind>,
    fallback: Option<ExperimentKind>,
) -> Result<RunConfig> {
    let (text, base) = match path {
        Some(p) => (std::fs::read_to_string(p)?, p.parent().map(Path::to_path_buf).unwrap_or_default()),
        None => (String::new(), PathBuf::new()),
    };
    let mut keys = flatten_text(&text)?;
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{o}` is not of the form key=value")))?;
        let key = canonical(k.trim())?;
        keys.insert(key, override_value(v.trim()));
    }
    resolve(keys, experiment, fallback, &base)
}

/// Parses config text (no file, relative paths resolved against the working directory).
pub fn parse_config_str(text: &str, experiment: Option<ExperimentKind>) -> Result<RunConfig> {
    resolve(flatten_text(text)?, experiment, None, Path::new(""))
}

/// Like [`parse_config_str`], with `fallback` supplying the defaults when the text has
/// no `experiment` key.
pub fn parse_tool_config_str(text: &str, fallback: ExperimentKind) -> Result<RunConfig> {
    resolve(flatten_text(text)?, None, Some(fallback), Path::new(""))
}

fn flatten_text(text: &str) -> Result<BTreeMap<String, Value>> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(format!("parse error: {e}")))?;
    let mut flat = BTreeMap::new();
    flatten("", &table, &mut flat)?;
    Ok(flat)
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) -> Result<()> {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out)?,
            _ => {
                let key = canonical(&key)?;
                if out.insert(key.clone(), v.clone()).is_some() {
                    return Err(Error::Config(format!("{key}: given twice (directly and through an alias)")));
                }
            }
        }
    }
    Ok(())
}

fn canonical(key: &str) -> Result<String> {
    if KEYS.contains(&key) {
        return Ok(key.to_string());
    }
    if let Some((_, to)) = ALIASES.iter().find(|(from, _)| *from == key) {
        return Ok(to.to_string());
    }
    let mut valid: Vec<&str> = KEYS.to_vec();
    valid.extend(ALIASES.iter().map(|(from, _)| *from));
    Err(Error::UnknownKey { key: key.to_string(), valid: valid.join(", ") })
}

fn override_value(text: &str) -> Value {
    match format!("v = {text}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(text.to_string())),
        Err(_) => Value::String(text.to_string()),
    }
}

struct Keys(BTreeMap<String, Value>);

impl Keys {
    fn take(&mut self, key: &str) -> Option<Value> {
        self.0.remove(key)
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key).map(|v| as_f64(&v, key)).transpose()
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        self.take(key).map(|v| as_u64(&v, key).map(|x| x as usize)).transpose()
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        self.take(key)
            .map(|v| match v {
                Value::String(s) => Ok(s),
                _ => Err(Error::Config(format!("{key}: expected a string"))),
            })
            .transpose()
    }
}

fn as_f64(v: &Value, key: &str) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Config(format!("{key}: expected a number"))),
    }
}

fn as_u64(v: &Value, key: &str) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(Error::Config(format!("{key}: expected a non-negative integer"))),
    }
}

fn as_complex(v: &Value, key: &str) -> Result<Complex64> {
    match v {
        Value::Array(a) if a.len() == 2 => Ok(Complex64::new(as_f64(&a[0], key)?, as_f64(&a[1], key)?)),
        _ => Ok(Complex64::new(as_f64(v, key).map_err(|_| Error::Config(format!("{key}: expected [re, im]")))?, 0.0)),
    }
}

fn as_point(v: &Value, dim: usize, key: &str) -> Result<Point> {
    match (dim, v) {
        (1, _) => Ok(Point::one(as_complex(v, key)?)),
        (_, Value::Array(a)) if a.len() == 2 && a.iter().all(|c| matches!(c, Value::Array(_))) => {
            Ok(Point::two(as_complex(&a[0], key)?, as_complex(&a[1], key)?))
        }
        _ => Err(Error::Config(format!("{key}: expected [[re, im], [re, im]] on the bidisc"))),
    }
}

fn complex_value(c: &Complex64) -> Value {
    Value::Array(vec![c.re.into(), c.im.into()])
}

fn point_value(p: &Point) -> Value {
    match p.dim() {
        1 => complex_value(&p.z()),
        _ => Value::Array(p.coords().iter().map(complex_value).collect()),
    }
}

fn named(field: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::InvalidParameter(m) => Error::Config(format!("{field}: {m}")),
        other => other,
    }
}

fn resolve(
    map: BTreeMap<String, Value>,
    experiment: Option<ExperimentKind>,
    fallback: Option<ExperimentKind>,
    base: &Path,
) -> Result<RunConfig> {
    let mut k = Keys(map);
    let from_file = k.string("experiment")?.map(|s| s.parse::<ExperimentKind>()).transpose()?;
    let kind = match (experiment, from_file) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::Config(format!("experiment: config names `{b}` but `{a}` was requested")))
        }
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => fallback.ok_or_else(|| Error::Config("experiment: missing".into()))?,
    };

    let domain = match k.string("domain.kind")?.as_deref().unwrap_or("disk") {
        "disk" => Domain::disk(k.f64("domain.R")?.unwrap_or(1.0)).map_err(named("domain.R"))?,
        "polydisc" | "bidisc" => {
            let r1 = k.f64("domain.R1")?.unwrap_or(1.0);
            let r2 = k.f64("domain.R2")?.unwrap_or(1.0);
            Domain::polydisc(r1, r2).map_err(named("domain.R1"))?
        }
        other => return Err(Error::Config(format!("domain.kind: unknown domain `{other}` (disk, polydisc)"))),
    };
    let dim = domain.dim();
    for key in ["domain.R", "domain.R1", "domain.R2"] {
        if k.0.contains_key(key) {
            return Err(Error::Config(format!("{key}: does not apply to this domain")));
        }
    }

    let weight = match k.string("weight.kind")?.as_deref().unwrap_or("zero") {
        "zero" => Weight::Zero,
        "quadratic" => Weight::quadratic(k.f64("weight.c")?.unwrap_or(1.0)).map_err(named("weight.c"))?,
        "max-log" => Weight::MaxLog,
        "log-abs-poly" => {
            let coeffs = match k.take("weight.coeffs") {
                Some(Value::Array(a)) => a.iter().map(|c| as_complex(c, "weight.coeffs")).collect::<Result<Vec<_>>>()?,
                _ => return Err(Error::Config("weight.coeffs: expected an array of [re, im] pairs".into())),
            };
            let eps = k.f64("weight.eps")?.ok_or_else(|| Error::Config("weight.eps: missing".into()))?;
            Weight::log_abs_poly(coeffs, eps).map_err(named("weight.coeffs"))?
        }
        "grid" => {
            let origin = match k.take("weight.grid.origin") {
                Some(v) => {
                    let c = as_complex(&v, "weight.grid.origin")?;
                    [c.re, c.im]
                }
                None => return Err(Error::Config("weight.grid.origin: missing".into())),
            };
            let spacing = k.f64("weight.grid.spacing")?.ok_or_else(|| Error::Config("weight.grid.spacing: missing".into()))?;
            let grid = match (k.string("weight.grid.file")?, k.take("weight.grid.values")) {
                (Some(file), None) => {
                    let text = std::fs::read_to_string(base.join(&file))
                        .map_err(|e| Error::Config(format!("weight.grid.file: {file}: {e}")))?;
                    GridWeight::parse(&text, origin, spacing)
                }
                (None, Some(Value::Array(rows))) => {
                    let mut values = Vec::new();
                    let mut nx = 0;
                    for row in &rows {
                        let Value::Array(row) = row else {
                            return Err(Error::Config("weight.grid.values: expected an array of rows".into()));
                        };
                        nx = row.len();
                        for v in row {
                            values.push(as_f64(v, "weight.grid.values")?);
                        }
                    }
                    GridWeight::new(origin, spacing, nx, rows.len(), values)
                }
                _ => return Err(Error::Config("weight.grid: give exactly one of weight.grid.file, weight.grid.values".into())),
            }
            .map_err(named("weight.grid"))?;
            Weight::Grid(grid)
        }
        other => {
            return Err(Error::Config(format!(
                "weight.kind: unknown weight `{other}` (zero, quadratic, max-log, log-abs-poly, grid)"
            )))
        }
    };
    weight.validate_for(&domain).map_err(named("weight.kind"))?;

    let mut cfg = defaults_for(kind, domain.clone(), weight)?;

    if let Some(kind) = k.string("compact.kind")? {
        let scale = domain.radii().to_vec();
        cfg.compact = match kind.as_str() {
            "disk" => CompactSubset::closed_disk(&domain, k.f64("compact.rho")?.unwrap_or(0.6 * scale[0])),
            "polydisc" => CompactSubset::closed_polydisc(
                &domain,
                k.f64("compact.rho1")?.unwrap_or(0.6 * scale[0]),
                k.f64("compact.rho2")?.unwrap_or(0.6 * scale[scale.len() - 1]),
            ),
            "ball" => {
                let center = match k.take("compact.center") {
                    Some(v) => as_point(&v, dim, "compact.center")?,
                    None => Point::origin(dim),
                };
                let r = k.f64("compact.r")?.ok_or_else(|| Error::Config("compact.r: missing".into()))?;
                CompactSubset::closed_ball(&domain, center, r)
            }
            other => return Err(Error::Config(format!("compact.kind: unknown compact `{other}` (disk, polydisc, ball)"))),
        }
        .map_err(named("compact"))?;
        cfg.omega_inflate = 0.5 * cfg.compact.margin();
    } else if let Some(rho) = k.f64("compact.rho")? {
        cfg.compact = CompactSubset::closed_disk(&domain, rho).map_err(named("compact.rho"))?;
        cfg.omega_inflate = 0.5 * cfg.compact.margin();
    }
    for key in ["compact.rho", "compact.rho1", "compact.rho2", "compact.center", "compact.r"] {
        if k.0.contains_key(key) {
            return Err(Error::Config(format!("{key}: does not apply to this compact")));
        }
    }

    if let Some(v) = k.take("ball.center") {
        cfg.ball_center = as_point(&v, dim, "ball.center")?;
    }
    if let Some(r) = k.f64("ball.r")? {
        cfg.ball_r = r;
    }
    if let Some(r) = k.f64("ball.r2")? {
        cfg.ball_r2 = r;
    }
    if let Some(v) = k.take("n") {
        cfg.n = match v {
            Value::Array(a) => a
                .iter()
                .map(|x| as_u64(x, "n").and_then(|n| u32::try_from(n).map_err(|_| Error::Config("n: entry too large".into()))))
                .collect::<Result<_>>()?,
            Value::Integer(_) => vec![as_u64(&v, "n")? as u32],
            _ => return Err(Error::Config("n: expected a list of integers".into())),
        };
    }
    if let Some(t) = k.usize("trials")? {
        cfg.trials = t;
    }
    if let Some(e) = k.f64("eps")? {
        cfg.eps = e;
    }
    if let Some(v) = k.take("master_seed") {
        cfg.seed = as_u64(&v, "master_seed")?;
    }
    match (k.usize("quadrature.radial_order")?, k.usize("quadrature.angular_order")?) {
        (Some(r), Some(a)) => cfg.orders = Some((r, a)),
        (None, None) => {}
        _ => return Err(Error::Config("quadrature: give both radial_order and angular_order".into())),
    }
    let degree = k.usize("basis.degree")?;
    let tol = k.f64("basis.tol")?;
    let m_max = k.usize("basis.m_max")?;
    match (degree, tol, m_max) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err(Error::Config("basis.degree: fixed degree excludes basis.tol and basis.m_max".into()))
        }
        (Some(degree), None, None) => cfg.degree = DegreeChoice::Fixed { degree },
        (None, tol, m_max) => {
            if let DegreeChoice::Auto { tol: t0, m_max: m0 } = cfg.degree {
                cfg.degree = DegreeChoice::Auto { tol: tol.unwrap_or(t0), m_max: m_max.unwrap_or(m0) };
            }
        }
    }
    if let Some(r) = k.usize("k_rule.radial_order")? {
        cfg.k_orders.0 = r;
    }
    if let Some(a) = k.usize("k_rule.angular_order")? {
        cfg.k_orders.1 = a;
    }
    if let Some(r) = k.usize("cells.rings")? {
        cfg.cells.0 = r;
    }
    if let Some(s) = k.usize("cells.sectors")? {
        cfg.cells.1 = s;
    }
    if let Some(x) = k.f64("omega.inflate")? {
        cfg.omega_inflate = x;
    }
    if let Some(h) = k.f64("stencil.h")? {
        cfg.stencil_h = h;
    }

    let output_dir = k.string("output_dir")?.map(PathBuf::from).unwrap_or_else(|| PathBuf::from("gaf-out").join(kind.name()));
    let cache_dir = k.string("cache_dir")?.map(PathBuf::from);
    let verbosity = k.usize("verbosity")?.unwrap_or(0).min(u8::MAX as usize) as u8;
    let workers = k.usize("workers")?;
    if workers == Some(0) {
        return Err(Error::Config("workers: must be >= 1".into()));
    }
    if let Some(key) = k.0.keys().next() {
        return Err(Error::Config(format!("{key}: does not apply to this configuration")));
    }
    cfg.validate()?;
    Ok(RunConfig { experiment: kind, config: cfg, output_dir, cache_dir, verbosity, workers })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_materializes_defaults() {
        let rc = parse_config_str("experiment = \"l1\"\nweight = \"zero\"\ndomain = \"disk\"\nR = 1\n", None).unwrap();
        assert_eq!(rc.experiment, ExperimentKind::L1);
        assert_eq!(rc.config.n, vec![5, 10, 20, 40]);
        assert_eq!(rc.config.trials, 100);
        assert_eq!(rc.config.seed, 0);
        assert_eq!(rc.config.weight, Weight::Zero);
    }

    #[test]
    fn decreasing_n_is_rejected() {
        let err = parse_config_str("experiment = \"l1\"\nn = [10, 5]\n", None).unwrap_err();
        assert!(err.to_string().contains("n list must be increasing"), "{err}");
    }

    #[test]
    fn unknown_key_lists_valid_keys() {
        let err = parse_config_str("experiment = \"l1\"\ntrails = 3\n", None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("trails") && msg.contains("trials") && msg.contains("master_seed"), "{msg}");
    }

    #[test]
    fn roundtrip_preserves_hash() {
        let text = "experiment = \"tails\"\nweight.kind = \"quadratic\"\nweight.c = 1.0\nball.r = 0.2\neps = 0.3\nmaster_seed = 7\n";
        let a = parse_config_str(text, None).unwrap();
        let b = parse_config_str(&a.to_toml(), None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.config.n, vec![2, 4, 6, 8, 10, 12, 14, 16]);
        assert_eq!(a.config.trials, 2000);

        let grid = "experiment = \"sandwich\"\n[weight]\nkind = \"grid\"\norigin = [-1.0, -1.0]\nspacing = 1.0\nvalues = [[2.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 2.0]]\n";
        let err = parse_config_str(grid, None).unwrap_err();
        assert!(err.to_string().contains("weight.origin"), "{err}");
        let grid = grid.replace("origin", "grid.origin").replace("spacing", "grid.spacing").replace("values", "grid.values");
        let a = parse_config_str(&grid, None).unwrap();
        let b = parse_config_str(&a.to_toml(), None).unwrap();
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn output_settings_do_not_enter_the_hash() {
        let a = parse_config_str("experiment = \"l1\"\n", None).unwrap();
        let b = parse_config_str("experiment = \"l1\"\noutput_dir = \"x\"\ncache_dir = \"y\"\nworkers = 3\nverbosity = 2\n", None).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse_config_str("experiment = \"l1\"\nseed = 1\n", None).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn overrides_and_subcommand_agreement() {
        let rc = parse_config(None, &["trials=7".into(), "weight=quadratic".into(), "weight.c=2".into()], Some(ExperimentKind::L1)).unwrap();
        assert_eq!(rc.config.trials, 7);
        assert_eq!(rc.config.weight, Weight::Quadratic { c: 2.0 });
        let err = parse_config_str("experiment = \"l1\"\n", Some(ExperimentKind::Tails)).unwrap_err();
        assert!(err.to_string().contains("experiment"));
        let err = parse_config_str("experiment = \"l1\"\nball.r = 0.9\n", None).unwrap_err();
        assert!(err.to_string().contains("ball.r"));
        let err = parse_config_str("experiment = \"l1\"\nweight = \"max-log\"\nweight.c = 1\n", None);
        assert!(err.is_err());
    }
}
