//! `key = value` run configuration with optional `[section]` headers.

use std::fmt;
use std::path::{Path, PathBuf};

use tilewave::PullbackWeight;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, key: &str, message: impl Into<String>) -> Self {
        Self { line: Some(line), key: Some(key.to_string()), message: message.into() }
    }

    pub fn general(message: impl Into<String>) -> Self {
        Self { line: None, key: None, message: message.into() }
    }

    pub fn for_key(key: &str, message: impl Into<String>) -> Self {
        Self { line: None, key: Some(key.to_string()), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "key `{key}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainChoice {
    Triangle,
    Rectangle,
    /// A tiling read from a file; the basis domain is its tile.
    Tiling(PathBuf),
}

impl DomainChoice {
    pub fn name(&self) -> &'static str {
        match self {
            DomainChoice::Triangle => "triangle",
            DomainChoice::Rectangle => "rectangle",
            DomainChoice::Tiling(_) => "tiling",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegionChoice {
    Full,
    LeftHalfRectangle,
    /// `K_h(𝓣)`, 1-based.
    TileImage(usize),
    Polygons(Vec<Vec<(f64, f64)>>),
}

impl RegionChoice {
    pub fn id(&self) -> String {
        match self {
            RegionChoice::Full => "full".into(),
            RegionChoice::LeftHalfRectangle => "left_half_rectangle".into(),
            RegionChoice::TileImage(h) => format!("tile_image_{h}"),
            RegionChoice::Polygons(_) => "polygons".into(),
        }
    }
}

/// Coordinates of a region: the tiling target (pulled back onto the tile for
/// folded domains) or the basis domain itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionFrame {
    Target,
    Domain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: DomainChoice,
    pub max_k1: u32,
    pub max_k2: u32,
    pub max_modes: Option<usize>,
    pub quad_order: usize,
    pub zero_tol: f64,
    pub dup_tol: f64,
    pub basis_cache: Option<PathBuf>,
    pub region: RegionChoice,
    pub region_frame: RegionFrame,
    pub pullback_weight: PullbackWeight,
    pub subdivision_level: u32,
    pub horizons: Vec<f64>,
    pub n_times: usize,
    pub grid: usize,
    pub init_modes: usize,
    pub samples: usize,
    pub boundary_tol: f64,
    pub cluster_tol: f64,
    pub n_per_edge: usize,
    pub equivalence_tol: f64,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    fn defaults(domain: DomainChoice) -> Self {
        Self {
            domain,
            max_k1: 8,
            max_k2: 8,
            max_modes: None,
            quad_order: 24,
            zero_tol: 1e-8,
            dup_tol: 1e-8,
            basis_cache: None,
            region: RegionChoice::Full,
            region_frame: RegionFrame::Target,
            pullback_weight: PullbackWeight::Multiplicity,
            subdivision_level: 5,
            horizons: vec![4.0],
            n_times: 5,
            grid: 21,
            init_modes: 5,
            samples: 100_000,
            boundary_tol: 1e-9,
            cluster_tol: 1e-9,
            n_per_edge: 64,
            equivalence_tol: 1e-4,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }

    /// Resolves relative paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let DomainChoice::Tiling(p) = &mut self.domain {
            fix(p);
        }
        if let Some(p) = &mut self.basis_cache {
            fix(p);
        }
        fix(&mut self.output_dir);
    }
}

/// Canonical section of every key.
const KEYS: &[(&str, &str)] = &[
    ("domain", "domain"),
    ("tiling_file", "domain"),
    ("max_k1", "basis"),
    ("max_k2", "basis"),
    ("max_modes", "basis"),
    ("quad_order", "basis"),
    ("zero_tol", "basis"),
    ("dup_tol", "basis"),
    ("basis_cache", "basis"),
    ("region", "region"),
    ("region_polygons", "region"),
    ("region_frame", "region"),
    ("pullback_weight", "region"),
    ("subdivision_level", "region"),
    ("T", "time"),
    ("n_times", "time"),
    ("grid", "output"),
    ("output_dir", "output"),
    ("init_modes", "data"),
    ("seed", "data"),
    ("samples", "checks"),
    ("boundary_tol", "checks"),
    ("cluster_tol", "checks"),
    ("n_per_edge", "checks"),
    ("equivalence_tol", "checks"),
];

fn section_of(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(k, _)| *k == key).map(|(_, s)| *s)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError {
                line: Some(line_no),
                key: None,
                message: format!("malformed section header `{line}`"),
            })?;
            let name = name.trim();
            if !KEYS.iter().any(|(_, s)| *s == name) {
                return Err(ConfigError { line: Some(line_no), key: None, message: format!("unknown section `{name}`") });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError {
            line: Some(line_no),
            key: None,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let canonical = section_of(key).ok_or_else(|| ConfigError::at(line_no, key, "unknown key"))?;
        if let Some(s) = &section {
            if s != canonical {
                return Err(ConfigError::at(line_no, key, format!("belongs in section [{canonical}], found in [{s}]")));
            }
        }
        if entries.iter().any(|(_, k, _)| k == key) {
            return Err(ConfigError::at(line_no, key, "duplicate key"));
        }
        entries.push((line_no, key.to_string(), value.to_string()));
    }

    let get = |key: &str| entries.iter().find(|(_, k, _)| k == key).map(|(l, _, v)| (*l, v.as_str()));
    let (domain_line, domain_value) = get("domain").ok_or_else(|| ConfigError::for_key("domain", "required key is missing"))?;
    let domain = match domain_value {
        "triangle" => DomainChoice::Triangle,
        "rectangle" => DomainChoice::Rectangle,
        "tiling" => {
            let (_, path) =
                get("tiling_file").ok_or_else(|| ConfigError::for_key("tiling_file", "required when domain = tiling"))?;
            DomainChoice::Tiling(PathBuf::from(path))
        }
        other => {
            return Err(ConfigError::at(domain_line, "domain", format!("expected triangle, rectangle or tiling, got `{other}`")))
        }
    };
    let mut cfg = RunConfig::defaults(domain);
    if let (Some((line, _)), false) = (get("tiling_file"), matches!(cfg.domain, DomainChoice::Tiling(_))) {
        return Err(ConfigError::at(line, "tiling_file", "only valid with domain = tiling"));
    }

    for (line, key, value) in &entries {
        let (line, key, value) = (*line, key.as_str(), value.as_str());
        match key {
            "domain" | "tiling_file" => {}
            "max_k1" => cfg.max_k1 = positive_int(line, key, value)?,
            "max_k2" => cfg.max_k2 = positive_int(line, key, value)?,
            "max_modes" => cfg.max_modes = Some(positive_int(line, key, value)?),
            "quad_order" => {
                cfg.quad_order = positive_int(line, key, value)?;
                if cfg.quad_order < 2 {
                    return Err(ConfigError::at(line, key, "must be at least 2"));
                }
            }
            "zero_tol" => cfg.zero_tol = positive_real(line, key, value)?,
            "dup_tol" => cfg.dup_tol = positive_real(line, key, value)?,
            "basis_cache" => cfg.basis_cache = Some(PathBuf::from(value)),
            "region" => {
                cfg.region = match value {
                    "full" => RegionChoice::Full,
                    "left_half_rectangle" => RegionChoice::LeftHalfRectangle,
                    "polygons" => RegionChoice::Polygons(Vec::new()),
                    other => match other.strip_prefix("tile_image_").map(str::parse::<usize>) {
                        Some(Ok(h)) if h >= 1 => RegionChoice::TileImage(h),
                        _ => {
                            return Err(ConfigError::at(
                                line,
                                key,
                                format!("expected full, left_half_rectangle, tile_image_<h> or polygons, got `{other}`"),
                            ))
                        }
                    },
                }
            }
            "region_polygons" => {}
            "region_frame" => {
                cfg.region_frame = match value {
                    "target" => RegionFrame::Target,
                    "domain" => RegionFrame::Domain,
                    other => return Err(ConfigError::at(line, key, format!("expected target or domain, got `{other}`"))),
                }
            }
            "pullback_weight" => {
                cfg.pullback_weight = match value {
                    "multiplicity" => PullbackWeight::Multiplicity,
                    "indicator" => PullbackWeight::Indicator,
                    other => {
                        return Err(ConfigError::at(line, key, format!("expected multiplicity or indicator, got `{other}`")))
                    }
                }
            }
            "subdivision_level" => {
                cfg.subdivision_level = positive_int(line, key, value)?;
                if cfg.subdivision_level > 9 {
                    return Err(ConfigError::at(line, key, "at most 9"));
                }
            }
            "T" => {
                let list = value
                    .split(',')
                    .map(|v| positive_real(line, key, v.trim()))
                    .collect::<Result<Vec<f64>, _>>()?;
                if list.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(ConfigError::at(line, key, "horizon list must be strictly ascending"));
                }
                cfg.horizons = list;
            }
            "n_times" => cfg.n_times = positive_int(line, key, value)?,
            "grid" => {
                cfg.grid = positive_int(line, key, value)?;
                if cfg.grid < 2 {
                    return Err(ConfigError::at(line, key, "must be at least 2"));
                }
            }
            "output_dir" => cfg.output_dir = PathBuf::from(value),
            "init_modes" => cfg.init_modes = positive_int(line, key, value)?,
            "seed" => {
                cfg.seed = value
                    .parse::<u64>()
                    .map_err(|_| ConfigError::at(line, key, format!("expected a non-negative integer, got `{value}`")))?
            }
            "samples" => {
                cfg.samples = positive_int(line, key, value)?;
                if cfg.samples < 1000 {
                    return Err(ConfigError::at(line, key, "at least 1000 samples are required"));
                }
            }
            "boundary_tol" => cfg.boundary_tol = positive_real(line, key, value)?,
            "cluster_tol" => cfg.cluster_tol = positive_real(line, key, value)?,
            "n_per_edge" => {
                cfg.n_per_edge = positive_int(line, key, value)?;
                if cfg.n_per_edge < 2 {
                    return Err(ConfigError::at(line, key, "must be at least 2"));
                }
            }
            "equivalence_tol" => cfg.equivalence_tol = positive_real(line, key, value)?,
            _ => unreachable!("key table and match arms agree"),
        }
    }

    match (&mut cfg.region, get("region_polygons")) {
        (RegionChoice::Polygons(polys), Some((line, value))) => *polys = parse_polygons(line, value)?,
        (RegionChoice::Polygons(_), None) => {
            return Err(ConfigError::for_key("region_polygons", "required when region = polygons"))
        }
        (_, Some((line, _))) => return Err(ConfigError::at(line, "region_polygons", "only valid with region = polygons")),
        _ => {}
    }
    Ok(cfg)
}

fn positive_int<T: std::str::FromStr + Default + PartialOrd>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
    if value.starts_with('-') {
        return Err(ConfigError::at(line, key, format!("must be positive, got `{value}`")));
    }
    let v: T = value
        .parse()
        .map_err(|_| ConfigError::at(line, key, format!("expected a positive integer, got `{value}`")))?;
    if v <= T::default() {
        return Err(ConfigError::at(line, key, format!("must be positive, got `{value}`")));
    }
    Ok(v)
}

fn positive_real(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = value.parse().map_err(|_| ConfigError::at(line, key, format!("expected a number, got `{value}`")))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(ConfigError::at(line, key, format!("must be positive, got `{value}`")));
    }
    Ok(v)
}

/// `x,y x,y x,y; x,y ...`: polygons separated by `;`, vertices by whitespace.
fn parse_polygons(line: usize, value: &str) -> Result<Vec<Vec<(f64, f64)>>, ConfigError> {
    let key = "region_polygons";
    let mut out = Vec::new();
    for poly in value.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let mut verts = Vec::new();
        for vertex in poly.split_whitespace() {
            let (a, b) = vertex
                .split_once(',')
                .ok_or_else(|| ConfigError::at(line, key, format!("vertex `{vertex}` is not `x,y`")))?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| ConfigError::at(line, key, format!("malformed number `{s}`")))
            };
            verts.push((parse(a)?, parse(b)?));
        }
        if verts.len() < 3 {
            return Err(ConfigError::at(line, key, "each polygon needs at least 3 vertices"));
        }
        out.push(verts);
    }
    if out.is_empty() {
        return Err(ConfigError::at(line, key, "no polygons given"));
    }
    Ok(out)
}
