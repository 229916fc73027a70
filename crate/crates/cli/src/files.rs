//! Text formats: tiling description files and basis caches.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Matrix2;
use sha2::{Digest, Sha256};

use tilewave::spectral::{BasisKind, BasisSpec, EigenPair};
use tilewave::{build_basis, ConvexPolygon, EigenBasis, ModeIndex, Point, Provenance, RigidMotion, SignVector, Tiling};

use crate::CliError;

/// Rounds to 15 significant digits and prints the shortest representation.
fn sig15(v: f64) -> String {
    let rounded: f64 = format!("{v:.14e}").parse::<f64>().expect("formatted float parses") + 0.0;
    format!("{rounded}")
}

fn vertices_line(tag: &str, poly: &ConvexPolygon) -> String {
    let mut line = tag.to_string();
    for v in poly.vertices() {
        let _ = write!(line, " {},{}", sig15(v.x1), sig15(v.x2));
    }
    line
}

/// ```text
/// tile x,y x,y x,y
/// target x,y x,y x,y x,y
/// motion a11 a12 a21 a22 b1 b2     (one line per motion, x ↦ A x + b)
/// signs 1 -1 ...                   (optional)
/// ```
pub fn format_tiling(tiling: &Tiling) -> String {
    let mut out = String::from("# tilewave tiling\n");
    out.push_str(&vertices_line("tile", tiling.tile()));
    out.push('\n');
    out.push_str(&vertices_line("target", tiling.target()));
    out.push('\n');
    for m in tiling.motions() {
        let a = m.linear_row_major();
        let b = m.shift();
        let entries: Vec<String> = a.iter().copied().chain([b.x1, b.x2]).map(sig15).collect();
        let _ = writeln!(out, "motion {}", entries.join(" "));
    }
    if let Some(signs) = tiling.signs() {
        let entries: Vec<String> = signs.entries().iter().map(i8::to_string).collect();
        let _ = writeln!(out, "signs {}", entries.join(" "));
    }
    out
}

pub fn parse_tiling(text: &str) -> Result<Tiling, CliError> {
    let err = |line: usize, msg: String| CliError::Input(format!("tiling file line {line}: {msg}"));
    let mut tile = None;
    let mut target = None;
    let mut motions = Vec::new();
    let mut signs = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let tag = words.next().expect("non-empty line");
        let rest: Vec<&str> = words.collect();
        let number = |s: &str| s.parse::<f64>().map_err(|_| err(line_no, format!("malformed number `{s}`")));
        match tag {
            "tile" | "target" => {
                let mut verts = Vec::new();
                for v in &rest {
                    let (a, b) = v.split_once(',').ok_or_else(|| err(line_no, format!("vertex `{v}` is not `x,y`")))?;
                    verts.push(Point::new(number(a)?, number(b)?));
                }
                let poly = ConvexPolygon::new_any_orientation(verts).map_err(|e| err(line_no, e.to_string()))?;
                if tag == "tile" {
                    tile = Some(poly);
                } else {
                    target = Some(poly);
                }
            }
            "motion" => {
                if rest.len() != 6 {
                    return Err(err(line_no, format!("a motion has 6 entries, got {}", rest.len())));
                }
                let v = rest.iter().map(|s| number(s)).collect::<Result<Vec<f64>, _>>()?;
                let m = RigidMotion::new(Matrix2::new(v[0], v[1], v[2], v[3]), Point::new(v[4], v[5]))
                    .map_err(|e| err(line_no, e.to_string()))?;
                motions.push(m);
            }
            "signs" => {
                let v = rest
                    .iter()
                    .map(|s| s.parse::<i64>().map_err(|_| err(line_no, format!("malformed sign `{s}`"))))
                    .collect::<Result<Vec<i64>, _>>()?;
                signs = Some(SignVector::new(v).map_err(|e| err(line_no, e.to_string()))?);
            }
            other => return Err(err(line_no, format!("unknown entry `{other}`"))),
        }
    }
    let tile = tile.ok_or_else(|| CliError::Input("tiling file has no `tile` line".into()))?;
    let target = target.ok_or_else(|| CliError::Input("tiling file has no `target` line".into()))?;
    let tiling = Tiling::new(tile, target, motions).map_err(|e| CliError::Input(format!("tiling file: {e}")))?;
    match signs {
        Some(s) => tiling.with_signs(s).map_err(|e| CliError::Input(format!("tiling file: {e}"))),
        None => Ok(tiling),
    }
}

pub fn read_tiling(path: &Path) -> Result<Tiling, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read tiling file {}: {e}", path.display())))?;
    parse_tiling(&text)
}

fn describe_kind(kind: &BasisKind) -> String {
    let parent = kind.parent();
    let mut s = format!("parent {:.16e} {:.16e}\n", parent.width(), parent.height());
    match kind {
        BasisKind::Rectangle(_) => s.push_str("rectangle\n"),
        BasisKind::Folded { tiling, .. } => {
            s.push_str("folded\n");
            for v in tiling.tile().vertices().iter().chain(tiling.target().vertices()) {
                let _ = writeln!(s, "v {:.16e} {:.16e}", v.x1, v.x2);
            }
            for m in tiling.motions() {
                let a = m.linear_row_major();
                let b = m.shift();
                let _ = writeln!(s, "m {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}", a[0], a[1], a[2], a[3], b.x1, b.x2);
            }
            if let Some(signs) = tiling.signs() {
                let _ = writeln!(s, "signs {signs}");
            }
        }
    }
    s
}

/// SHA-256 of the basis kind (including the tiling and its signs) and every
/// field of the spec.
pub fn cache_key(kind: &BasisKind, spec: &BasisSpec) -> String {
    let text = format!(
        "tilewave basis cache v1\n{}max_k1 {}\nmax_k2 {}\nquad_order {}\nzero_tol {:.16e}\ndup_tol {:.16e}\nmax_modes {:?}\n",
        describe_kind(kind),
        spec.max_k1,
        spec.max_k2,
        spec.quad_order,
        spec.zero_tol,
        spec.dup_tol,
        spec.max_modes
    );
    Sha256::digest(text.as_bytes()).iter().fold(String::with_capacity(64), |mut acc, b| {
        let _ = write!(acc, "{b:02x}");
        acc
    })
}

pub const CACHE_HEADER: [&str; 5] = ["k1", "k2", "eigenvalue", "norm_factor", "provenance"];

pub fn format_cache(key: &str, basis: &EigenBasis) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CACHE_HEADER).map_err(CliError::numerical)?;
    for p in basis.pairs() {
        w.write_record([
            p.index.k1.to_string(),
            p.index.k2.to_string(),
            format!("{:.16e}", p.eigenvalue),
            format!("{:.16e}", p.norm_factor),
            p.provenance.to_string(),
        ])
        .map_err(CliError::numerical)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(CliError::numerical)?).expect("csv output is utf-8");
    Ok(format!("# tilewave basis cache\n# key {key}\n{body}"))
}

/// Pairs from cache text, or `None` when the key differs or the text is
/// malformed.
pub fn parse_cache(text: &str, key: &str) -> Option<Vec<EigenPair>> {
    let stored = text.lines().find_map(|l| l.strip_prefix("# key "))?;
    if stored.trim() != key {
        return None;
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    if reader.headers().ok()?.iter().collect::<Vec<_>>() != CACHE_HEADER {
        return None;
    }
    let mut pairs = Vec::new();
    for record in reader.records() {
        let r = record.ok()?;
        if r.len() != 5 {
            return None;
        }
        let index = ModeIndex::new(r[0].parse().ok()?, r[1].parse().ok()?).ok()?;
        let eigenvalue: f64 = r[2].parse().ok()?;
        let norm_factor: f64 = r[3].parse().ok()?;
        let provenance = Provenance::parse(&r[4])?;
        if !(eigenvalue > 0.0 && norm_factor > 0.0) {
            return None;
        }
        pairs.push(EigenPair { index, eigenvalue, norm_factor, provenance });
    }
    (!pairs.is_empty()).then_some(pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Disabled,
    /// Read from a cache file with a matching key.
    Hit,
    /// Built and written; no usable cache existed.
    Miss,
}

impl CacheStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CacheStatus::Disabled => "disabled",
            CacheStatus::Hit => "hit",
            CacheStatus::Miss => "miss",
        }
    }
}

pub fn load_or_build(
    kind: &BasisKind,
    spec: &BasisSpec,
    cache: Option<&Path>,
) -> Result<(EigenBasis, CacheStatus), CliError> {
    let Some(path) = cache else {
        return Ok((build_basis(kind, spec).map_err(CliError::numerical)?, CacheStatus::Disabled));
    };
    let key = cache_key(kind, spec);
    if let Ok(text) = fs::read_to_string(path) {
        if let Some(pairs) = parse_cache(&text, &key) {
            let basis = EigenBasis::from_pairs(kind.clone(), pairs).map_err(CliError::numerical)?;
            return Ok((basis, CacheStatus::Hit));
        }
    }
    let basis = build_basis(kind, spec).map_err(CliError::numerical)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, format_cache(&key, &basis)?).map_err(|e| CliError::io(path, e))?;
    Ok((basis, CacheStatus::Miss))
}
