use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use tilewave::geometry::{self, Containment};
use tilewave::observability::{horizon_sweep, ObservedGram};
use tilewave::spectral::{BasisKind, BasisSpec, DropReason};
use tilewave::{ConvexPolygon, EigenBasis, ObservationRegion, Point, Region, Tiling, WaveState};

use crate::config::{DomainChoice, RegionChoice, RegionFrame, RunConfig};
use crate::files::{load_or_build, read_tiling, CacheStatus, CACHE_HEADER};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    BuildBasis,
    CheckTiling,
    FindSigns,
    Simulate,
    Observe,
    VerifyEquivalence,
    EstimateConstants,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::BuildBasis,
        Command::CheckTiling,
        Command::FindSigns,
        Command::Simulate,
        Command::Observe,
        Command::VerifyEquivalence,
        Command::EstimateConstants,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::BuildBasis => "build-basis",
            Command::CheckTiling => "check-tiling",
            Command::FindSigns => "find-signs",
            Command::Simulate => "simulate",
            Command::Observe => "observe",
            Command::VerifyEquivalence => "verify-equivalence",
            Command::EstimateConstants => "estimate-constants",
        }
    }
}

/// The JSON report of a finished command; `passed = false` means a
/// verification failed.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutcome {
    pub passed: bool,
    pub report: Value,
}

pub const CONSTANTS_HEADER: [&str; 7] = ["domain", "region_id", "T", "mode_count", "c1", "c2", "observed_energy"];
pub const FIELD_HEADER: [&str; 4] = ["t", "x1", "x2", "u"];
pub const ENERGY_HEADER: [&str; 5] = ["domain", "region_id", "T", "mode_count", "observed_energy"];

/// Runs a command and writes `<command>.json` plus any CSV artifacts into
/// the configured output directory.
pub fn run_command(cmd: Command, cfg: &RunConfig) -> Result<CommandOutcome, CliError> {
    fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::io(&cfg.output_dir, e))?;
    let mut outcome = match cmd {
        Command::BuildBasis => build_basis_cmd(cfg)?,
        Command::CheckTiling => check_tiling(cfg)?,
        Command::FindSigns => find_signs(cfg)?,
        Command::Simulate => simulate(cfg)?,
        Command::Observe => observe(cfg)?,
        Command::VerifyEquivalence => verify_equivalence(cfg)?,
        Command::EstimateConstants => estimate_constants(cfg)?,
    };
    if let Value::Object(map) = &mut outcome.report {
        map.insert("command".into(), json!(cmd.name()));
        map.insert("pass".into(), json!(outcome.passed));
    }
    let path = cfg.output_dir.join(format!("{}.json", cmd.name()));
    let text = serde_json::to_string_pretty(&outcome.report).map_err(CliError::numerical)?;
    fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(outcome)
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn write_csv<const N: usize>(path: &Path, header: [&str; N], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(header).map_err(CliError::numerical)?;
    for row in rows {
        w.write_record(row).map_err(CliError::numerical)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn tiling_for(cfg: &RunConfig) -> Result<Tiling, CliError> {
    match &cfg.domain {
        DomainChoice::Triangle => Ok(Tiling::half_equilateral()),
        DomainChoice::Tiling(path) => read_tiling(path),
        DomainChoice::Rectangle => Err(CliError::Input("domain = rectangle has no tiling; use triangle or tiling".into())),
    }
}

fn basis_kind(cfg: &RunConfig) -> Result<BasisKind, CliError> {
    match &cfg.domain {
        DomainChoice::Triangle => Ok(BasisKind::half_equilateral()),
        DomainChoice::Rectangle => Ok(BasisKind::sqrt3_rectangle()),
        DomainChoice::Tiling(path) => {
            let tiling = read_tiling(path)?;
            BasisKind::folded(tiling).map_err(|e| {
                CliError::Input(format!("tiling file cannot carry a folded basis (signs and an origin-anchored rectangular target are required): {e}"))
            })
        }
    }
}

fn spec(cfg: &RunConfig) -> BasisSpec {
    BasisSpec {
        max_k1: cfg.max_k1,
        max_k2: cfg.max_k2,
        quad_order: cfg.quad_order,
        zero_tol: cfg.zero_tol,
        dup_tol: cfg.dup_tol,
        max_modes: cfg.max_modes,
    }
}

fn load_basis(cfg: &RunConfig) -> Result<(EigenBasis, CacheStatus), CliError> {
    load_or_build(&basis_kind(cfg)?, &spec(cfg), cfg.basis_cache.as_deref())
}

/// The region in target coordinates (the rectangle for `domain = rectangle`),
/// or `None` for the whole domain.
fn region_polygons(cfg: &RunConfig, kind: &BasisKind) -> Result<Option<Region>, CliError> {
    let target = match kind.tiling() {
        Some(t) => t.target().clone(),
        None => kind.natural_domain(),
    };
    let region = match &cfg.region {
        RegionChoice::Full => return Ok(None),
        RegionChoice::LeftHalfRectangle => {
            let (lo, hi) = target
                .as_axis_rectangle()
                .ok_or_else(|| CliError::Input("left_half_rectangle needs a rectangular target".into()))?;
            let half = ConvexPolygon::rectangle(lo, Point::new(0.5 * (lo.x1 + hi.x1), hi.x2)).map_err(CliError::numerical)?;
            Region::single(half)
        }
        RegionChoice::TileImage(h) => {
            let images = match kind.tiling() {
                Some(t) => t.images().to_vec(),
                None => Tiling::half_equilateral().images().to_vec(),
            };
            let image = images
                .get(h - 1)
                .ok_or_else(|| CliError::Input(format!("tile_image_{h}: the tiling has {} motions", images.len())))?;
            Region::single(image.clone())
        }
        RegionChoice::Polygons(polys) => {
            let mut out = Vec::new();
            for verts in polys {
                let poly = ConvexPolygon::new_any_orientation(verts.iter().map(|&(x, y)| Point::new(x, y)).collect())
                    .map_err(|e| CliError::Input(format!("region_polygons: {e}")))?;
                out.push(poly);
            }
            Region::new(out)
        }
    };
    Ok(Some(region))
}

fn check_inside(region: &Region, ambient: &ConvexPolygon, what: &str) -> Result<(), CliError> {
    for poly in region.polygons() {
        if poly.vertices().iter().any(|&v| ambient.contains(v, 1e-9) == Containment::Outside) {
            return Err(CliError::Input(format!("region polygon leaves the {what}")));
        }
    }
    Ok(())
}

/// Observation region on the basis domain.
fn observation_region(cfg: &RunConfig, basis: &EigenBasis) -> Result<ObservationRegion, CliError> {
    let Some(region) = region_polygons(cfg, basis.kind())? else {
        return Ok(ObservationRegion::Full);
    };
    match basis.kind().tiling() {
        Some(tiling) if cfg.region_frame == RegionFrame::Target => {
            check_inside(&region, tiling.target(), "tiling target")?;
            Ok(ObservationRegion::Pullback { region, weight: cfg.pullback_weight, level: cfg.subdivision_level })
        }
        _ => {
            check_inside(&region, basis.domain(), "basis domain")?;
            Ok(ObservationRegion::Polygons(region))
        }
    }
}

fn modes_json(basis: &EigenBasis) -> Value {
    Value::Array(
        basis
            .pairs()
            .iter()
            .map(|p| json!({"k1": p.index.k1, "k2": p.index.k2, "eigenvalue": p.eigenvalue, "norm_factor": p.norm_factor}))
            .collect(),
    )
}

fn build_basis_cmd(cfg: &RunConfig) -> Result<CommandOutcome, CliError> {
    let (basis, cache) = load_basis(cfg)?;
    let rows: Vec<Vec<String>> = basis
        .pairs()
        .iter()
        .map(|p| {
            vec![
                p.index.k1.to_string(),
                p.index.k2.to_string(),
                format!("{:.16e}", p.eigenvalue),
                format!("{:.16e}", p.norm_factor),
                p.provenance.to_string(),
            ]
        })
        .collect();
    write_csv(&cfg.output_dir.join("basis.csv"), CACHE_HEADER, &rows)?;
    let dropped: Vec<Value> = basis
        .dropped()
        .iter()
        .map(|d| match d.reason {
            DropReason::Vanishes { relative_norm } => {
                json!({"k1": d.index.k1, "k2": d.index.k2, "reason": "vanishes", "relative_norm": relative_norm})
            }
            DropReason::Duplicate { of, overlap } => json!({
                "k1": d.index.k1, "k2": d.index.k2, "reason": "duplicate",
                "of": {"k1": of.k1, "k2": of.k2}, "overlap": overlap
            }),
            DropReason::Truncated => json!({"k1": d.index.k1, "k2": d.index.k2, "reason": "truncated"}),
        })
        .collect();
    Ok(CommandOutcome {
        passed: true,
        report: json!({
            "domain": cfg.domain.name(),
            "cache": cache.as_str(),
            "mode_count": basis.len(),
            "modes": modes_json(&basis),
            "dropped": dropped,
        }),
    })
}

fn check_tiling(cfg: &RunConfig) -> Result<CommandOutcome, CliError> {
    let tiling = tiling_for(cfg)?;
    let report = tiling.validate(cfg.samples, cfg.boundary_tol, cfg.seed).map_err(CliError::numerical)?;
    let points = |v: &[Point]| Value::Array(v.iter().map(|p| json!([p.x1, p.x2])).collect());
    let mut passed = report.pass;
    let mut out = json!({
        "domain": cfg.domain.name(),
        "motions": tiling.len(),
        "samples": report.n_samples,
        "coverage_fraction": report.coverage_fraction,
        "max_overlap_count": report.max_overlap_count,
        "area_defect": report.area_defect,
        "uncovered_examples": points(&report.uncovered),
        "overlap_examples": points(&report.overlapping),
        "tiling_pass": report.pass,
    });
    if let Some(signs) = tiling.signs() {
        let canc = tiling.boundary_cancellation(signs, cfg.n_per_edge, cfg.cluster_tol).map_err(CliError::numerical)?;
        passed &= canc.passed();
        out["signs"] = json!(signs.entries());
        out["admissible"] = json!(canc.passed());
        out["boundary_samples_checked"] = json!(canc.samples_checked);
        out["cancellation_failures"] = Value::Array(
            canc.failures
                .iter()
                .take(32)
                .map(|f| json!({"sample": [f.sample.x1, f.sample.x2], "image": [f.image.x1, f.image.x2], "motions": f.members}))
                .collect(),
        );
    }
    Ok(CommandOutcome { passed, report: out })
}

fn find_signs(cfg: &RunConfig) -> Result<CommandOutcome, CliError> {
    let tiling = tiling_for(cfg)?;
    let found = tiling.find_admissible_signs(cfg.n_per_edge, cfg.cluster_tol).map_err(CliError::numerical)?;
    let list: Vec<Value> = found.iter().map(|s| json!(s.entries())).collect();
    Ok(CommandOutcome {
        passed: !found.is_empty(),
        report: json!({
            "domain": cfg.domain.name(),
            "motions": tiling.len(),
            "candidates_checked": 1u64 << tiling.len(),
            "admissible": list,
        }),
    })
}

fn grid_points(domain: &ConvexPolygon, n: usize) -> Vec<Point> {
    let (lo, hi) = domain.bounding_box();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let p = Point::new(
                lo.x1 + (hi.x1 - lo.x1) * i as f64 / (n - 1) as f64,
                lo.x2 + (hi.x2 - lo.x2) * j as f64 / (n - 1) as f64,
            );
            if domain.contains_closed(p, geometry::DEFAULT_BOUNDARY_TOL) {
                out.push(p);
            }
        }
    }
    out
}

fn simulate(cfg: &RunConfig) -> Result<CommandOutcome, CliError> {
    let (basis, cache) = load_basis(cfg)?;
    let state = WaveState::seeded(&basis, cfg.init_modes, cfg.seed);
    let t_end = *cfg.horizons.last().expect("parser guarantees a horizon");
    let times: Vec<f64> = if cfg.n_times == 1 {
        vec![0.0]
    } else {
        (0..cfg.n_times).map(|i| t_end * i as f64 / (cfg.n_times - 1) as f64).collect()
    };
    let points = grid_points(basis.domain(), cfg.grid);
    let mut rows = Vec::with_capacity(times.len() * points.len());
    let mut energies = Vec::new();
    let mut modes = vec![0.0; basis.len()];
    let mut max_abs = 0.0f64;
    for &t in &times {
        let (value, _) = state.evolve_coefficients(t);
        for &p in &points {
            basis.eval_all(p, &mut modes);
            let u: f64 = modes.iter().zip(&value).map(|(e, c)| e * c).sum();
            max_abs = max_abs.max(u.abs());
            rows.push(vec![num(t), num(p.x1), num(p.x2), num(u)]);
        }
        energies.push(state.total_energy(t));
    }
    write_csv(&cfg.output_dir.join("field.csv"), FIELD_HEADER, &rows)?;
    let e0 = energies[0];
    let drift = energies.iter().map(|e| (e - e0).abs() / e0.max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
    Ok(CommandOutcome {
        passed: true,
        report: json!({
            "domain": cfg.domain.name(),
            "cache": cache.as_str(),
            "mode_count": basis.len(),
            "c": state.c(),
            "d": state.d(),
            "l2_norm_sq": state.l2_norm_sq(),
            "hminus1_norm_sq": state.hminus1_norm_sq(),
            "times": times,
            "total_energy": energies,
            "energy_drift": drift,
            "grid_points": points.len(),
            "max_abs_u": max_abs,
        }),
    })
}

fn observe(cfg: &RunConfig) -> Result<CommandOutcome, CliError> {
    let (basis, cache) = load_basis(cfg)?;
    let region = observation_region(cfg, &basis)?;
    let gram = ObservedGram::assemble(&basis, &region, cfg.quad_order).map_err(CliError::numerical)?;
    let state = WaveState::seeded(&basis, cfg.init_modes, cfg.seed);
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for &t in &cfg.horizons {
        let e = gram.observed_energy(state.c(), state.d(), t).map_err(CliError::numerical)?;
        rows.push(vec![cfg.domain.name().to_string(), cfg.region.id(), num(t), basis.len().to_string(), num(e)]);
        entries.push(json!({"T": t, "observed_energy": e}));
    }
    write_csv(&cfg.output_dir.join("energy.csv"), ENERGY_HEADER, &rows)?;
    Ok(CommandOutcome {
        passed: true,
        report: json!({
            "domain": cfg.domain.name(),
            "region_id": cfg.region.id(),
            "cache": cache.as_str(),
            "mode_count": basis.len(),
            "l2_norm_sq": state.l2_norm_sq(),
            "hminus1_norm_sq": state.hminus1_norm_sq(),
            "energies": entries,
        }),
    })
}

fn estimate_constants(cfg: &RunConfig) -> Result<CommandOutcome, CliError> {
    let (basis, cache) = load_basis(cfg)?;
    let region = observation_region(cfg, &basis)?;
    let sweep = horizon_sweep(&basis, &region, &cfg.horizons, cfg.quad_order).map_err(CliError::numerical)?;
    let gram = ObservedGram::assemble(&basis, &region, cfg.quad_order).map_err(CliError::numerical)?;
    let state = WaveState::seeded(&basis, cfg.init_modes, cfg.seed);
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for est in &sweep {
        let e = gram.observed_energy(state.c(), state.d(), est.horizon).map_err(CliError::numerical)?;
        rows.push(vec![
            cfg.domain.name().to_string(),
            cfg.region.id(),
            num(est.horizon),
            est.mode_count.to_string(),
            num(est.c1),
            num(est.c2),
            num(e),
        ]);
        entries.push(json!({"T": est.horizon, "c1": est.c1, "c2": est.c2, "observed_energy": e}));
    }
    write_csv(&cfg.output_dir.join("constants.csv"), CONSTANTS_HEADER, &rows)?;
    let monotone = sweep.windows(2).all(|w| w[1].c1 >= w[0].c1);
    Ok(CommandOutcome {
        passed: monotone,
        report: json!({
            "domain": cfg.domain.name(),
            "region_id": cfg.region.id(),
            "cache": cache.as_str(),
            "mode_count": basis.len(),
            "c1_nondecreasing": monotone,
            "estimates": entries,
        }),
    })
}

fn rel_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn verify_equivalence(cfg: &RunConfig) -> Result<CommandOutcome, CliError> {
    if cfg.domain == DomainChoice::Rectangle {
        return Err(CliError::Input("verify-equivalence needs a folded domain (triangle or tiling)".into()));
    }
    if cfg.region_frame == RegionFrame::Domain && cfg.region != RegionChoice::Full {
        return Err(CliError::Input("verify-equivalence takes regions in the target frame".into()));
    }
    let (basis, cache) = load_basis(cfg)?;
    let tiling = basis.kind().tiling().expect("folded kind").clone();
    let n = tiling.len() as f64;
    let target = basis.on_target().map_err(CliError::numerical)?;
    let region = region_polygons(cfg, basis.kind())?.unwrap_or_else(|| Region::single(tiling.target().clone()));
    check_inside(&region, tiling.target(), "tiling target")?;
    let tile_region = ObservationRegion::Pullback { region: region.clone(), weight: cfg.pullback_weight, level: cfg.subdivision_level };
    let target_region = ObservationRegion::Polygons(region);
    let rect_order = 2 * cfg.quad_order;

    let state = WaveState::seeded(&basis, cfg.init_modes, cfg.seed);
    let bar = state.prolonged_by_quadrature(&target, rect_order).map_err(CliError::numerical)?;
    let tile_gram = ObservedGram::assemble(&basis, &tile_region, cfg.quad_order).map_err(CliError::numerical)?;
    let target_gram = ObservedGram::assemble(&target, &target_region, rect_order).map_err(CliError::numerical)?;

    let mut failures = Vec::new();
    let mut norm_check = |name: &str, rect: f64, tile: f64| {
        let gap = rel_gap(rect, n * n * tile);
        if gap >= cfg.equivalence_tol {
            failures.push(format!("{name}: relative gap {gap:e}"));
        }
        json!({"target": rect, "tile": tile, "ratio": rect / tile, "relative_gap": gap})
    };
    let l2 = norm_check("l2_norm_sq", bar.l2_norm_sq(), state.l2_norm_sq());
    let hm1 = norm_check("hminus1_norm_sq", bar.hminus1_norm_sq(), state.hminus1_norm_sq());
    let mut energies = Vec::new();
    for &t in &cfg.horizons {
        let rect = target_gram.observed_energy(bar.c(), bar.d(), t).map_err(CliError::numerical)?;
        let tile = tile_gram.observed_energy(state.c(), state.d(), t).map_err(CliError::numerical)?;
        let gap = rel_gap(rect, n * n * tile);
        if gap >= cfg.equivalence_tol {
            failures.push(format!("observed_energy at T={t}: relative gap {gap:e}"));
        }
        let tile_est = tile_gram.estimate(t).map_err(CliError::numerical)?;
        let rect_est = target_gram.estimate(t).map_err(CliError::numerical)?;
        let cgap = rel_gap(tile_est.c1, rect_est.c1).max(rel_gap(tile_est.c2, rect_est.c2));
        if cgap >= cfg.equivalence_tol {
            failures.push(format!("constants at T={t}: relative gap {cgap:e}"));
        }
        energies.push(json!({
            "T": t,
            "target_energy": rect,
            "tile_energy": tile,
            "scaled_tile_energy": n * n * tile,
            "relative_gap": gap,
            "tile_constants": [tile_est.c1, tile_est.c2],
            "target_constants": [rect_est.c1, rect_est.c2],
            "constants_relative_gap": cgap,
        }));
    }
    Ok(CommandOutcome {
        passed: failures.is_empty(),
        report: json!({
            "domain": cfg.domain.name(),
            "region_id": cfg.region.id(),
            "cache": cache.as_str(),
            "mode_count": basis.len(),
            "motions": tiling.len(),
            "scale": n * n,
            "tolerance": cfg.equivalence_tol,
            "l2_norm_sq": l2,
            "hminus1_norm_sq": hm1,
            "energies": energies,
            "failures": failures,
        }),
    })
}
