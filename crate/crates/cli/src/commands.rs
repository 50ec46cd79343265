use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use resolvent_geometry::curvature::{
    default_fd_step, ricci_tensor_fd, ricci_vector_state, PencilMetric, VectorStateMetric,
};
use resolvent_geometry::fk_determinant::{
    dihedral_fk_det_with, fk_det, fk_det_at, log_potential, phi_singular, SpectralMeasure,
};
use resolvent_geometry::forms_metric::metric_matrix_with_tol;
use resolvent_geometry::geometry_paths::{
    circle_length, path_length_with, principal_part, riesz_projection, ContourSpec, LengthOptions,
};
use resolvent_geometry::io::{
    self, matrix_json, pair, parse_complex, parse_point, read_matrix_file, read_typed, vector_json,
    MeasureJson, OperatorSpec, PathJson, StateJson, TupleJson,
};
use resolvent_geometry::linalg::{self, CMatrix, CVector, C64};
use resolvent_geometry::operator_gallery::{dihedral_tuple, AnalyticOperator};
use resolvent_geometry::pencil::{Grid2, GridAxis, SliceOptions, SliceSpec};
use resolvent_geometry::power_set::{
    filtration_probe, power_exponent, power_set_sample, similarity_invariance_check, PowerEstimate,
    PowerSchedule, Probe,
};
use resolvent_geometry::quadrature::QuadOptions;
use resolvent_geometry::{GeometryError, MatrixTuple, PencilPoint, Result, StateFunctional};

use crate::args::{Command, Common, ScheduleArgs, SliceArgs};
use crate::report::{Report, Table};

pub fn run(command: &Command) -> Result<Report> {
    match command {
        Command::Spectrum { tuple, slice, .. } => spectrum(&load_tuple(tuple)?, slice),
        Command::MetricGrid {
            tuple,
            slice,
            common,
        } => {
            let t = load_tuple(&tuple.tuple)?;
            let state = parse_state(&tuple.state, t.dim())?;
            metric_grid(&t, &state, slice, common)
        }
        Command::RicciGrid {
            tuple,
            state,
            op,
            vector,
            slice,
            fd_step,
            common,
        } => match (tuple, op) {
            (Some(t), None) => {
                let t = load_tuple(t)?;
                let state = parse_state(state, t.dim())?;
                let field = PencilMetric::new(t, state)?.with_singular_tol(common.tol_sing);
                ricci_grid_fd(&field, slice, *fd_step)
            }
            (None, Some(op)) => {
                let op = load_operator(op)?;
                let x = operator_vector(&op, vector.as_deref())?;
                ricci_grid_vector(&op, &x, slice)
            }
            _ => Err(usage("ricci-grid needs exactly one of --tuple and --op")),
        },
        Command::PathLength {
            tuple,
            state,
            op,
            vector,
            path,
            common,
        } => {
            let path = read_typed::<PathJson>(path)?.into_path()?;
            let opts = LengthOptions::with_rel_tol(common.tol_quad);
            let est = match (tuple, op) {
                (Some(t), None) => {
                    let t = load_tuple(t)?;
                    let state = parse_state(state, t.dim())?;
                    let field = PencilMetric::new(t, state)?.with_singular_tol(common.tol_sing);
                    path_length_with(&field, &path, &opts)?
                }
                (None, Some(op)) => {
                    let op = load_operator(op)?;
                    let x = operator_vector(&op, vector.as_deref())?;
                    path_length_with(&VectorStateMetric::new(&op, x)?, &path, &opts)?
                }
                _ => return Err(usage("path-length needs exactly one of --tuple and --op")),
            };
            Ok(Report::new(
                "path-length",
                json!({
                    "path": PathJson::from_path(&path)?,
                    "length": finite_or_null(est.value),
                    "divergent": est.divergent,
                    "abs_error": est.abs_error,
                }),
            ))
        }
        Command::CircleLength {
            op,
            vector,
            radius,
            center,
            ..
        } => {
            let op = load_operator(op)?;
            let x = operator_vector(&op, vector.as_deref())?;
            let x = x.unscale(x.norm());
            let center = parse_complex(center)?;
            check_circle_avoids_spectrum(&op, center, *radius)?;
            let length = circle_length(&op, &x, *radius, center)?;
            Ok(Report::new(
                "circle-length",
                json!({
                    "operator": op.name(),
                    "center": pair(center),
                    "radius": radius,
                    "length": length,
                }),
            ))
        }
        Command::FkDet {
            tuple,
            z,
            dihedral,
            z1,
            z2,
            truncation,
            common,
        } => {
            if *dihedral {
                let z1 = parse_complex(z1.as_deref().ok_or_else(|| usage("--dihedral needs --z1"))?)?;
                let z2 = parse_complex(z2.as_deref().ok_or_else(|| usage("--dihedral needs --z2"))?)?;
                fk_dihedral(z1, z2, *truncation, common)
            } else {
                let t = load_tuple(tuple.as_deref().ok_or_else(|| usage("fk-det needs --tuple or --dihedral"))?)?;
                let z = parse_point(z.as_deref().ok_or_else(|| usage("fk-det needs --z"))?)?;
                let (value, invertible) = fk_det_at(&t, &z)?;
                Ok(Report::new(
                    "fk-det",
                    json!({
                        "z": vector_json(z.coords()),
                        "fk_det": value,
                        "phi_singular": phi_singular(&t, &z)?,
                        "invertible": invertible,
                    }),
                ))
            }
        }
        Command::LogPotential {
            measure,
            op,
            vector,
            points,
            ..
        } => {
            let mu = match (measure, op) {
                (Some(m), None) => read_typed::<MeasureJson>(m)?.into_measure()?,
                (None, Some(op)) => {
                    let op = load_operator(op)?;
                    let v = op.to_matrix().ok_or_else(|| usage("operator has no matrix form"))?;
                    let x = operator_vector(&op, vector.as_deref())?;
                    SpectralMeasure::from_normal_matrix(&v, &x)?
                }
                _ => return Err(usage("log-potential needs exactly one of --measure and --op")),
            };
            log_potentials(&mu, points)
        }
        Command::Riesz {
            op,
            center,
            radius,
            vector,
            max_terms,
            ..
        } => {
            let op = load_operator(op)?;
            let v = op
                .to_matrix()
                .ok_or_else(|| usage(&format!("{} has no matrix form", op.name())))?;
            let contour = ContourSpec::circle(parse_complex(center)?, *radius)?;
            let x = vector
                .as_deref()
                .map(|s| operator_vector(&op, Some(s)))
                .transpose()?;
            riesz(&v, &contour, x.as_ref(), *max_terms)
        }
        Command::PowerExponent {
            op,
            vector,
            schedule,
            ..
        } => {
            let op = load_operator(op)?;
            let sched = parse_schedule(schedule)?;
            let probe = parse_probe(&op, vector)?;
            let est = power_exponent(&op, &probe, &sched)?;
            Ok(Report::new("power-exponent", estimate_json(&est))
                .param("operator", json!(op.name()))
                .param("schedule", schedule_json(&sched))
                .with_table(diagnostics_table(&[est])))
        }
        Command::PowerSet {
            op,
            vectors,
            schedule,
            ..
        } => {
            let op = load_operator(op)?;
            let sched = parse_schedule(schedule)?;
            let probes = match vectors {
                Some(list) => list
                    .split(',')
                    .map(|s| parse_probe(&op, s))
                    .collect::<Result<Vec<_>>>()?,
                None => default_probes(&op),
            };
            let (entries, estimates) = power_set_sample(&op, &probes, &sched)?;
            let set: Vec<Value> = entries
                .iter()
                .map(|e| json!({ "exponent": e.exponent, "witnesses": e.witnesses }))
                .collect();
            Ok(Report::new(
                "power-set",
                json!({
                    "power_set": set,
                    "estimates": estimates.iter().map(estimate_json).collect::<Vec<_>>(),
                }),
            )
            .param("operator", json!(op.name()))
            .param("schedule", schedule_json(&sched))
            .with_table(diagnostics_table(&estimates)))
        }
        Command::Filtration {
            op,
            tau,
            random,
            seed,
            schedule,
            ..
        } => {
            let op = load_operator(op)?;
            let v = op
                .to_matrix()
                .ok_or_else(|| usage(&format!("{} has no matrix form", op.name())))?;
            let sched = parse_schedule(schedule)?;
            let k = v.nrows();
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut corpus: Vec<CVector> = (0..k).map(|i| linalg::basis_vector(k, i)).collect();
            corpus.extend((0..*random).map(|_| random_unit_vector(&mut rng, k)));
            let mut generators = vec![linalg::identity(k)];
            for j in 1..k {
                generators.push(&generators[j - 1] * &v);
            }
            let probe = filtration_probe(&v, *tau, &corpus, &generators, &sched)?;
            Ok(Report::new(
                "filtration",
                json!({
                    "tau": probe.tau,
                    "members": probe.members,
                    "member_exponents": probe.member_exponents,
                    "dimension": probe.basis.len(),
                    "basis": probe.basis.iter().map(|b| vector_json(b.as_slice())).collect::<Vec<_>>(),
                    "commutant_defect": probe.commutant_defect,
                }),
            )
            .param("operator", json!(op.name()))
            .param("corpus", json!({ "basis": k, "random": random, "seed": seed }))
            .param("generators", json!("powers of V"))
            .param("schedule", schedule_json(&sched)))
        }
        Command::SimilarityCheck {
            op,
            similarity,
            seed,
            schedule,
            ..
        } => {
            let op = load_operator(op)?;
            let v = op
                .to_matrix()
                .ok_or_else(|| usage(&format!("{} has no matrix form", op.name())))?;
            let k = v.nrows();
            let s = match similarity {
                Some(path) => read_matrix_file(path)?,
                None => random_similarity(&mut ChaCha8Rng::seed_from_u64(*seed), k),
            };
            let sched = parse_schedule(schedule)?;
            let vectors: Vec<CVector> = (0..k).map(|i| linalg::basis_vector(k, i)).collect();
            let report = similarity_invariance_check(&v, &s, &vectors, &sched)?;
            let entries: Vec<Value> = report
                .entries
                .iter()
                .map(|e| {
                    json!({
                        "vector": e.vector_id,
                        "similar": e.similar,
                        "original": e.original,
                        "discrepancy": e.discrepancy,
                    })
                })
                .collect();
            Ok(Report::new(
                "similarity-check",
                json!({
                    "similarity": matrix_json(&s),
                    "condition": report.condition,
                    "entries": entries,
                    "max_discrepancy": report.max_discrepancy,
                }),
            )
            .param("operator", json!(op.name()))
            .param("seed", json!(seed))
            .param("schedule", schedule_json(&sched)))
        }
    }
}

/// The quadrature would only stall on a circle through an eigenvalue, so
/// such circles are refused up front.
fn check_circle_avoids_spectrum(op: &AnalyticOperator, center: C64, radius: f64) -> Result<()> {
    let eigenvalues: Vec<C64> = match op.to_matrix() {
        Some(v) => v.schur().unpack().1.diagonal().iter().copied().collect(),
        None => vec![C64::new(0.0, 0.0)],
    };
    for l in eigenvalues {
        if ((l - center).norm() - radius).abs() <= 1e-8 * radius.max(1.0) {
            return Err(GeometryError::OutOfDomain(format!(
                "circle passes through the eigenvalue {l}"
            )));
        }
    }
    Ok(())
}

fn usage(msg: &str) -> GeometryError {
    GeometryError::Parse(msg.to_string())
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn load_tuple(path: &Path) -> Result<MatrixTuple> {
    read_typed::<TupleJson>(path)?.into_tuple()
}

pub fn load_operator(spec: &str) -> Result<AnalyticOperator> {
    match OperatorSpec::parse(spec)? {
        OperatorSpec::Builtin(op) => Ok(op),
        OperatorSpec::MatrixFile(path) => AnalyticOperator::matrix(read_matrix_file(Path::new(&path))?),
    }
}

/// `trace`, `e<i>` (1-based basis vector) or a state JSON file.
fn parse_state(spec: &str, k: usize) -> Result<StateFunctional> {
    if spec == "trace" {
        return Ok(StateFunctional::trace());
    }
    if let Some(i) = basis_index(spec) {
        if i >= k {
            return Err(usage(&format!("state {spec} exceeds dimension {k}")));
        }
        return StateFunctional::vector(linalg::basis_vector(k, i));
    }
    read_typed::<StateJson>(Path::new(spec))?.into_state()
}

fn basis_index(spec: &str) -> Option<usize> {
    spec.strip_prefix('e')?.parse::<usize>().ok()?.checked_sub(1)
}

/// `e<i>`, `d` (distinguished vector) or a JSON file holding `[[re, im], ...]`.
fn operator_vector(op: &AnalyticOperator, spec: Option<&str>) -> Result<CVector> {
    let k = resolvent_geometry::operator_gallery::ResolventOperator::dim(op);
    match spec {
        None | Some("d") => Ok(op.distinguished_vector()),
        Some(s) => match basis_index(s) {
            Some(i) if i < k => Ok(linalg::basis_vector(k, i)),
            Some(_) => Err(usage(&format!("vector {s} exceeds dimension {k}"))),
            None => {
                let v: Vec<io::Pair> = read_typed(Path::new(s))?;
                let x = io::vector_from_json(&v)?;
                if x.len() != k {
                    return Err(GeometryError::DimensionMismatch {
                        expected: k,
                        actual: x.len(),
                    });
                }
                Ok(x)
            }
        },
    }
}

fn parse_probe(op: &AnalyticOperator, spec: &str) -> Result<Probe> {
    if let Some(a) = spec.strip_prefix('f') {
        if let Ok(alpha) = a.parse::<f64>() {
            if !matches!(op, AnalyticOperator::Volterra { .. }) {
                return Err(usage("indicator vectors f<alpha> need the volterra operator"));
            }
            return Ok(Probe::VolterraIndicator { alpha });
        }
    }
    Ok(Probe::vector(spec, operator_vector(op, Some(spec))?))
}

fn default_probes(op: &AnalyticOperator) -> Vec<Probe> {
    match op {
        AnalyticOperator::Volterra { .. } => [0.0, 0.25, 0.5, 0.75]
            .into_iter()
            .map(|alpha| Probe::VolterraIndicator { alpha })
            .collect(),
        _ => {
            let k = resolvent_geometry::operator_gallery::ResolventOperator::dim(op);
            (0..k).map(|i| Probe::basis(k, i)).collect()
        }
    }
}

fn parse_number<T: std::str::FromStr>(text: &str, what: &str) -> Result<T> {
    text.trim()
        .parse::<T>()
        .map_err(|_| usage(&format!("cannot read {what} from '{text}'")))
}

/// `lo:hi:n`, with at least two samples.
fn parse_axis(text: &str) -> Result<GridAxis> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(usage(&format!("grid axis '{text}' is not lo:hi:n")));
    }
    let lo: f64 = parse_number(parts[0], "grid bound")?;
    let hi: f64 = parse_number(parts[1], "grid bound")?;
    let n: usize = parse_number(parts[2], "grid resolution")?;
    if n < 2 || !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(usage(&format!(
            "grid axis '{text}' needs finite lo < hi and at least 2 samples"
        )));
    }
    Ok(GridAxis::new(lo, hi, n))
}

pub fn parse_grid(text: &str) -> Result<Grid2> {
    let (x, y) = text
        .split_once(',')
        .ok_or_else(|| usage("grid must be x0:x1:nx,y0:y1:ny"))?;
    Ok(Grid2 {
        x: parse_axis(x)?,
        y: parse_axis(y)?,
    })
}

pub fn parse_schedule(args: &ScheduleArgs) -> Result<PowerSchedule> {
    let parts: Vec<&str> = args.radii.split(':').collect();
    if parts.len() != 3 {
        return Err(usage("radii must be r0:q:count"));
    }
    let schedule = PowerSchedule {
        r0: parse_number(parts[0], "r0")?,
        q: parse_number(parts[1], "q")?,
        count: parse_number(parts[2], "radius count")?,
        angles: args.angles,
        cluster_radius: args.cluster_radius,
    };
    schedule.validate().map_err(|e| usage(&e.to_string()))?;
    Ok(schedule)
}

fn schedule_json(s: &PowerSchedule) -> Value {
    json!({
        "r0": s.r0,
        "q": s.q,
        "count": s.count,
        "angles": s.angles,
        "cluster_radius": s.cluster_radius,
    })
}

/// Slice through `ℂⁿ`; by default the last coordinate moves in the complex
/// plane and a normalized tuple keeps `z₀ = 1`.
fn parse_slice(args: &SliceArgs, tuple: &MatrixTuple) -> Result<SliceSpec> {
    let n = tuple.len();
    let base = match &args.base {
        Some(b) => parse_point(b)?,
        None => {
            let mut c = vec![C64::new(0.0, 0.0); n];
            if tuple.is_normalized() && n > 1 {
                c[0] = C64::new(1.0, 0.0);
            }
            PencilPoint::new(c)?
        }
    };
    if base.len() != n {
        return Err(GeometryError::DimensionMismatch {
            expected: n,
            actual: base.len(),
        });
    }
    let check = |j: usize| -> Result<usize> {
        if j < n {
            Ok(j)
        } else {
            Err(usage(&format!("slice coordinate {j} out of range for {n} coordinates")))
        }
    };
    match args.slice.as_deref() {
        None => Ok(SliceSpec::complex_coordinate(base, n - 1)),
        Some(s) => {
            if let Some(j) = s.strip_prefix("complex:") {
                Ok(SliceSpec::complex_coordinate(base, check(parse_number(j, "slice coordinate")?)?))
            } else if let Some(pair) = s.strip_prefix("real:") {
                let (a, b) = pair
                    .split_once(',')
                    .ok_or_else(|| usage("real slice must be real:J,K"))?;
                let (a, b) = (
                    check(parse_number(a, "slice coordinate")?)?,
                    check(parse_number(b, "slice coordinate")?)?,
                );
                if a == b {
                    return Err(usage("real slice needs two different coordinates"));
                }
                Ok(SliceSpec::real_pair(base, a, b))
            } else {
                Err(usage(&format!("unknown slice '{s}' (use complex:J or real:J,K)")))
            }
        }
    }
}

fn grid_points(grid: &Grid2) -> Vec<(usize, usize, f64, f64)> {
    let mut pts = Vec::with_capacity(grid.x.n * grid.y.n);
    for i in 0..grid.x.n {
        for j in 0..grid.y.n {
            pts.push((i, j, grid.x.value(i), grid.y.value(j)));
        }
    }
    pts
}

fn grid_json(grid: &Grid2) -> Value {
    json!({
        "x": [grid.x.lo, grid.x.hi, grid.x.n],
        "y": [grid.y.lo, grid.y.hi, grid.y.n],
    })
}

fn slice_json(slice: &SliceSpec) -> Value {
    let axes: Vec<Value> = slice
        .axes
        .iter()
        .map(|a| json!({ "coord": a.coord, "part": format!("{:?}", a.part).to_lowercase() }))
        .collect();
    json!({ "base": vector_json(slice.base.coords()), "axes": axes })
}

fn complex_columns(prefix: &str, n: usize) -> Vec<String> {
    let mut cols = Vec::new();
    for j in 0..n {
        for k in 0..n {
            cols.push(format!("{prefix}_{j}{k}_re"));
            cols.push(format!("{prefix}_{j}{k}_im"));
        }
    }
    cols
}

fn complex_cells(m: Option<&CMatrix>, n: usize) -> Vec<Value> {
    match m {
        Some(m) => m
            .transpose()
            .iter()
            .flat_map(|c| [json!(c.re), json!(c.im)])
            .collect(),
        None => vec![Value::Null; 2 * n * n],
    }
}

/// Evaluates a per-point computation in parallel; domain violations mark the
/// point singular instead of aborting the grid.
fn sweep<T: Send>(
    pts: &[(usize, usize, f64, f64)],
    f: impl Fn(f64, f64) -> Result<T> + Sync,
) -> Result<Vec<Option<T>>> {
    pts.par_iter()
        .map(|&(_, _, u, v)| match f(u, v) {
            Ok(x) => Ok(Some(x)),
            Err(e) if e.is_domain_violation() => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

fn spectrum(tuple: &MatrixTuple, args: &SliceArgs) -> Result<Report> {
    let grid = parse_grid(&args.grid)?;
    let slice = parse_slice(args, tuple)?;
    let opts = SliceOptions::default();
    let points = resolvent_geometry::pencil::spectrum_slice(tuple, &slice, &grid, &opts)?;
    let mut table = Table {
        columns: ["i", "j", "u", "v", "relative_sigma"].map(String::from).to_vec(),
        rows: Vec::new(),
    };
    let mut rows = Vec::new();
    for p in &points {
        table.rows.push(vec![
            json!(p.grid_index.0),
            json!(p.grid_index.1),
            json!(p.uv.0),
            json!(p.uv.1),
            json!(p.relative_sigma),
        ]);
        rows.push(json!({
            "i": p.grid_index.0,
            "j": p.grid_index.1,
            "uv": [p.uv.0, p.uv.1],
            "z": vector_json(p.z.coords()),
            "relative_sigma": p.relative_sigma,
        }));
    }
    Ok(Report::new("spectrum", json!({ "points": rows }))
        .param("grid", grid_json(&grid))
        .param("slice", slice_json(&slice))
        .param("refine", json!({ "depth": opts.refine_depth, "tol": opts.refine_tol }))
        .with_table(table))
}

fn metric_grid(
    tuple: &MatrixTuple,
    state: &StateFunctional,
    args: &SliceArgs,
    common: &Common,
) -> Result<Report> {
    let grid = parse_grid(&args.grid)?;
    let slice = parse_slice(args, tuple)?;
    let pts = grid_points(&grid);
    let samples = sweep(&pts, |u, v| {
        metric_matrix_with_tol(tuple, &slice.point(u, v), state, common.tol_sing)
    })?;
    let n = tuple.len();
    let mut columns: Vec<String> = ["i", "j", "u", "v"].map(String::from).to_vec();
    columns.extend(complex_columns("g", n));
    columns.extend(["min_eigenvalue", "positive_definite", "singular"].map(String::from));
    let mut table = Table {
        columns,
        rows: Vec::new(),
    };
    let mut rows = Vec::new();
    for (&(i, j, u, v), s) in pts.iter().zip(&samples) {
        let mut row = vec![json!(i), json!(j), json!(u), json!(v)];
        row.extend(complex_cells(s.as_ref().map(|s| &s.g), n));
        row.push(s.as_ref().map_or(Value::Null, |s| json!(s.min_eigenvalue)));
        row.push(s.as_ref().map_or(Value::Null, |s| json!(s.positive_definite)));
        row.push(json!(s.is_none()));
        table.rows.push(row);
        rows.push(json!({
            "i": i,
            "j": j,
            "z": vector_json(slice.point(u, v).coords()),
            "sample": s.as_ref().map(io::metric_sample_json),
            "singular": s.is_none(),
        }));
    }
    Ok(Report::new("metric-grid", json!({ "points": rows }))
        .param("grid", grid_json(&grid))
        .param("slice", slice_json(&slice))
        .param("state", json!(StateJson::from_state(state)))
        .with_table(table))
}

fn ricci_grid_fd(field: &PencilMetric, args: &SliceArgs, step: Option<f64>) -> Result<Report> {
    let grid = parse_grid(&args.grid)?;
    let slice = parse_slice(args, &field.tuple)?;
    if let Some(h) = step {
        if !(h > 0.0 && h.is_finite()) {
            return Err(usage("--fd-step must be positive"));
        }
    }
    let pts = grid_points(&grid);
    let samples = sweep(&pts, |u, v| {
        let z = slice.point(u, v);
        let h = step.unwrap_or_else(|| default_fd_step(&z));
        ricci_tensor_fd(field, &z, h)
    })?;
    let n = field.tuple.len();
    let mut columns: Vec<String> = ["i", "j", "u", "v"].map(String::from).to_vec();
    columns.extend(complex_columns("ricci", n));
    columns.extend(["step", "singular"].map(String::from));
    let mut table = Table {
        columns,
        rows: Vec::new(),
    };
    let mut rows = Vec::new();
    for (&(i, j, u, v), s) in pts.iter().zip(&samples) {
        let mut row = vec![json!(i), json!(j), json!(u), json!(v)];
        row.extend(complex_cells(s.as_ref().map(|s| &s.ricci), n));
        row.push(s.as_ref().and_then(|s| s.step).map_or(Value::Null, |h| json!(h)));
        row.push(json!(s.is_none()));
        table.rows.push(row);
        rows.push(json!({
            "i": i,
            "j": j,
            "sample": s.as_ref().map(io::curvature_sample_json),
            "singular": s.is_none(),
        }));
    }
    Ok(Report::new("ricci-grid", json!({ "points": rows }))
        .param("grid", grid_json(&grid))
        .param("slice", slice_json(&slice))
        .param("state", json!(StateJson::from_state(&field.state)))
        .param("fd_step", step.map_or(json!("1e-4 * max(1, |z|)"), |h| json!(h)))
        .with_table(table))
}

/// Closed-form curvature of `‖(V − z)⁻¹x‖²` over the `z`-plane.
fn ricci_grid_vector(op: &AnalyticOperator, x: &CVector, args: &SliceArgs) -> Result<Report> {
    if args.slice.is_some() || args.base.is_some() {
        return Err(usage("operator curvature grids cover the z-plane; drop --slice and --base"));
    }
    let grid = parse_grid(&args.grid)?;
    let pts = grid_points(&grid);
    let values = sweep(&pts, |u, v| ricci_vector_state(op, x, C64::new(u, v)))?;
    let mut table = Table {
        columns: ["i", "j", "re_z", "im_z", "ricci", "singular"].map(String::from).to_vec(),
        rows: Vec::new(),
    };
    let mut rows = Vec::new();
    for (&(i, j, u, v), r) in pts.iter().zip(&values) {
        let r = r.map_or(Value::Null, |r| json!(r));
        table.rows.push(vec![json!(i), json!(j), json!(u), json!(v), r.clone(), json!(r.is_null())]);
        rows.push(json!({ "i": i, "j": j, "z": [u, v], "ricci": r, "method": "analytic" }));
    }
    Ok(Report::new("ricci-grid", json!({ "points": rows }))
        .param("grid", grid_json(&grid))
        .param("operator", json!(op.name()))
        .param("vector", json!(vector_json(x.as_slice())))
        .with_table(table))
}

fn fk_dihedral(z1: C64, z2: C64, truncation: Option<usize>, common: &Common) -> Result<Report> {
    let opts = QuadOptions::with_rel_tol(common.tol_quad);
    let value = dihedral_fk_det_with(z1, z2, &opts)?;
    let truncated = match truncation {
        Some(m) => {
            let t = dihedral_tuple(m)?;
            let z = PencilPoint::new(vec![C64::new(1.0, 0.0), z1, z2])?;
            json!(fk_det(&t.eval(&z)?))
        }
        None => Value::Null,
    };
    Ok(Report::new(
        "fk-det",
        json!({
            "z1": pair(z1),
            "z2": pair(z2),
            "fk_det": value,
            "truncated": truncated,
        }),
    )
    .param("dihedral", json!(true))
    .param("truncation", json!(truncation)))
}

fn log_potentials(mu: &SpectralMeasure, points: &[String]) -> Result<Report> {
    let zs = points.iter().map(|s| parse_complex(s)).collect::<Result<Vec<_>>>()?;
    let mut table = Table {
        columns: ["re_z", "im_z", "potential"].map(String::from).to_vec(),
        rows: Vec::new(),
    };
    let mut rows = Vec::new();
    for z in zs {
        let v = log_potential(mu, z);
        table.rows.push(vec![json!(z.re), json!(z.im), finite_or_null(v)]);
        rows.push(json!({ "z": pair(z), "potential": finite_or_null(v), "infinite": v.is_infinite() }));
    }
    Ok(Report::new("log-potential", json!({ "values": rows }))
        .param("measure", json!(MeasureJson::from_measure(mu)))
        .with_table(table))
}

fn riesz(v: &CMatrix, contour: &ContourSpec, x: Option<&CVector>, max_terms: usize) -> Result<Report> {
    let pair_ = riesz_projection(v, contour)?;
    let p = &pair_.p0;
    let idempotency = linalg::frobenius(&(p * p - p));
    let commutation = linalg::frobenius(&linalg::commutator(p, v));
    let principal = match x {
        Some(x) => {
            let terms = principal_part(v, x, contour, max_terms)?;
            json!(terms
                .iter()
                .map(|t| json!({ "norm": t.norm(), "vector": vector_json(t.as_slice()) }))
                .collect::<Vec<_>>())
        }
        None => Value::Null,
    };
    Ok(Report::new(
        "riesz",
        json!({
            "p0": matrix_json(&pair_.p0),
            "v0": matrix_json(&pair_.v0),
            "nodes": pair_.nodes,
            "idempotency_defect": idempotency,
            "commutator_defect": commutation,
            "principal_part": principal,
        }),
    )
    .param("contour", json!({ "center": pair(contour.center), "radius": contour.radius })))
}

fn estimate_json(e: &PowerEstimate) -> Value {
    let mut v = io::power_estimate_json(e);
    v["half_width"] = json!(e.half_width());
    v["diagnostics"] = json!(e
        .diagnostics
        .iter()
        .map(|d| json!({
            "radius": d.radius,
            "ratio": d.ratio,
            "ratio_lower": d.ratio_lower,
            "ratio_upper": d.ratio_upper,
            "angle": d.angle,
            "log_gx": d.log_gx,
            "log_g": d.log_g,
        }))
        .collect::<Vec<_>>());
    v
}

fn diagnostics_table(estimates: &[PowerEstimate]) -> Table {
    let mut table = Table {
        columns: ["vector", "radius", "ratio", "ratio_lower", "ratio_upper", "angle", "k_hat"]
            .map(String::from)
            .to_vec(),
        rows: Vec::new(),
    };
    for e in estimates {
        for d in &e.diagnostics {
            table.rows.push(vec![
                json!(e.vector_id),
                json!(d.radius),
                json!(d.ratio),
                json!(d.ratio_lower),
                json!(d.ratio_upper),
                json!(d.angle),
                json!(e.k_hat),
            ]);
        }
    }
    table
}

fn random_unit_vector(rng: &mut ChaCha8Rng, k: usize) -> CVector {
    let v = CVector::from_fn(k, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    v.unscale(v.norm())
}

/// `I + 0.25·G/√k` with uniform complex entries: condition number stays small.
fn random_similarity(rng: &mut ChaCha8Rng, k: usize) -> CMatrix {
    let scale = 0.25 / (k as f64).sqrt();
    linalg::identity(k)
        + CMatrix::from_fn(k, k, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale
        })
}
