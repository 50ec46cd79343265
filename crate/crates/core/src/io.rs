//! JSON wire formats. Complex numbers are `[re, im]` pairs and matrices are
//! row-major nested arrays of pairs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::curvature::CurvatureSample;
use crate::error::{GeometryError, Result};
use crate::fk_determinant::SpectralMeasure;
use crate::forms_metric::{MetricSample, StateFunctional};
use crate::geometry_paths::{Orientation, ParamPath};
use crate::linalg::{CMatrix, CVector, C64};
use crate::operator_gallery::{AnalyticOperator, VOLTERRA_DEFAULT_SAMPLES};
use crate::pencil::{MatrixTuple, PencilPoint};
use crate::power_set::PowerEstimate;

pub type Pair = [f64; 2];
pub type MatrixJson = Vec<Vec<Pair>>;

pub fn pair(c: C64) -> Pair {
    [c.re, c.im]
}

pub fn from_pair(p: Pair) -> Result<C64> {
    let c = C64::new(p[0], p[1]);
    if !(p[0].is_finite() && p[1].is_finite()) {
        return Err(GeometryError::Parse(format!("non-finite complex entry {p:?}")));
    }
    Ok(c)
}

pub fn vector_json(v: &[C64]) -> Vec<Pair> {
    v.iter().copied().map(pair).collect()
}

pub fn vector_from_json(v: &[Pair]) -> Result<CVector> {
    let entries = v.iter().map(|&p| from_pair(p)).collect::<Result<Vec<_>>>()?;
    Ok(CVector::from_vec(entries))
}

pub fn matrix_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| pair(m[(i, j)])).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<CMatrix> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(GeometryError::Parse("matrix has no rows".into()));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(GeometryError::Parse("matrix rows differ in length".into()));
    }
    let mut m = CMatrix::zeros(nrows, ncols);
    for (i, row) in rows.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            m[(i, j)] = from_pair(p)?;
        }
    }
    Ok(m)
}

/// Parses `a`, `bi`, `a+bi` or `a-bi` (also `i`, `-i`, `a+i`). The real part
/// comes first, no inner whitespace is allowed and values must be finite.
pub fn parse_complex(text: &str) -> Result<C64> {
    let s = text.trim();
    let bad = || GeometryError::Parse(format!("cannot read '{text}' as a complex number (use a+bi)"));
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return Err(bad());
    }
    let number = |t: &str| -> Result<f64> {
        if t.is_empty() || !t.chars().all(|c| c.is_ascii_digit() || "+-.eE".contains(c)) {
            return Err(bad());
        }
        let v: f64 = t.parse().map_err(|_| bad())?;
        if !v.is_finite() {
            return Err(bad());
        }
        Ok(v)
    };
    let bytes = s.as_bytes();
    // The real/imaginary split is the last sign not opening the string and not
    // belonging to an exponent.
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let coefficient = |t: &str| -> Result<f64> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => number(t),
        }
    };
    match (s.strip_suffix('i'), split) {
        (Some(body), Some(k)) => {
            let re = number(&s[..k])?;
            let im = coefficient(&body[k..])?;
            Ok(C64::new(re, im))
        }
        (Some(body), None) => Ok(C64::new(0.0, coefficient(body)?)),
        (None, None) => Ok(C64::new(number(s)?, 0.0)),
        (None, Some(_)) => Err(bad()),
    }
}

/// Comma-separated complex coordinates, e.g. `1+2i,0.5`.
pub fn parse_point(text: &str) -> Result<PencilPoint> {
    let coords = text
        .split(',')
        .map(parse_complex)
        .collect::<Result<Vec<_>>>()?;
    PencilPoint::new(coords)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TupleJson {
    #[serde(default)]
    pub normalized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub matrices: Vec<MatrixJson>,
}

impl TupleJson {
    pub fn from_tuple(t: &MatrixTuple) -> Self {
        Self {
            normalized: t.is_normalized(),
            labels: t.labels().map(|l| l.to_vec()),
            matrices: t.matrices().iter().map(matrix_json).collect(),
        }
    }

    /// With `normalized` set, the first matrix must be the identity.
    pub fn into_tuple(self) -> Result<MatrixTuple> {
        let mats = self
            .matrices
            .iter()
            .map(matrix_from_json)
            .collect::<Result<Vec<_>>>()?;
        MatrixTuple::from_parts(mats, self.normalized, self.labels)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateJson {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<MatrixJson>,
}

impl StateJson {
    pub fn from_state(s: &StateFunctional) -> Self {
        match s {
            StateFunctional::NormalizedTrace => Self {
                kind: "trace".into(),
                vector: None,
                density: None,
            },
            StateFunctional::Vector(x) => Self {
                kind: "vector".into(),
                vector: Some(vector_json(x.as_slice())),
                density: None,
            },
            StateFunctional::Density(rho) => Self {
                kind: "density".into(),
                vector: None,
                density: Some(matrix_json(rho)),
            },
        }
    }

    pub fn into_state(self) -> Result<StateFunctional> {
        match (self.kind.as_str(), self.vector, self.density) {
            ("trace", None, None) => Ok(StateFunctional::NormalizedTrace),
            ("vector", Some(v), None) => StateFunctional::vector(vector_from_json(&v)?),
            ("density", None, Some(d)) => StateFunctional::density(matrix_from_json(&d)?),
            (kind, _, _) => Err(GeometryError::Parse(format!(
                "state of kind '{kind}' has missing or extra fields"
            ))),
        }
    }
}

pub fn metric_sample_json(m: &MetricSample) -> Value {
    json!({
        "z": vector_json(m.z.coords()),
        "g": matrix_json(&m.g),
        "min_eigenvalue": m.min_eigenvalue,
        "positive_definite": m.positive_definite,
    })
}

pub fn curvature_sample_json(c: &CurvatureSample) -> Value {
    json!({
        "z": vector_json(c.z.coords()),
        "ricci": matrix_json(&c.ricci),
        "scalar_ricci": c.scalar_ricci,
        "method": c.method.as_str(),
        "step": c.step,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathJson {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<Pair>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turns: Option<i64>,
}

impl PathJson {
    /// Callable paths have no wire form.
    pub fn from_path(p: &ParamPath) -> Result<Self> {
        match p {
            ParamPath::Polyline(v) => Ok(Self {
                kind: "polyline".into(),
                vertices: Some(v.iter().map(|z| vector_json(z.coords())).collect()),
                center: None,
                radius: None,
                turns: None,
            }),
            &ParamPath::Circle {
                center,
                radius,
                turns,
                orientation,
            } => Ok(Self {
                kind: "circle".into(),
                vertices: None,
                center: Some(pair(center)),
                radius: Some(radius),
                turns: Some(match orientation {
                    Orientation::CounterClockwise => turns as i64,
                    Orientation::Clockwise => -(turns as i64),
                }),
            }),
            ParamPath::Callable(_) => Err(GeometryError::InvalidInput(
                "callable paths cannot be serialized".into(),
            )),
        }
    }

    /// Negative `turns` means clockwise.
    pub fn into_path(self) -> Result<ParamPath> {
        match self.kind.as_str() {
            "polyline" => {
                let v = self
                    .vertices
                    .ok_or_else(|| GeometryError::Parse("polyline needs vertices".into()))?;
                let pts = v
                    .iter()
                    .map(|z| PencilPoint::new(z.iter().map(|&p| from_pair(p)).collect::<Result<_>>()?))
                    .collect::<Result<Vec<_>>>()?;
                ParamPath::polyline(pts)
            }
            "circle" => {
                let center = from_pair(self.center.unwrap_or([0.0, 0.0]))?;
                let radius = self
                    .radius
                    .ok_or_else(|| GeometryError::Parse("circle needs a radius".into()))?;
                let turns = self.turns.unwrap_or(1);
                let orientation = if turns < 0 {
                    Orientation::Clockwise
                } else {
                    Orientation::CounterClockwise
                };
                let turns = u32::try_from(turns.unsigned_abs())
                    .map_err(|_| GeometryError::Parse("too many turns".into()))?;
                ParamPath::circle(center, radius, turns, orientation)
            }
            other => Err(GeometryError::Parse(format!("unknown path kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureJson {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

impl MeasureJson {
    pub fn from_measure(m: &SpectralMeasure) -> Self {
        match m {
            SpectralMeasure::Atomic(atoms) => Self {
                kind: "atomic".into(),
                atoms: Some(atoms.iter().map(|(l, w)| [l.re, l.im, *w]).collect()),
                center: None,
                radius: None,
            },
            &SpectralMeasure::UniformCircle { center, radius } => Self {
                kind: "uniform_circle".into(),
                atoms: None,
                center: Some(pair(center)),
                radius: Some(radius),
            },
        }
    }

    pub fn into_measure(self) -> Result<SpectralMeasure> {
        match self.kind.as_str() {
            "atomic" => {
                let atoms = self
                    .atoms
                    .ok_or_else(|| GeometryError::Parse("atomic measure needs atoms".into()))?;
                SpectralMeasure::atomic(
                    atoms
                        .iter()
                        .map(|a| Ok((from_pair([a[0], a[1]])?, a[2])))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            "uniform_circle" => SpectralMeasure::uniform_circle(
                from_pair(self.center.unwrap_or([0.0, 0.0]))?,
                self.radius.unwrap_or(1.0),
            ),
            other => Err(GeometryError::Parse(format!("unknown measure kind '{other}'"))),
        }
    }
}

/// `{"variant": str, "params": {...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GalleryJson {
    pub variant: String,
    #[serde(default)]
    pub params: serde_json::Map<String, Value>,
}

impl GalleryJson {
    pub fn from_operator(op: &AnalyticOperator) -> Self {
        let mut params = serde_json::Map::new();
        let variant = match op {
            AnalyticOperator::Jordan { n } => {
                params.insert("n".into(), json!(n));
                "jordan"
            }
            AnalyticOperator::Volterra { samples } => {
                params.insert("samples".into(), json!(samples));
                "volterra"
            }
            AnalyticOperator::UnilateralShift { n } => {
                params.insert("n".into(), json!(n));
                "unilateral_shift"
            }
            AnalyticOperator::BilateralShift { n } => {
                params.insert("n".into(), json!(n));
                "bilateral_shift"
            }
            AnalyticOperator::DihedralPencil { m } => {
                params.insert("m".into(), json!(m));
                "dihedral_pencil"
            }
            AnalyticOperator::FiniteMatrix(v) => {
                params.insert("matrix".into(), json!(matrix_json(v)));
                "finite_matrix"
            }
        };
        Self {
            variant: variant.into(),
            params,
        }
    }

    pub fn into_operator(self) -> Result<AnalyticOperator> {
        let size = |key: &str| -> Result<usize> {
            self.params
                .get(key)
                .and_then(Value::as_u64)
                .map(|v| v as usize)
                .ok_or_else(|| GeometryError::Parse(format!("missing integer parameter '{key}'")))
        };
        match self.variant.as_str() {
            "jordan" => AnalyticOperator::jordan(size("n")?),
            "volterra" => AnalyticOperator::volterra(size("samples").unwrap_or(VOLTERRA_DEFAULT_SAMPLES)),
            "unilateral_shift" => AnalyticOperator::unilateral_shift(size("n")?),
            "bilateral_shift" => AnalyticOperator::bilateral_shift(size("n")?),
            "dihedral_pencil" => AnalyticOperator::dihedral(size("m")?),
            "finite_matrix" => {
                let m: MatrixJson = serde_json::from_value(
                    self.params
                        .get("matrix")
                        .cloned()
                        .ok_or_else(|| GeometryError::Parse("missing 'matrix'".into()))?,
                )
                .map_err(|e| GeometryError::Parse(e.to_string()))?;
                AnalyticOperator::matrix(matrix_from_json(&m)?)
            }
            other => Err(GeometryError::Parse(format!("unknown operator variant '{other}'"))),
        }
    }
}

/// Operator named on the command line: `jordan:n`, `volterra[:samples]`,
/// `ushift:N`, `bshift:N`, `dihedral:M` or `matrix:FILE`.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSpec {
    Builtin(AnalyticOperator),
    MatrixFile(String),
}

impl OperatorSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let (name, arg) = match text.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (text, None),
        };
        let size = || -> Result<usize> {
            arg.ok_or_else(|| GeometryError::Parse(format!("'{name}' needs a size, e.g. {name}:4")))?
                .parse::<usize>()
                .map_err(|_| GeometryError::Parse(format!("bad size in '{text}'")))
        };
        let op = match name {
            "jordan" => AnalyticOperator::jordan(size()?),
            "volterra" => AnalyticOperator::volterra(match arg {
                Some(_) => size()?,
                None => VOLTERRA_DEFAULT_SAMPLES,
            }),
            "ushift" => AnalyticOperator::unilateral_shift(size()?),
            "bshift" => AnalyticOperator::bilateral_shift(size()?),
            "dihedral" => AnalyticOperator::dihedral(size()?),
            "matrix" => {
                return match arg {
                    Some(path) if !path.is_empty() => Ok(Self::MatrixFile(path.to_string())),
                    _ => Err(GeometryError::Parse("'matrix' needs a file, e.g. matrix:v.json".into())),
                }
            }
            _ => Err(GeometryError::Parse(format!("unknown operator '{text}'"))),
        };
        op.map(Self::Builtin).map_err(|e| match e {
            GeometryError::Parse(_) => e,
            other => GeometryError::Parse(other.to_string()),
        })
    }
}

/// Reads a matrix file: either a bare nested array or `{"matrix": ...}`.
pub fn read_matrix_file(path: &Path) -> Result<CMatrix> {
    let value = read_json(path)?;
    let rows = match value {
        Value::Object(mut o) => o
            .remove("matrix")
            .ok_or_else(|| GeometryError::Parse("matrix file needs a 'matrix' field".into()))?,
        other => other,
    };
    let m: MatrixJson = serde_json::from_value(rows).map_err(|e| GeometryError::Parse(e.to_string()))?;
    matrix_from_json(&m)
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GeometryError::Parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| GeometryError::Parse(format!("{}: {e}", path.display())))
}

pub fn read_typed<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_value(read_json(path)?)
        .map_err(|e| GeometryError::Parse(format!("{}: {e}", path.display())))
}

pub fn power_estimate_json(e: &PowerEstimate) -> Value {
    let mut v = json!({
        "vector": e.vector_id,
        "radii": e.radii,
        "ratios": e.ratios,
        "k_hat": e.k_hat,
        "monotone": e.monotone,
        "angles": e.angles,
    });
    if let Some((lo, hi)) = e.bracket {
        v["bracket"] = json!([lo, hi]);
    }
    v
}
