//! Resolvent geometry of matrix and operator pencils.

pub mod curvature;
pub mod error;
pub mod fk_determinant;
pub mod forms_metric;
pub mod geometry_paths;
pub mod io;
pub mod linalg;
pub mod operator_gallery;
pub mod pencil;
pub mod power_set;
pub mod quadrature;

pub use error::{GeometryError, Result};
pub use forms_metric::{MetricSample, StateFunctional};
pub use linalg::{CMatrix, CVector, C64};
pub use pencil::{MatrixTuple, PencilPoint};
