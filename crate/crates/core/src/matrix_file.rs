//! Text format for states and tangent vectors:
//!
//! ```text
//! {
//!   "kind": "state",
//!   "n": 2,
//!   "re": [[1.0, 0.0], [0.0, 2.0]],
//!   "im": [[0.0, 0.0], [0.0, 0.0]]
//! }
//! ```
//!
//! Numbers are written with 17 significant digits so a write/read cycle is
//! exact.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::invariants::{StateMatrix, TangentMatrix};
use crate::linalg::{CMatrix, RMatrix};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    State,
    Tangent,
}

impl MatrixKind {
    pub fn name(self) -> &'static str {
        match self {
            MatrixKind::State => "state",
            MatrixKind::Tangent => "tangent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub kind: MatrixKind,
    pub matrix: CMatrix,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    kind: MatrixKind,
    n: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

/// Decimal with 17 significant digits; `null` for non-finite values.
pub fn json_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

impl MatrixFile {
    pub fn from_state(state: &StateMatrix) -> Self {
        MatrixFile {
            kind: MatrixKind::State,
            matrix: state.matrix().clone(),
        }
    }

    pub fn from_tangent(y: &TangentMatrix) -> Self {
        MatrixFile {
            kind: MatrixKind::Tangent,
            matrix: y.matrix().clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn to_text(&self) -> String {
        let n = self.n();
        let plane = |f: fn(&Complex64) -> f64| {
            let rows: Vec<String> = (0..n)
                .map(|i| {
                    let row: Vec<String> =
                        (0..n).map(|j| json_number(f(&self.matrix[(i, j)]))).collect();
                    format!("[{}]", row.join(", "))
                })
                .collect();
            format!("[\n    {}\n  ]", rows.join(",\n    "))
        };
        let mut s = String::new();
        let _ = writeln!(s, "{{");
        let _ = writeln!(s, "  \"kind\": \"{}\",", self.kind.name());
        let _ = writeln!(s, "  \"n\": {n},");
        let _ = writeln!(s, "  \"re\": {},", plane(|z| z.re));
        let _ = writeln!(s, "  \"im\": {}", plane(|z| z.im));
        let _ = writeln!(s, "}}");
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawFile = serde_json::from_str(text).map_err(|e| Error::Format {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        if raw.n == 0 {
            return Err(field_error("n", "must be at least 1".into()));
        }
        for (name, plane) in [("re", &raw.re), ("im", &raw.im)] {
            if plane.len() != raw.n {
                return Err(field_error(name, format!("expected {} rows, found {}", raw.n, plane.len())));
            }
            for (i, row) in plane.iter().enumerate() {
                if row.len() != raw.n {
                    return Err(field_error(
                        &format!("{name}[{i}]"),
                        format!("expected {} entries, found {}", raw.n, row.len()),
                    ));
                }
            }
        }
        let matrix = CMatrix::from_fn(raw.n, raw.n, |i, j| Complex64::new(raw.re[i][j], raw.im[i][j]));
        Ok(MatrixFile {
            kind: raw.kind,
            matrix,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text).map_err(|e| match e {
            Error::Format { location, message } => Error::Format {
                location: format!("{}: {location}", path.display()),
                message,
            },
            other => other,
        })
    }

    fn expect_kind(&self, kind: MatrixKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(field_error(
                "kind",
                format!("expected \"{}\", found \"{}\"", kind.name(), self.kind.name()),
            ))
        }
    }

    pub fn into_state(self, tol: &Tolerances) -> Result<StateMatrix> {
        self.expect_kind(MatrixKind::State)?;
        StateMatrix::with_tolerances(self.matrix, tol)
    }

    /// Accepts either kind, so a state file can also serve as a tangent.
    pub fn into_tangent(self, tol: &Tolerances) -> Result<TangentMatrix> {
        TangentMatrix::with_tolerances(self.matrix, tol)
    }

    pub fn real_part(&self) -> RMatrix {
        self.matrix.map(|z| z.re)
    }
}

fn field_error(field: &str, message: String) -> Error {
    Error::Format {
        location: format!("field `{field}`"),
        message,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_state, rng_from_seed, StateOptions};

    #[test]
    fn round_trip_is_exact() {
        let s = random_state(5, &StateOptions::with_floor(0.05), &mut rng_from_seed(11)).unwrap();
        let text = MatrixFile::from_state(&s).to_text();
        let back = MatrixFile::parse(&text).unwrap();
        assert_eq!(back.kind, MatrixKind::State);
        assert_eq!(&back.matrix, s.matrix());
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn diagnostics() {
        let err = MatrixFile::parse("{\"kind\": \"state\",\n \"n\": 2, \"re\": [[1, 0], [0]], \"im\": [[0, 0], [0, 0]]}")
            .unwrap_err();
        assert_eq!(err.to_string(), "field `re[1]`: expected 2 entries, found 1");
        let err = MatrixFile::parse("{\"kind\": \"state\",\n \"n\": 2,, }").unwrap_err();
        assert!(err.to_string().starts_with("line 2, column"));
        let err = MatrixFile::parse("{\"kind\": \"other\", \"n\": 1, \"re\": [[1]], \"im\": [[0]]}").unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
        let text = "{\"kind\": \"tangent\", \"n\": 1, \"re\": [[1]], \"im\": [[0]]}";
        let f = MatrixFile::parse(text).unwrap();
        assert!(f.clone().into_state(&Tolerances::default()).is_err());
        assert!(f.into_tangent(&Tolerances::default()).is_ok());
    }

    #[test]
    fn number_format() {
        assert_eq!(json_number(0.1), "1.0000000000000001e-1");
        assert_eq!(json_number(f64::NAN), "null");
    }
}
