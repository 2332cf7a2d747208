//! Machine-readable JSON documents for the command-line surface.
//!
//! Floating-point numbers are serialized with 17 significant digits so every
//! document round-trips losslessly. Variable indices in documents are 1-based
//! (matching the usual statistical numbering); in-memory types are 0-based.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::error::{Error, Result};
use crate::kkt::{KktReport, ProblemInstance};
use crate::larspath::{LassoPath, PathEvent};
use crate::polytope::{BoundsReport, VariableClass};
use crate::solvers::SolveCertificate;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// JSON formatter writing every f64 with 17 significant digits.
#[derive(Clone, Copy, Default)]
pub struct FullPrecisionFormatter;

impl Formatter for FullPrecisionFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize any document to a JSON string with full-precision floats.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FullPrecisionFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Internal(format!("JSON serialization failed: {e}")))?;
    String::from_utf8(out).map_err(|e| Error::Internal(format!("non-UTF8 JSON output: {e}")))
}

/// A problem instance as stored on disk: `{"X": [[...]], "y": [...], "lambda": ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDoc {
    #[serde(rename = "X")]
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub lambda: f64,
}

impl InstanceDoc {
    pub fn from_instance(inst: &ProblemInstance) -> Self {
        let x = (0..inst.n())
            .map(|i| (0..inst.p()).map(|j| inst.x[(i, j)]).collect())
            .collect();
        InstanceDoc { x, y: inst.y.iter().copied().collect(), lambda: inst.lambda }
    }

    pub fn into_instance(self) -> Result<ProblemInstance> {
        let n = self.x.len();
        if n == 0 {
            return Err(Error::Input("design matrix has no rows".into()));
        }
        let p = self.x[0].len();
        for (i, row) in self.x.iter().enumerate() {
            if row.len() != p {
                return Err(Error::Input(format!(
                    "design matrix is ragged: row {} has {} entries, expected {p}",
                    i + 1,
                    row.len()
                )));
            }
        }
        let x = nalgebra::DMatrix::from_fn(n, p, |i, j| self.x[i][j]);
        ProblemInstance::new(x, nalgebra::DVector::from_vec(self.y), self.lambda)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventDoc {
    #[serde(rename = "type")]
    pub kind: String,
    pub index: usize,
    pub sign: i8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathKnotDoc {
    pub lambda: f64,
    pub event: EventDoc,
    #[serde(rename = "E")]
    pub e: Vec<usize>,
    pub s: Vec<i8>,
    #[serde(rename = "beta_E_c")]
    pub beta_e_c: Vec<f64>,
    #[serde(rename = "beta_E_d")]
    pub beta_e_d: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathDoc {
    pub version: String,
    pub knots: Vec<PathKnotDoc>,
    pub terminal_lambda: f64,
}

impl PathDoc {
    /// Event knots only (the infinite-lambda start knot has no event and is
    /// implied by the document).
    pub fn from_path(path: &LassoPath) -> Self {
        let knots = path
            .event_knots()
            .map(|k| {
                let (kind, index, sign) = match k.event {
                    PathEvent::Join { index, sign } => ("join", index, sign),
                    PathEvent::Cross { index, sign } => ("cross", index, sign),
                    PathEvent::Start => unreachable!("event_knots excludes start"),
                };
                PathKnotDoc {
                    lambda: k.lambda,
                    event: EventDoc { kind: kind.into(), index: index + 1, sign },
                    e: k.equi_state.members.iter().map(|&i| i + 1).collect(),
                    s: k.equi_state.signs.clone(),
                    beta_e_c: k.c.iter().copied().collect(),
                    beta_e_d: k.d.iter().copied().collect(),
                }
            })
            .collect();
        PathDoc {
            version: VERSION.into(),
            knots,
            terminal_lambda: path.terminal_lambda,
        }
    }

    /// Evaluate the documented path at `lambda` (length-p solution).
    pub fn solution_at(&self, lambda: f64, p: usize) -> Result<Vec<f64>> {
        if lambda < self.terminal_lambda {
            return Err(Error::Range(format!(
                "lambda {lambda} below the path terminal {}",
                self.terminal_lambda
            )));
        }
        let mut beta = vec![0.0; p];
        let mut seg: Option<&PathKnotDoc> = None;
        for knot in &self.knots {
            if knot.lambda >= lambda {
                seg = Some(knot);
            } else {
                break;
            }
        }
        if let Some(knot) = seg {
            for (k, &i) in knot.e.iter().enumerate() {
                if i == 0 || i > p {
                    return Err(Error::Input(format!(
                        "knot references variable {i} outside 1..={p}"
                    )));
                }
                beta[i - 1] = knot.beta_e_c[k] - lambda * knot.beta_e_d[k];
            }
        }
        Ok(beta)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsRowDoc {
    pub i: usize,
    pub lower: f64,
    pub lars: f64,
    pub upper: f64,
    pub class: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsDoc {
    pub version: String,
    #[serde(rename = "E")]
    pub e: Vec<usize>,
    pub s: Vec<i8>,
    pub l1_norm: f64,
    pub rows: Vec<BoundsRowDoc>,
}

impl BoundsDoc {
    pub fn from_report(report: &BoundsReport) -> Self {
        BoundsDoc {
            version: VERSION.into(),
            e: report.equi_state.members.iter().map(|&i| i + 1).collect(),
            s: report.equi_state.signs.clone(),
            l1_norm: report.shared_l1_norm,
            rows: report
                .rows
                .iter()
                .map(|r| BoundsRowDoc {
                    i: r.index + 1,
                    lower: r.lower,
                    lars: r.lars,
                    upper: r.upper,
                    class: match r.class {
                        VariableClass::Dispensable => "dispensable".into(),
                        VariableClass::Indispensable => "indispensable".into(),
                    },
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnumerateDoc {
    pub version: String,
    pub active_sets: Vec<Vec<usize>>,
    pub subspace_equivalent: bool,
}

impl EnumerateDoc {
    pub fn new(active_sets: &[Vec<usize>], subspace_equivalent: bool) -> Self {
        EnumerateDoc {
            version: VERSION.into(),
            active_sets: active_sets
                .iter()
                .map(|s| s.iter().map(|&i| i + 1).collect())
                .collect(),
            subspace_equivalent,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckDoc {
    pub version: String,
    pub stationarity_gap: f64,
    pub sign_violation: f64,
    pub passed: bool,
    pub tol: f64,
    #[serde(rename = "E")]
    pub e: Vec<usize>,
    pub s: Vec<i8>,
}

impl CheckDoc {
    pub fn from_report(report: &KktReport) -> Self {
        CheckDoc {
            version: VERSION.into(),
            stationarity_gap: report.stationarity_gap,
            sign_violation: report.sign_violation,
            passed: report.passed,
            tol: report.tol,
            e: report.equi_state.members.iter().map(|&i| i + 1).collect(),
            s: report.equi_state.signs.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveDoc {
    pub version: String,
    pub method: String,
    pub solution: Vec<f64>,
    pub kkt_gap: f64,
    pub iterations: usize,
}

impl SolveDoc {
    pub fn from_certificate(method: &str, cert: &SolveCertificate) -> Self {
        SolveDoc {
            version: VERSION.into(),
            method: method.into(),
            solution: cert.solution.clone(),
            kkt_gap: cert.kkt_gap,
            iterations: cert.iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::larspath;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn floats_round_trip_at_full_precision() {
        let values = vec![
            std::f64::consts::PI,
            1.0 / 3.0,
            -2.2250738585072014e-308,
            0.1 + 0.2,
            1.5,
            0.0,
        ];
        let json = to_json_string(&values).unwrap();
        let back: Vec<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(values, back);
    }

    #[test]
    fn instance_doc_round_trip() {
        let inst = ProblemInstance::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.25, 1.0 / 3.0]),
            DVector::from_vec(vec![2.0, -1.0]),
            0.7,
        )
        .unwrap();
        let json = to_json_string(&InstanceDoc::from_instance(&inst)).unwrap();
        let doc: InstanceDoc = serde_json::from_str(&json).unwrap();
        let back = doc.into_instance().unwrap();
        assert_eq!(inst.x, back.x);
        assert_eq!(inst.y, back.y);
        assert_eq!(inst.lambda, back.lambda);
    }

    #[test]
    fn ragged_design_rejected() {
        let doc = InstanceDoc {
            x: vec![vec![1.0, 2.0], vec![3.0]],
            y: vec![1.0, 2.0],
            lambda: 0.5,
        };
        assert!(doc.into_instance().is_err());
    }

    #[test]
    fn path_doc_matches_in_memory_path() {
        let x = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let y = DVector::from_vec(vec![2.0]);
        let path = larspath::lars_path(&x, &y, 0.0).unwrap();
        let doc = PathDoc::from_path(&path);
        assert_eq!(doc.knots.len(), 2);
        assert!(doc.knots.iter().all(|k| k.event.kind == "join"));
        for lam in [0.0, 0.5, 1.5, 3.0] {
            let a = doc.solution_at(lam, 2).unwrap();
            let b = larspath::solution_at(&path, lam).unwrap();
            for j in 0..2 {
                assert!((a[j] - b[j]).abs() < 1e-15);
            }
        }
        // Lossless JSON round trip.
        let json = to_json_string(&doc).unwrap();
        let back: PathDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(back.knots[0].beta_e_c, doc.knots[0].beta_e_c);
    }
}
