//! Deterministic instance generators: Gaussian designs, duplicated-column
//! designs, the averaged-column construction (X4 = (X2+X3)/2 with trailing
//! columns orthogonalized against the first four), and binary designs.
//!
//! Every generator is a pure function of (kind, n, p, seed); generated
//! instances carry lambda = 0.5 * lambda_max by default.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kkt::ProblemInstance;
use crate::numkernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceKind {
    Gaussian,
    Duplicated,
    AveragedColumn,
    BinaryDesign,
}

impl InstanceKind {
    pub const ALL: [InstanceKind; 4] = [
        InstanceKind::Gaussian,
        InstanceKind::Duplicated,
        InstanceKind::AveragedColumn,
        InstanceKind::BinaryDesign,
    ];
}

impl FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(InstanceKind::Gaussian),
            "duplicated" => Ok(InstanceKind::Duplicated),
            "averaged-column" => Ok(InstanceKind::AveragedColumn),
            "binary-design" => Ok(InstanceKind::BinaryDesign),
            other => Err(Error::Input(format!(
                "unknown instance kind '{other}' (expected gaussian, duplicated, averaged-column, or binary-design)"
            ))),
        }
    }
}

/// One standard normal draw (Box-Muller).
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    // Row-major fill so the draw order is independent of storage layout.
    let mut m = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            m[(i, j)] = normal(rng);
        }
    }
    m
}

/// A sparse "true" coefficient vector used to give random designs a signal.
fn planted_coefficients(p: usize) -> DVector<f64> {
    let mut beta = DVector::zeros(p);
    beta[0] = 2.0;
    let mut sign = 1.0;
    let mut j = 3;
    while j < p {
        beta[j] = sign;
        sign = -sign;
        j += 3;
    }
    beta
}

fn with_default_lambda(x: DMatrix<f64>, y: DVector<f64>) -> Result<ProblemInstance> {
    let lambda_max = (x.transpose() * &y).amax();
    let lambda = if lambda_max > 0.0 { 0.5 * lambda_max } else { 1.0 };
    ProblemInstance::new(x, y, lambda)
}

/// Generate a deterministic instance of the requested kind and shape.
pub fn generate(kind: InstanceKind, n: usize, p: usize, seed: u64) -> Result<ProblemInstance> {
    if n == 0 || p == 0 {
        return Err(Error::Input(format!("dimensions must be positive, got n={n}, p={p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        InstanceKind::Gaussian => {
            let x = normal_matrix(&mut rng, n, p);
            let noise = DVector::from_fn(n, |_, _| normal(&mut rng));
            let y = &x * planted_coefficients(p) + 0.5 * noise;
            with_default_lambda(x, y)
        }
        InstanceKind::Duplicated => {
            if p < 2 {
                return Err(Error::Input("duplicated kind needs p >= 2".into()));
            }
            if n == 1 && p == 2 {
                // Canonical fixture: X = [[1, 1]], y = (2), lambda = 0.5 * lambda_max = 1.
                let x = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
                let y = DVector::from_vec(vec![2.0]);
                return with_default_lambda(x, y);
            }
            let mut x = normal_matrix(&mut rng, n, p);
            for i in 0..n {
                x[(i, 1)] = x[(i, 0)];
            }
            let noise = DVector::from_fn(n, |_, _| normal(&mut rng));
            let y = &x * planted_coefficients(p) + 0.3 * noise;
            with_default_lambda(x, y)
        }
        InstanceKind::AveragedColumn => {
            if p < 4 {
                return Err(Error::Input("averaged-column kind needs p >= 4".into()));
            }
            let mut x = normal_matrix(&mut rng, n, p);
            for i in 0..n {
                x[(i, 3)] = (x[(i, 1)] + x[(i, 2)]) / 2.0;
            }
            if p > 4 {
                // Orthogonalize the trailing columns against span(X1..X4).
                let head = x.columns(0, 4).clone_owned();
                let f = numkernel::rank_factor(&head, numkernel::DEFAULT_RANK_TOL)?;
                for j in 4..p {
                    let col = x.column(j).clone_owned();
                    let proj = &f.range_basis * (f.range_basis.transpose() * &col);
                    x.set_column(j, &(col - proj));
                }
            }
            let y = -x.column(0) + x.column(1) + x.column(2);
            with_default_lambda(x, y.clone_owned())
        }
        InstanceKind::BinaryDesign => {
            let mut x = DMatrix::zeros(n, p);
            for i in 0..n {
                for j in 0..p {
                    x[(i, j)] = if rng.gen::<f64>() < 0.5 { 1.0 } else { 0.0 };
                }
            }
            let noise = DVector::from_fn(n, |_, _| normal(&mut rng));
            let y = &x * planted_coefficients(p) + 0.5 * noise;
            with_default_lambda(x, y)
        }
    }
}
