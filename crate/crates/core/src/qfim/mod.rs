//! Quantum Fisher information and Uhlmann curvature matrices.

pub mod analytic;
pub mod oracle;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Serialize, Serializer};

use crate::coin::Param;

/// How a matrix was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Leading order in `t ≫ 1`; relative error `O(1/t)` against the exact value.
    Asymptotic,
    /// Exact at the given finite `t`.
    Exact,
    /// Obtained by reparametrizing another matrix.
    Pullback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    Symmetric,
    Antisymmetric,
}

/// A labelled real matrix over estimation parameters, with time-step metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct QfiMatrix {
    pub entries: DMatrix<f64>,
    pub labels: Vec<String>,
    pub t: u64,
    pub regime: Regime,
    pub symmetry: Symmetry,
}

pub fn param_labels(params: &[Param]) -> Vec<String> {
    params.iter().map(|p| p.label().to_string()).collect()
}

impl QfiMatrix {
    pub fn new(
        entries: DMatrix<f64>,
        labels: Vec<String>,
        t: u64,
        regime: Regime,
        symmetry: Symmetry,
    ) -> Self {
        assert!(entries.is_square() && entries.nrows() == labels.len());
        QfiMatrix {
            entries,
            labels,
            t,
            regime,
            symmetry,
        }
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn get(&self, a: &str, b: &str) -> f64 {
        let i = self
            .index_of(a)
            .unwrap_or_else(|| panic!("no parameter '{a}'"));
        let j = self
            .index_of(b)
            .unwrap_or_else(|| panic!("no parameter '{b}'"));
        self.entries[(i, j)]
    }

    /// Restrict to the given labels, in that order.
    pub fn block(&self, labels: &[&str]) -> QfiMatrix {
        let idx: Vec<usize> = labels
            .iter()
            .map(|l| {
                self.index_of(l)
                    .unwrap_or_else(|| panic!("no parameter '{l}'"))
            })
            .collect();
        let n = idx.len();
        let entries = DMatrix::from_fn(n, n, |i, j| self.entries[(idx[i], idx[j])]);
        QfiMatrix {
            entries,
            labels: labels.iter().map(|s| s.to_string()).collect(),
            ..self.clone()
        }
    }

    /// The `(θ, α)` block.
    pub fn identifiable(&self) -> QfiMatrix {
        self.block(&["theta", "alpha"])
    }

    pub fn scaled(&self, factor: f64) -> QfiMatrix {
        QfiMatrix {
            entries: &self.entries * factor,
            ..self.clone()
        }
    }

    /// Divide by `t²`.
    pub fn per_t2(&self) -> QfiMatrix {
        let t = self.t.max(1) as f64;
        self.scaled(1.0 / (t * t))
    }

    /// Largest violation of the declared (anti)symmetry.
    pub fn symmetry_residual(&self) -> f64 {
        let sign = match self.symmetry {
            Symmetry::Symmetric => 1.0,
            Symmetry::Antisymmetric => -1.0,
        };
        (&self.entries - self.entries.transpose() * sign)
            .abs()
            .max()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let sym = (&self.entries + self.entries.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.entries.row(i).iter().copied().collect())
            .collect()
    }
}

impl Serialize for QfiMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            labels: &'a [String],
            t: u64,
            regime: Regime,
            symmetry: Symmetry,
            entries: Vec<Vec<f64>>,
        }
        Repr {
            labels: &self.labels,
            t: self.t,
            regime: self.regime,
            symmetry: self.symmetry,
            entries: self.rows(),
        }
        .serialize(s)
    }
}
