use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{HmmError, Observation};
use crate::Thought;

/// Smallest admissible covariance eigenvalue.
pub const COV_FLOOR: f64 = 1e-6;

const STOCHASTIC_TOL: f64 = 1e-9;
const MAGIC: &str = "model v1";

/// Full-covariance Gaussian HMM.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianHmm {
    pub pi: Vec<f64>,
    /// Row-stochastic transition matrix, `trans[i][j] = P(j | i)`.
    pub trans: Vec<Vec<f64>>,
    pub means: Vec<Vec<f64>>,
    pub covs: Vec<DMatrix<f64>>,
    /// `thought_assignment[state]`, absent until training assigns it.
    pub thought_assignment: Option<Vec<Thought>>,
}

/// Precomputed Gaussian log-density of one state.
#[derive(Debug, Clone)]
pub(crate) struct Emission {
    mean: DVector<f64>,
    /// Inverse of the lower Cholesky factor.
    whiten: DMatrix<f64>,
    log_norm: f64,
}

impl Emission {
    pub(crate) fn log_density(&self, o: &[f64]) -> f64 {
        let diff = DVector::from_column_slice(o) - &self.mean;
        let z = &self.whiten * diff;
        self.log_norm - 0.5 * z.norm_squared()
    }
}

impl GaussianHmm {
    pub fn states(&self) -> usize {
        self.pi.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn thought_of(&self, state: usize) -> Option<Thought> {
        self.thought_assignment.as_ref().and_then(|a| a.get(state).copied())
    }

    pub fn state_of(&self, thought: Thought) -> Option<usize> {
        self.thought_assignment.as_ref()?.iter().position(|&t| t == thought)
    }

    pub fn validate(&self) -> Result<(), HmmError> {
        let m = self.states();
        let bad = |msg: String| Err(HmmError::InvalidModel(msg));
        if m == 0 {
            return bad("no states".into());
        }
        let l = self.dim();
        if l == 0 {
            return bad("zero observation dimension".into());
        }
        check_distribution(&self.pi, "pi")?;
        if self.trans.len() != m {
            return bad(format!("trans has {} rows, expected {m}", self.trans.len()));
        }
        for (i, row) in self.trans.iter().enumerate() {
            if row.len() != m {
                return bad(format!("trans row {i} has {} entries", row.len()));
            }
            check_distribution(row, &format!("trans row {i}"))?;
        }
        if self.means.len() != m || self.covs.len() != m {
            return bad("means/covs count differs from state count".into());
        }
        for i in 0..m {
            if self.means[i].len() != l || self.means[i].iter().any(|v| !v.is_finite()) {
                return bad(format!("mean {i} is not a finite {l}-vector"));
            }
            let c = &self.covs[i];
            if c.nrows() != l || c.ncols() != l {
                return bad(format!("cov {i} is not {l}x{l}"));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return bad(format!("cov {i} has non-finite entries"));
            }
            let asym = (c - c.transpose()).amax();
            if asym > STOCHASTIC_TOL {
                return bad(format!("cov {i} asymmetric by {asym:e}"));
            }
            let min_eig = c.clone().symmetric_eigenvalues().min();
            // Rounding after flooring leaves eigenvalues a hair under the floor.
            if min_eig < COV_FLOOR * (1.0 - 1e-6) {
                return bad(format!("cov {i} smallest eigenvalue {min_eig:e} below floor"));
            }
        }
        if let Some(assign) = &self.thought_assignment {
            if assign.len() != m {
                return bad(format!("assignment covers {} of {m} states", assign.len()));
            }
            let mut sorted = assign.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != m || m != Thought::ALL.len() {
                return bad("thought assignment is not a bijection onto the thought labels".into());
            }
        }
        Ok(())
    }

    pub(crate) fn emissions(&self) -> Result<Vec<Emission>, HmmError> {
        let l = self.dim() as f64;
        self.means
            .iter()
            .zip(&self.covs)
            .enumerate()
            .map(|(i, (mean, cov))| {
                let chol = cov
                    .clone()
                    .cholesky()
                    .ok_or_else(|| HmmError::InvalidModel(format!("cov {i} is not positive definite")))?;
                let lower = chol.l();
                let log_det = 2.0 * lower.diagonal().iter().map(|d| d.ln()).sum::<f64>();
                let whiten = lower
                    .solve_lower_triangular(&DMatrix::identity(mean.len(), mean.len()))
                    .ok_or_else(|| HmmError::InvalidModel(format!("cov {i} factor is singular")))?;
                Ok(Emission {
                    mean: DVector::from_column_slice(mean),
                    whiten,
                    log_norm: -0.5 * (l * (2.0 * std::f64::consts::PI).ln() + log_det),
                })
            })
            .collect()
    }

    /// Per-state log emission densities of one observation.
    pub fn log_emissions(&self, o: &Observation) -> Result<Vec<f64>, HmmError> {
        Ok(self.emissions()?.iter().map(|e| e.log_density(o)).collect())
    }

    /// The same model with states reordered so that new state `k` is old
    /// state `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            pi: order.iter().map(|&i| self.pi[i]).collect(),
            trans: order
                .iter()
                .map(|&i| order.iter().map(|&j| self.trans[i][j]).collect())
                .collect(),
            means: order.iter().map(|&i| self.means[i].clone()).collect(),
            covs: order.iter().map(|&i| self.covs[i].clone()).collect(),
            thought_assignment: self
                .thought_assignment
                .as_ref()
                .map(|a| order.iter().map(|&i| a[i]).collect()),
        }
    }

    /// Max-norm distance over every parameter entry.
    pub fn max_change(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut track = |a: f64, b: f64| worst = worst.max((a - b).abs());
        for (a, b) in self.pi.iter().zip(&other.pi) {
            track(*a, *b);
        }
        for (ra, rb) in self.trans.iter().zip(&other.trans) {
            for (a, b) in ra.iter().zip(rb) {
                track(*a, *b);
            }
        }
        for (ma, mb) in self.means.iter().zip(&other.means) {
            for (a, b) in ma.iter().zip(mb) {
                track(*a, *b);
            }
        }
        for (ca, cb) in self.covs.iter().zip(&other.covs) {
            for (a, b) in ca.iter().zip(cb.iter()) {
                track(*a, *b);
            }
        }
        worst
    }

    pub fn to_text(&self) -> String {
        let m = self.states();
        let l = self.dim();
        let mut s = String::new();
        let reals = |v: &mut dyn Iterator<Item = f64>| v.map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "m {m}");
        let _ = writeln!(s, "l {l}");
        let _ = writeln!(s, "pi {}", reals(&mut self.pi.iter().copied()));
        let _ = writeln!(s, "trans {}", reals(&mut self.trans.iter().flatten().copied()));
        for mean in &self.means {
            let _ = writeln!(s, "mean {}", reals(&mut mean.iter().copied()));
        }
        for cov in &self.covs {
            // Row-major.
            let _ = writeln!(s, "cov {}", reals(&mut cov.transpose().iter().copied()));
        }
        match &self.thought_assignment {
            Some(a) => {
                let names: Vec<_> = a.iter().map(|t| t.as_str()).collect();
                let _ = writeln!(s, "thought_assignment {}", names.join(" "));
            }
            None => {
                let _ = writeln!(s, "thought_assignment none");
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, HmmError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let err = |line: usize, message: String| HmmError::Parse { line, message };

        let (line, magic) = lines.next().ok_or_else(|| err(1, "empty model file".into()))?;
        if magic != MAGIC {
            return Err(err(line, format!("expected header `{MAGIC}`, found `{magic}`")));
        }
        let mut field = |key: &str| -> Result<(usize, Vec<&str>), HmmError> {
            let (line, text) = lines.next().ok_or_else(|| err(0, format!("missing `{key}` line")))?;
            let mut parts = text.split_whitespace();
            match parts.next() {
                Some(k) if k == key => Ok((line, parts.collect())),
                other => Err(err(line, format!("expected `{key}`, found `{}`", other.unwrap_or("")))),
            }
        };
        let reals = |line: usize, parts: &[&str], n: usize| -> Result<Vec<f64>, HmmError> {
            if parts.len() != n {
                return Err(err(line, format!("expected {n} values, found {}", parts.len())));
            }
            parts
                .iter()
                .map(|p| p.parse::<f64>().map_err(|e| err(line, format!("bad real `{p}`: {e}"))))
                .collect()
        };
        let count = |line: usize, parts: &[&str]| -> Result<usize, HmmError> {
            match parts {
                [v] => v.parse().map_err(|e| err(line, format!("bad count `{v}`: {e}"))),
                _ => Err(err(line, "expected one count".into())),
            }
        };

        let (line, p) = field("m")?;
        let m = count(line, &p)?;
        let (line, p) = field("l")?;
        let l = count(line, &p)?;
        if m == 0 || l == 0 {
            return Err(err(line, "m and l must be positive".into()));
        }
        let (line, p) = field("pi")?;
        let pi = reals(line, &p, m)?;
        let (line, p) = field("trans")?;
        let trans = reals(line, &p, m * m)?.chunks(m).map(<[f64]>::to_vec).collect();
        let mut means = Vec::with_capacity(m);
        for _ in 0..m {
            let (line, p) = field("mean")?;
            means.push(reals(line, &p, l)?);
        }
        let mut covs = Vec::with_capacity(m);
        for _ in 0..m {
            let (line, p) = field("cov")?;
            covs.push(DMatrix::from_row_slice(l, l, &reals(line, &p, l * l)?));
        }
        let (line, p) = field("thought_assignment")?;
        let thought_assignment = match p.as_slice() {
            ["none"] => None,
            names => Some(
                names
                    .iter()
                    .map(|n| n.parse::<Thought>().map_err(|e| err(line, e.to_string())))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        };
        if let Some((line, extra)) = lines.next() {
            return Err(err(line, format!("unexpected trailing line `{extra}`")));
        }
        let model = Self {
            pi,
            trans,
            means,
            covs,
            thought_assignment,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), HmmError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HmmError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn check_distribution(p: &[f64], what: &str) -> Result<(), HmmError> {
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(HmmError::InvalidModel(format!("{what} has a negative or non-finite entry")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(HmmError::InvalidModel(format!("{what} sums to {sum}")));
    }
    Ok(())
}

/// Symmetrizes `c` and raises every eigenvalue below `floor` to it.
/// Returns whether any eigenvalue was raised.
pub(crate) fn floor_covariance(c: &mut DMatrix<f64>, floor: f64) -> bool {
    let sym = (&*c + c.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    if eig.eigenvalues.min() >= floor {
        *c = sym;
        return false;
    }
    let lifted = eig.eigenvalues.map(|v| v.max(floor));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&lifted) * eig.eigenvectors.transpose();
    *c = (&rebuilt + rebuilt.transpose()) * 0.5;
    true
}
