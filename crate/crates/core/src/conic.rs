//! Standard-form conic programs and the solver contract.
//!
//! A program is
//!
//! ```text
//! minimize    cᵀx
//! subject to  G_k x + s_k = h_k,   s_k ∈ K_k   for every block k
//! ```
//!
//! where each cone `K_k` is the zero cone (equalities), the nonnegative
//! orthant (inequalities) or a second-order cone `{(t, u) : ‖u‖₂ ≤ t}`.
//! Every optimization in this crate (touch tests, closest points, the
//! relaxed trajectory program and convex restrictions) is expressed in this
//! form and handed to a [`ConicSolver`].

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::math;

#[cfg(feature = "clarabel")]
mod clarabel_backend;
#[cfg(feature = "clarabel")]
pub use clarabel_backend::ClarabelSolver;

/// Cone tag of a constraint block; the payload is the block's row count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    /// `s = 0`, i.e. `G x = h`.
    Zero(usize),
    /// `s ≥ 0`, i.e. `G x ≤ h`.
    Nonneg(usize),
    /// `s₀ ≥ ‖s₁..‖₂`.
    SecondOrder(usize),
}

impl Cone {
    pub fn size(&self) -> usize {
        match *self {
            Cone::Zero(k) | Cone::Nonneg(k) | Cone::SecondOrder(k) => k,
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            Cone::Zero(_) => "zero",
            Cone::Nonneg(_) => "nonneg",
            Cone::SecondOrder(_) => "soc",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConicError {
    #[error("block {block}: cone size {cone} does not match {rows} right-hand-side rows")]
    RowMismatch { block: usize, cone: usize, rows: usize },
    #[error("block {block}: second-order cone needs at least 2 rows, got {size}")]
    SocTooSmall { block: usize, size: usize },
    #[error("block {block}: empty constraint block")]
    EmptyBlock { block: usize },
    #[error("block {block}: entry ({row}, {col}) outside a {rows}×{cols} block")]
    EntryOutOfRange { block: usize, row: usize, col: usize, rows: usize, cols: usize },
    #[error("objective has {found} entries for {expected} variables")]
    ObjectiveLength { expected: usize, found: usize },
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
}

/// One `(G, h, K)` block. Entries are `(row, col, value)` triplets local to
/// the block; repeated `(row, col)` pairs are summed.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintBlock {
    pub cone: Cone,
    pub entries: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
}

/// A sparse affine row `Σ coef·x[col] + constant`, the building unit used by
/// problem assemblers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AffineRow {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineRow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(col: usize, coef: f64) -> Self {
        Self { terms: alloc::vec![(col, coef)], constant: 0.0 }
    }

    pub fn add(mut self, col: usize, coef: f64) -> Self {
        self.push(col, coef);
        self
    }

    pub fn add_const(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn push(&mut self, col: usize, coef: f64) {
        if coef != 0.0 {
            self.terms.push((col, coef));
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(c, v)| v * x[c]).sum::<f64>() + self.constant
    }

    /// `self += s·other`.
    pub fn add_scaled(&mut self, other: &AffineRow, s: f64) {
        for &(c, v) in &other.terms {
            self.push(c, s * v);
        }
        self.constant += s * other.constant;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConicProgram {
    num_vars: usize,
    objective: Vec<f64>,
    blocks: Vec<ConstraintBlock>,
}

impl ConicProgram {
    pub fn new(num_vars: usize) -> Self {
        Self { num_vars, objective: alloc::vec![0.0; num_vars], blocks: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_rows(&self) -> usize {
        self.blocks.iter().map(|b| b.cone.size()).sum()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn blocks(&self) -> &[ConstraintBlock] {
        &self.blocks
    }

    /// Appends a fresh variable and returns its index.
    pub fn add_variable(&mut self) -> usize {
        self.num_vars += 1;
        self.objective.push(0.0);
        self.num_vars - 1
    }

    pub fn set_objective(&mut self, col: usize, coef: f64) {
        self.objective[col] = coef;
    }

    /// Adds a raw block. Validation is deferred to [`ConicProgram::validate`].
    pub fn push_block(&mut self, block: ConstraintBlock) {
        self.blocks.push(block);
    }

    /// Adds a block whose slack is `s = row(x)` for each given affine row,
    /// i.e. `G = -terms`, `h = constant`. This is the natural way to write
    /// `row(x) = 0`, `row(x) ≥ 0` or `(row₀, row₁..) ∈ SOC`.
    pub fn add_affine(&mut self, kind: fn(usize) -> Cone, rows: &[AffineRow]) {
        let mut entries = Vec::with_capacity(rows.iter().map(|r| r.terms.len()).sum());
        let mut rhs = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            for &(c, v) in &r.terms {
                entries.push((i, c, -v));
            }
            rhs.push(r.constant);
        }
        self.blocks.push(ConstraintBlock { cone: kind(rows.len()), entries, rhs });
    }

    pub fn add_zero(&mut self, rows: &[AffineRow]) {
        if !rows.is_empty() {
            self.add_affine(Cone::Zero, rows);
        }
    }

    pub fn add_nonneg(&mut self, rows: &[AffineRow]) {
        if !rows.is_empty() {
            self.add_affine(Cone::Nonneg, rows);
        }
    }

    /// `‖(rows[1], .., rows[k-1])‖₂ ≤ rows[0]`.
    pub fn add_soc(&mut self, rows: &[AffineRow]) {
        self.add_affine(Cone::SecondOrder, rows);
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        if self.objective.len() != self.num_vars {
            return Err(ConicError::ObjectiveLength {
                expected: self.num_vars,
                found: self.objective.len(),
            });
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(ConicError::NonFinite("objective"));
        }
        for (k, b) in self.blocks.iter().enumerate() {
            let size = b.cone.size();
            if size == 0 {
                return Err(ConicError::EmptyBlock { block: k });
            }
            if let Cone::SecondOrder(s) = b.cone {
                if s < 2 {
                    return Err(ConicError::SocTooSmall { block: k, size: s });
                }
            }
            if b.rhs.len() != size {
                return Err(ConicError::RowMismatch { block: k, cone: size, rows: b.rhs.len() });
            }
            if b.rhs.iter().any(|v| !v.is_finite()) {
                return Err(ConicError::NonFinite("right-hand side"));
            }
            for &(r, c, v) in &b.entries {
                if r >= size || c >= self.num_vars {
                    return Err(ConicError::EntryOutOfRange {
                        block: k,
                        row: r,
                        col: c,
                        rows: size,
                        cols: self.num_vars,
                    });
                }
                if !v.is_finite() {
                    return Err(ConicError::NonFinite("constraint matrix"));
                }
            }
        }
        Ok(())
    }

    /// Slack `s = h − G x` of every block, concatenated.
    pub fn slacks(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_rows());
        for b in &self.blocks {
            let base = out.len();
            out.extend_from_slice(&b.rhs);
            for &(r, c, v) in &b.entries {
                out[base + r] -= v * x[c];
            }
        }
        out
    }

    /// Largest violation of any block at `x`: `|s|` for zero cones, `-s` for
    /// the orthant and `‖s₁..‖ − s₀` for second-order cones.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let s = self.slacks(x);
        let mut off = 0;
        let mut worst: f64 = 0.0;
        for b in &self.blocks {
            let k = b.cone.size();
            let blk = &s[off..off + k];
            let v = match b.cone {
                Cone::Zero(_) => blk.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
                Cone::Nonneg(_) => blk.iter().fold(0.0_f64, |m, v| m.max(-v)),
                Cone::SecondOrder(_) => math::norm(&blk[1..]) - blk[0],
            };
            worst = worst.max(v);
            off += k;
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        math::dot(&self.objective, x)
    }

    /// Writes the program as sparse triplet text:
    ///
    /// ```text
    /// vars <n>
    /// cone <block> <zero|nonneg|soc> <rows>
    /// obj <col> <value>
    /// rhs <block> <row> <value>
    /// <block> <row> <col> <value>
    /// ```
    ///
    /// with one `obj`/`rhs`/triplet line per nonzero.
    pub fn write_triplets<W: fmt::Write>(&self, out: &mut W) -> fmt::Result {
        writeln!(out, "vars {}", self.num_vars)?;
        for (k, b) in self.blocks.iter().enumerate() {
            writeln!(out, "cone {} {} {}", k, b.cone.tag(), b.cone.size())?;
        }
        for (c, &v) in self.objective.iter().enumerate() {
            if v != 0.0 {
                writeln!(out, "obj {c} {v:e}")?;
            }
        }
        for (k, b) in self.blocks.iter().enumerate() {
            for (r, &v) in b.rhs.iter().enumerate() {
                if v != 0.0 {
                    writeln!(out, "rhs {k} {r} {v:e}")?;
                }
            }
        }
        for (k, b) in self.blocks.iter().enumerate() {
            for &(r, c, v) in &b.entries {
                writeln!(out, "{k} {r} {c} {v:e}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalError,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConicSolution {
    pub status: SolveStatus,
    /// Empty unless `status == Optimal`.
    pub primal: Vec<f64>,
    pub objective_value: f64,
    /// Seconds spent inside the backend.
    pub solve_time: f64,
}

impl ConicSolution {
    pub fn failed(status: SolveStatus, solve_time: f64) -> Self {
        Self { status, primal: Vec::new(), objective_value: f64::NAN, solve_time }
    }

    pub fn primal(&self) -> Option<&[f64]> {
        (self.status == SolveStatus::Optimal).then_some(self.primal.as_slice())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub feasibility: f64,
    pub gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { feasibility: 1e-8, gap: 1e-8 }
    }
}

/// A backend able to solve zero / nonnegative / second-order cone programs.
///
/// Implementations must be reentrant: distinct programs may be solved from
/// several threads at once.
pub trait ConicSolver: Sync {
    fn solve(&self, program: &ConicProgram, tol: &Tolerances) -> ConicSolution;
}

impl<S: ConicSolver + ?Sized> ConicSolver for &S {
    fn solve(&self, program: &ConicProgram, tol: &Tolerances) -> ConicSolution {
        (**self).solve(program, tol)
    }
}

/// Validates `program` and solves it with `solver`.
pub fn solve_conic(
    solver: &dyn ConicSolver,
    program: &ConicProgram,
    tol: &Tolerances,
) -> Result<ConicSolution, ConicError> {
    program.validate()?;
    Ok(solver.solve(program, tol))
}
