use alloc::vec::Vec;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::{Cone, ConicProgram, ConicSolution, ConicSolver, SolveStatus, Tolerances};

/// Interior-point backend built on the Clarabel solver.
#[derive(Clone, Debug)]
pub struct ClarabelSolver {
    pub max_iter: u32,
}

impl Default for ClarabelSolver {
    fn default() -> Self {
        Self { max_iter: 200 }
    }
}

impl ConicSolver for ClarabelSolver {
    fn solve(&self, program: &ConicProgram, tol: &Tolerances) -> ConicSolution {
        let started = std::time::Instant::now();
        let n = program.num_vars();
        let m = program.num_rows();

        let nnz: usize = program.blocks().iter().map(|b| b.entries.len()).sum();
        let (mut rows, mut cols, mut vals) =
            (Vec::with_capacity(nnz), Vec::with_capacity(nnz), Vec::with_capacity(nnz));
        let mut b = Vec::with_capacity(m);
        let mut cones = Vec::with_capacity(program.blocks().len());
        for blk in program.blocks() {
            let base = b.len();
            for &(r, c, v) in &blk.entries {
                rows.push(base + r);
                cols.push(c);
                vals.push(v);
            }
            b.extend_from_slice(&blk.rhs);
            cones.push(match blk.cone {
                Cone::Zero(k) => SupportedConeT::ZeroConeT(k),
                Cone::Nonneg(k) => SupportedConeT::NonnegativeConeT(k),
                Cone::SecondOrder(k) => SupportedConeT::SecondOrderConeT(k),
            });
        }
        let a = CscMatrix::new_from_triplets(m, n, rows, cols, vals);
        let p = CscMatrix::zeros((n, n));

        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(self.max_iter)
            .tol_feas(tol.feasibility)
            .tol_gap_abs(tol.gap)
            .tol_gap_rel(tol.gap)
            .build()
            .expect("static clarabel settings are valid");

        let mut solver = match DefaultSolver::new(&p, program.objective(), &a, &b, &cones, settings) {
            Ok(s) => s,
            Err(_) => {
                return ConicSolution::failed(
                    SolveStatus::NumericalError,
                    started.elapsed().as_secs_f64(),
                )
            }
        };
        solver.solve();
        let elapsed = started.elapsed().as_secs_f64();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved => SolveStatus::Optimal,
            SolverStatus::AlmostSolved => {
                // accept reduced-accuracy exits only when the primal point is
                // still feasible to the requested tolerance
                let scale = 1.0 + b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
                if program.max_violation(&sol.x) <= 10.0 * tol.feasibility * scale {
                    SolveStatus::Optimal
                } else {
                    SolveStatus::NumericalError
                }
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                SolveStatus::Unbounded
            }
            _ => SolveStatus::NumericalError,
        };
        if status != SolveStatus::Optimal {
            return ConicSolution::failed(status, elapsed);
        }
        let primal = sol.x.clone();
        ConicSolution {
            status,
            objective_value: program.objective_value(&primal),
            primal,
            solve_time: elapsed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{solve_conic, AffineRow};

    #[test]
    fn lp_soc_and_infeasible_examples() {
        let s = ClarabelSolver::default();
        let tol = Tolerances::default();

        let mut lp = ConicProgram::new(1);
        lp.set_objective(0, 1.0);
        lp.add_nonneg(&[AffineRow { terms: alloc::vec![(0, 1.0)], constant: -1.0 }]);
        let r = solve_conic(&s, &lp, &tol).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.primal[0] - 1.0).abs() < 1e-7);

        let mut soc = ConicProgram::new(1);
        soc.set_objective(0, 1.0);
        soc.add_soc(&[AffineRow::var(0, 1.0), AffineRow::constant(3.0), AffineRow::constant(4.0)]);
        let r = solve_conic(&s, &soc, &tol).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective_value - 5.0).abs() < 1e-7);

        let mut bad = ConicProgram::new(1);
        bad.add_nonneg(&[
            AffineRow { terms: alloc::vec![(0, 1.0)], constant: -1.0 },
            AffineRow::var(0, -1.0),
        ]);
        let r = solve_conic(&s, &bad, &tol).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.primal().is_none());
    }

    #[test]
    fn unbounded_is_reported() {
        let s = ClarabelSolver::default();
        let mut p = ConicProgram::new(1);
        p.set_objective(0, -1.0);
        p.add_nonneg(&[AffineRow::var(0, 1.0)]);
        assert_eq!(s.solve(&p, &Tolerances::default()).status, SolveStatus::Unbounded);
    }
}
