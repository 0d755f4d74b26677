//! End-to-end solve: diagnostics gate, then one of two routes.
//!
//! When every `b_ik` vanishes the closed form `P^i = H_i/(φ_i − t λ^i_i H_i)`
//! drives the orbit system directly. Otherwise the commuting flow comes from
//! the closed Pfaffian system and `u` from Newton on the implicit relations.
//! Both routes take base data `(x0, t0, u0)`: the lattice base is `(x0, t0)`
//! and the solution there is `u0`.

use serde::Serialize;
use thiserror::Error;

use super::grid::{verify_solution, PointStatus, SolutionGrid, Verification};
use super::tsarev::{solve_tsarev, NewtonOptions, StaircaseFlow};
use crate::expr::Expr;
use crate::integrate::{
    integrate_frobenius_mu, integrate_orbit_solution, BZeroSlope, IntegrateError, IntegrateOptions,
    Lattice, PfaffianSpec,
};
use crate::system::{full_report, CoeffTable, DiagonalSystem, SystemError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("refused: {0}")]
    Refused(String),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Lamé coefficients and the orbit system.
    BZero,
    /// Commuting flow plus Newton on the implicit relations.
    CommutingFlow,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PipelineOptions {
    /// Run even when the diagnostics deny order ≤ 1.
    pub force: bool,
    pub integrate: IntegrateOptions,
    pub newton: NewtonOptions,
    /// RK4 steps per leg when `μ` is evaluated on demand.
    pub steps_per_leg: usize,
    /// Points per axis of the `u` lattice on which `μ` is reported.
    pub mu_points: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            force: false,
            integrate: IntegrateOptions::default(),
            newton: NewtonOptions::default(),
            steps_per_leg: 64,
            mu_points: 9,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineResult {
    pub route: Route,
    pub grid: SolutionGrid,
    pub verification: Verification,
    /// Path-order defect of the orbit system or of the `μ` lattice.
    pub path_defect: f64,
    pub converged: usize,
    pub flagged: usize,
    pub max_iterations: usize,
    pub warning: Option<String>,
}

/// True when `b_ik` is undefined or zero at every sample, for all `i ≠ k`.
pub fn b_vanishes(sys: &DiagonalSystem, table: &CoeffTable, points: &[Vec<f64>]) -> bool {
    (1..=sys.n).all(|i| {
        (1..=sys.n).filter(|&k| k != i).all(|k| {
            table
                .b(i, k)
                .is_none_or(|b| b.is_numerically_zero(points, sys.tol))
        })
    })
}

/// `u` over `lattice` (axes `(x, t)`, base `(x0, t0)`) with `u(x0, t0) = u0`.
pub fn pipeline_solve(
    sys: &DiagonalSystem,
    phis: &[Expr],
    u0: &[f64],
    lattice: &Lattice,
    opts: &PipelineOptions,
) -> Result<PipelineResult, PipelineError> {
    if lattice.dim() != 2 || u0.len() != sys.n || phis.len() != sys.n {
        return Err(IntegrateError::Prerequisite(format!(
            "need an (x, t) lattice, a {}-vector u0 and {} φ functions",
            sys.n, sys.n
        ))
        .into());
    }
    let report = full_report(sys)?;
    if !report.overall_darboux_order_le1 && !opts.force {
        let failing: Vec<String> = report
            .darboux_order0
            .iter()
            .zip(&report.darboux_order1)
            .filter(|(a, b)| !a.holds && !b.holds())
            .map(|(_, b)| format!("i = {} ({:?})", b.i, b.verdict))
            .collect();
        return Err(PipelineError::Refused(format!(
            "no Riemann invariant of order ≤ 1 for {}; pass force to run anyway",
            failing.join(", ")
        )));
    }
    let samples = sys.sample()?;
    let table = CoeffTable::build(sys, &samples);
    let (x0, t0) = (lattice.base[0], lattice.base[1]);
    let (route, grid, path_defect, warning) = if b_vanishes(sys, &table, &samples.points) {
        let slope = BZeroSlope::new(sys, &table, &samples, t0, u0, phis)?;
        let sol = integrate_orbit_solution(sys, &slope, u0, lattice, &opts.integrate)?;
        (Route::BZero, sol.grid, sol.path_defect, sol.warning)
    } else {
        let spec = PfaffianSpec::from_system(sys, &table, &samples, phis)?;
        let lam = sys
            .speeds(u0)
            .map_err(|e| IntegrateError::System(e.to_string()))?;
        let mu0: Vec<f64> = lam.iter().map(|l| l * t0 + x0).collect();
        let mu = integrate_frobenius_mu(
            &spec,
            &mu0,
            &mu_lattice(sys, u0, opts.mu_points),
            &opts.integrate,
        )?;
        let flow = StaircaseFlow {
            spec,
            base: u0.to_vec(),
            mu0,
            steps_per_leg: opts.steps_per_leg,
        };
        let grid = solve_tsarev(sys, &flow, lattice, u0, &opts.newton);
        (Route::CommutingFlow, grid, mu.path_defect, mu.warning)
    };
    let mut grid = grid;
    let verification = verify_solution(sys, &grid);
    grid.attach(&verification);
    Ok(PipelineResult {
        route,
        converged: grid.count(PointStatus::Converged),
        flagged: grid.count(PointStatus::NoConvergence) + grid.count(PointStatus::SingularJacobian),
        max_iterations: grid.iterations.iter().copied().max().unwrap_or(0),
        grid,
        verification,
        path_defect,
        warning,
    })
}

/// A lattice based at `u0` reaching toward the farther face of the domain.
fn mu_lattice(sys: &DiagonalSystem, u0: &[f64], points: usize) -> Lattice {
    let points = points.max(2);
    let steps = sys
        .domain
        .iter()
        .zip(u0)
        .map(|(&(lo, hi), &u)| {
            let (up, down) = (hi - u, u - lo);
            let reach = if up >= down { up } else { -down };
            if reach == 0.0 {
                (hi - lo) / (points - 1) as f64
            } else {
                reach / (points - 1) as f64
            }
        })
        .collect();
    Lattice::new(u0.to_vec(), steps, vec![points; sys.n])
}
