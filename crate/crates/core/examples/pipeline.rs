//! The end-to-end solver: diagnostics pick a route, the route produces
//! `u(x, t)`, and the PDE residual is checked on the grid.

use darboux::expr::Expr;
use darboux::hodograph::{pipeline_solve, plot_script, PipelineOptions};
use darboux::integrate::Lattice;
use darboux::system::builtin;

fn main() {
    let sys = builtin("lindeg2").unwrap();
    let l = Lattice::new(vec![0.0, 0.0], vec![0.0025, 0.0025], vec![30, 30]);
    let res = pipeline_solve(
        &sys,
        &[Expr::one(), Expr::one()],
        &[2.0, 1.0],
        &l,
        &PipelineOptions::default(),
    )
    .unwrap();
    println!("route {:?}, {} points converged", res.route, res.converged);
    println!(
        "residual {:.2e}, path defect {:.2e}",
        res.verification.max, res.path_defect
    );
    let mut csv = Vec::new();
    res.grid.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    for line in text.lines().take(4) {
        println!("{line}");
    }
    println!("--- gnuplot\n{}", plot_script(&res.grid, "solution.csv"));
}
