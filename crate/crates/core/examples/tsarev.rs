//! Newton on the implicit relations `x + μ^i = λ^i t` with a closed-form
//! commuting flow.

use darboux::expr::parse;
use darboux::hodograph::{solve_tsarev, verify_solution, ExprFlow, NewtonOptions, PointStatus};
use darboux::integrate::Lattice;
use darboux::system::builtin;

fn main() {
    let sys = builtin("order0_decoupled").unwrap();
    let mu = ["u1^2/2 - 50", "u2^2/2 - 450"]
        .iter()
        .map(|m| parse(m, 2).unwrap())
        .collect();
    let l = Lattice::new(vec![0.0, 0.0], vec![0.05, 0.05], vec![20, 15]);
    let g = solve_tsarev(
        &sys,
        &ExprFlow::new(mu),
        &l,
        &[10.0, 30.0],
        &NewtonOptions::default(),
    );
    let v = verify_solution(&sys, &g);
    println!(
        "{} of {} points converged, residual {:.2e}",
        g.count(PointStatus::Converged),
        l.len(),
        v.max
    );
    println!("u(x=0.95, t=0.7) = {:?}", g.get(19, 14).unwrap());
}
