//! Two decoupled Hopf equations solved through the orbit system, compared
//! with `u = t + sqrt(t² + 2x + u0²)`.

use darboux::expr::Expr;
use darboux::integrate::{integrate_orbit_solution, BZeroSlope, IntegrateOptions, Lattice};
use darboux::system::{builtin, CoeffTable};

fn main() {
    let sys = builtin("order0_decoupled").unwrap();
    let s = sys.sample().unwrap();
    let t = CoeffTable::build(&sys, &s);
    let u0 = [10.0, 30.0];
    let slope = BZeroSlope::new(&sys, &t, &s, 0.0, &u0, &[Expr::var(1), Expr::var(1)]).unwrap();
    let l = Lattice::new(vec![0.0, 0.0], vec![0.01, 0.01], vec![30, 30]);
    let sol =
        integrate_orbit_solution(&sys, &slope, &u0, &l, &IntegrateOptions::default()).unwrap();
    let g = &sol.grid;
    let mut worst: f64 = 0.0;
    for ix in 0..g.nx() {
        for it in 0..g.nt() {
            let (x, tt) = (g.x(ix), g.t(it));
            if let Some(u) = g.get(ix, it) {
                for c in 0..2 {
                    let exact = tt + (tt * tt + 2.0 * x + u0[c] * u0[c]).sqrt();
                    worst = worst.max((u[c] - exact).abs());
                }
            }
        }
    }
    println!("closed-form error {worst:.2e}");
    println!("PDE residual      {:.2e}", sol.verification.max);
    println!("path defect       {:.2e}", sol.path_defect);
}
