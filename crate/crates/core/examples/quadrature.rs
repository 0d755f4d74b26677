//! Two components: `t(u)` and `x(u)` by quadrature, then the inverse map
//! checked against the PDE.

use darboux::expr::Expr;
use darboux::integrate::{solve_n2_quadrature, IntegrateOptions, LameField, Lattice};
use darboux::system::{builtin, CoeffTable};

fn main() {
    let sys = builtin("order0_decoupled").unwrap();
    let s = sys.sample().unwrap();
    let t = CoeffTable::build(&sys, &s);
    let base = [10.0, 30.0];
    let (h1, h2) = (LameField::new(&t, 1, &base), LameField::new(&t, 2, &base));
    let l = Lattice::new(base.to_vec(), vec![0.2, 0.5], vec![12, 12]);
    let q = solve_n2_quadrature(
        &sys,
        &t,
        &s,
        &h1,
        &h2,
        &Expr::var(1),
        &Expr::var(1),
        &l,
        &IntegrateOptions::default(),
    )
    .unwrap();
    println!("closedness of ω {:.1e}", q.omega_closedness);
    let inv = q.inversion().unwrap();
    println!(
        "inverse map: {} of {} points checked, residual {:.2e}",
        inv.checked, inv.nonsingular, inv.max_residual
    );
    let end = [11, 11];
    println!(
        "at u = {:?}: t = {:.6}, x = {:.6}",
        l.point(&end),
        q.t.get(&end),
        q.x.get(&end)
    );
}
