//! A commuting flow `μ` from the Pfaffian system on a lattice, with its
//! path-order defect and the commuting-equation residual.

use darboux::expr::Expr;
use darboux::integrate::{integrate_frobenius_mu, IntegrateOptions, Lattice, PfaffianSpec};
use darboux::system::{builtin, CoeffTable};

fn main() {
    let sys = builtin("lindeg2").unwrap();
    let s = sys.sample().unwrap();
    let t = CoeffTable::build(&sys, &s);
    let spec = PfaffianSpec::from_system(&sys, &t, &s, &[Expr::one(), Expr::one()]).unwrap();
    let l = Lattice::spanning(&sys.domain, 20);
    let mu = integrate_frobenius_mu(&spec, &[1.0, 0.5], &l, &IntegrateOptions::default()).unwrap();
    println!("path defect        {:.2e}", mu.path_defect);
    println!(
        "commuting residual {:.2e}",
        mu.commuting_residual.unwrap_or(f64::NAN)
    );
    let last = l.len() - 1;
    println!(
        "μ at {:?} = ({:.6}, {:.6})",
        l.point(&l.multi(last)),
        mu.grids[0].values[last],
        mu.grids[1].values[last]
    );
}
