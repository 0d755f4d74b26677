//! Lamé coefficients of the swapped pair on a lattice, against the
//! closed form `H_1 = (u1 − 1)/(u1 − u2)`.

use darboux::integrate::{lame_coefficients, Lattice};
use darboux::system::{builtin, CoeffTable};

fn main() {
    let sys = builtin("lindeg2").unwrap();
    let s = sys.sample().unwrap();
    let t = CoeffTable::build(&sys, &s);
    let base = [2.0, 1.0];
    let l = Lattice::new(base.to_vec(), vec![1.0 / 19.0, -0.5 / 19.0], vec![20, 20]);
    let g = lame_coefficients(&sys, &t, &s, 1, &base, &l).unwrap();
    let mut worst: f64 = 0.0;
    for f in 0..l.len() {
        let u = l.point(&l.multi(f));
        worst = worst.max((g.h.values[f] - (u[0] - 1.0) / (u[0] - u[1])).abs());
    }
    println!("H_1(2, 0.5) = {:.12}", g.h.get(&[0, 19]));
    println!("worst error against the closed form {worst:.2e}");
    println!("differential residual {:.2e}", g.fd_residual);
}
