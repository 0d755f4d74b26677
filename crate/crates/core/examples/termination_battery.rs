//! The transformed-row test, the order-1 criterion and the involutivity
//! oracle side by side on a battery of systems.

use darboux::laplace::battery;

fn main() {
    for inst in battery() {
        let (verdicts, excluded) = inst.evaluate();
        for v in &verdicts {
            println!(
                "{:>14} ({}, {}): row vanishes {:5}  order 1 {:5}  oracle {:5}  agree {}",
                v.name,
                v.i,
                v.j,
                v.transformed_row_vanishes,
                v.order1_criterion,
                v.oracle,
                v.agree()
            );
        }
        for (i, j, why) in excluded {
            println!("{:>14} ({i}, {j}): excluded, {why}", inst.name);
        }
    }
}
