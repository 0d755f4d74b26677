//! One Laplace transformation of the shifted family, then a depth-limited
//! search for a terminating sequence.

use darboux::laplace::{laplace_transform, sequence_terminates};
use darboux::system::{builtin, CoeffTable};

fn main() {
    let sys = builtin("shifted3").unwrap();
    let s = sys.sample().unwrap();
    let t = CoeffTable::build(&sys, &s);
    let step = laplace_transform(&sys, &t, &s, 1, 2).unwrap();
    println!("λ    = {:?}", sys.printed_lambdas());
    for (k, l) in step.lambdas.iter().enumerate() {
        println!("barλ{} = {l}", k + 1);
    }
    println!("cross-form residual {:.2e}", step.row.cross_form.max);

    let seq = sequence_terminates(&sys, 1, 3).unwrap();
    println!(
        "outcome from i = 1: {:?} after {} nodes",
        seq.outcome,
        seq.nodes.len()
    );
}
