//! Focal charts `y^0 = λ^i`, `y^k = λ^i N^k − M^k` in the affine chart
//! `y^k = −Y^k/Y^{n+1}`.

use std::io::Write;

use serde::Serialize;

use super::pair::ConservationPair;
use super::CongruenceError;
use crate::integrate::Lattice;
use crate::system::DiagonalSystem;

/// Hadamard ratio `|det G| / Π |rows|` below which densities count as dependent.
const DEPENDENT: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct FocalChart {
    pub i: usize,
    pub lattice: Lattice,
    /// `n + 1` affine coordinates per lattice point.
    #[serde(skip)]
    pub y: Vec<Vec<f64>>,
    /// Worst `|y^k − N^k y^0 + M^k|`: the line equations with `Y^{n+1} = −1`.
    pub incidence: f64,
}

impl FocalChart {
    /// Worst variance of `y^0` over a slice of fixed `u^i`; zero when `λ^i`
    /// depends on `u^i` alone, so the focal set is cut by a pencil.
    pub fn pencil_variance(&self) -> f64 {
        let l = &self.lattice;
        let axis = self.i - 1;
        let mut worst: f64 = 0.0;
        for s in 0..l.counts[axis] {
            let vals: Vec<f64> = (0..l.len())
                .filter(|&f| l.multi(f)[axis] == s)
                .map(|f| self.y[f][0])
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
            worst = worst.max(var);
        }
        worst
    }
}

/// The `i`-th focal chart of `pairs` sampled on `lattice`.
pub fn focal_chart(
    sys: &DiagonalSystem,
    pairs: &[ConservationPair],
    i: usize,
    lattice: &Lattice,
) -> Result<FocalChart, CongruenceError> {
    let n = sys.n;
    if pairs.len() != n || !(1..=n).contains(&i) || lattice.dim() != n {
        return Err(CongruenceError::Prerequisite(format!(
            "need {n} pairs, 1 ≤ i ≤ {n} and an {n}-dimensional lattice"
        )));
    }
    let sampled = pairs
        .iter()
        .map(|p| p.on_lattice(lattice))
        .collect::<Result<Vec<_>, _>>()?;
    let mut y = Vec::with_capacity(lattice.len());
    let mut incidence: f64 = 0.0;
    for f in 0..lattice.len() {
        let u = lattice.point(&lattice.multi(f));
        let g = nalgebra::DMatrix::from_fn(n, n, |p, k| sampled[p].2[f][k]);
        let hadamard: f64 = g.row_iter().map(|r| r.norm()).product();
        if !(g.determinant().abs() > DEPENDENT * hadamard) {
            return Err(CongruenceError::DependentDensities { witness: u });
        }
        let li = sys
            .lambda(i)
            .eval(&u)
            .map_err(|err| CongruenceError::Eval(format!("λ^{i} at {u:?}: {err}")))?;
        let mut p = vec![li];
        for (nk, mk, _) in &sampled {
            p.push(li * nk[f] - mk[f]);
        }
        for (k, (nk, mk, _)) in sampled.iter().enumerate() {
            incidence = incidence.max((p[k + 1] - nk[f] * p[0] + mk[f]).abs());
        }
        y.push(p);
    }
    Ok(FocalChart {
        i,
        lattice: lattice.clone(),
        y,
        incidence,
    })
}

/// A two-parameter chart as an OBJ triangle mesh: one vertex per lattice
/// point, two triangles per cell.
pub fn write_obj<W: Write>(chart: &FocalChart, mut w: W) -> std::io::Result<()> {
    let l = &chart.lattice;
    if l.dim() != 2 {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "meshes need a two-parameter chart",
        ));
    }
    writeln!(w, "# focal chart {}", chart.i)?;
    for p in &chart.y {
        writeln!(w, "v {:.12e} {:.12e} {:.12e}", p[0], p[1], p[2])?;
    }
    let (a, b) = (l.counts[0], l.counts[1]);
    let v = |i: usize, j: usize| i * b + j + 1;
    for i in 0..a.saturating_sub(1) {
        for j in 0..b.saturating_sub(1) {
            writeln!(w, "f {} {} {}", v(i, j), v(i + 1, j), v(i + 1, j + 1))?;
            writeln!(w, "f {} {} {}", v(i, j), v(i + 1, j + 1), v(i, j + 1))?;
        }
    }
    Ok(())
}
