//! Solutions sampled on an `(x, t)` lattice and their PDE residual.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::integrate::Lattice;
use crate::system::DiagonalSystem;

/// State of one lattice point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Converged,
    NoConvergence,
    SingularJacobian,
    /// Breakdown or blow-up during a staircase integration.
    Masked,
}

/// `u(x, t)` on a lattice with axes `(x, t)`.
#[derive(Clone, Debug, Serialize)]
pub struct SolutionGrid {
    pub lattice: Lattice,
    pub n: usize,
    #[serde(skip)]
    pub u: Vec<Vec<f64>>,
    #[serde(skip)]
    pub status: Vec<PointStatus>,
    #[serde(skip)]
    pub iterations: Vec<usize>,
    /// Scaled PDE residual at interior points whose stencil converged.
    #[serde(skip)]
    pub residual: Vec<Option<f64>>,
}

impl SolutionGrid {
    /// All points masked.
    pub fn empty(lattice: Lattice, n: usize) -> Self {
        assert_eq!(lattice.dim(), 2, "solution lattices have axes (x, t)");
        let len = lattice.len();
        SolutionGrid {
            lattice,
            n,
            u: vec![vec![f64::NAN; n]; len],
            status: vec![PointStatus::Masked; len],
            iterations: vec![0; len],
            residual: vec![None; len],
        }
    }

    pub fn nx(&self) -> usize {
        self.lattice.counts[0]
    }

    pub fn nt(&self) -> usize {
        self.lattice.counts[1]
    }

    pub fn flat(&self, ix: usize, it: usize) -> usize {
        ix * self.nt() + it
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.lattice.coord(0, ix)
    }

    pub fn t(&self, it: usize) -> f64 {
        self.lattice.coord(1, it)
    }

    pub fn converged(&self, f: usize) -> bool {
        self.status[f] == PointStatus::Converged
    }

    pub fn get(&self, ix: usize, it: usize) -> Option<&[f64]> {
        let f = self.flat(ix, it);
        self.converged(f).then(|| self.u[f].as_slice())
    }

    pub fn count(&self, s: PointStatus) -> usize {
        self.status.iter().filter(|&&x| x == s).count()
    }

    /// Store a verification's residual field.
    pub fn attach(&mut self, v: &Verification) {
        self.residual = v.field.clone();
    }

    /// CSV with columns `x, t, u1..un, converged, residual`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["x".to_string(), "t".to_string()];
        header.extend((1..=self.n).map(|i| format!("u{i}")));
        header.extend(["converged".to_string(), "residual".to_string()]);
        out.write_record(&header)?;
        for ix in 0..self.nx() {
            for it in 0..self.nt() {
                let f = self.flat(ix, it);
                let mut row = vec![
                    format!("{:.17e}", self.x(ix)),
                    format!("{:.17e}", self.t(it)),
                ];
                row.extend(self.u[f].iter().map(|v| format!("{v:.17e}")));
                row.push(self.converged(f).to_string());
                row.push(self.residual[f].map_or(String::new(), |r| format!("{r:.17e}")));
                out.write_record(&row)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// PDE residual of a solution grid.
#[derive(Clone, Debug, Serialize)]
pub struct Verification {
    /// Worst `|u^i_t − λ^i u^i_x| / (1 + |u^i_t| + |λ^i u^i_x|)`.
    pub max: f64,
    /// Lattice index `(ix, it)` of the worst point.
    pub witness: Option<(usize, usize)>,
    /// Number of points where the residual was evaluated.
    pub checked: usize,
    #[serde(skip)]
    pub field: Vec<Option<f64>>,
}

impl Verification {
    /// At least one point checked and every residual within `tol`.
    pub fn passes(&self, tol: f64) -> bool {
        self.checked > 0 && self.max <= tol
    }
}

/// Centred second-order differences at interior points whose four
/// neighbours converged.
pub fn verify_solution(sys: &DiagonalSystem, grid: &SolutionGrid) -> Verification {
    let (nx, nt) = (grid.nx(), grid.nt());
    let mut field = vec![None; grid.lattice.len()];
    if nx < 3 || nt < 3 {
        return Verification {
            max: 0.0,
            witness: None,
            checked: 0,
            field,
        };
    }
    let (hx, ht) = (grid.lattice.steps[0], grid.lattice.steps[1]);
    let computed: Vec<(usize, f64)> = (0..grid.lattice.len())
        .into_par_iter()
        .filter_map(|f| {
            let (ix, it) = (f / nt, f % nt);
            if ix == 0 || it == 0 || ix + 1 == nx || it + 1 == nt {
                return None;
            }
            let u = grid.get(ix, it)?;
            let (xp, xm) = (grid.get(ix + 1, it)?, grid.get(ix - 1, it)?);
            let (tp, tm) = (grid.get(ix, it + 1)?, grid.get(ix, it - 1)?);
            let lam = sys.speeds(u).ok()?;
            let mut worst: f64 = 0.0;
            for i in 0..grid.n {
                let ux = (xp[i] - xm[i]) / (2.0 * hx);
                let ut = (tp[i] - tm[i]) / (2.0 * ht);
                let r = (ut - lam[i] * ux).abs() / (1.0 + ut.abs() + (lam[i] * ux).abs());
                worst = worst.max(r);
            }
            Some((f, worst))
        })
        .collect();
    let mut v = Verification {
        max: 0.0,
        witness: None,
        checked: computed.len(),
        field: Vec::new(),
    };
    for (f, r) in computed {
        field[f] = Some(r);
        if v.witness.is_none() || r > v.max {
            v.max = r;
            v.witness = Some((f / nt, f % nt));
        }
    }
    v.field = field;
    v
}
