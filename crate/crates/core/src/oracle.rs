//! Dense four-mode reference computation used by tests as an independent
//! route to the interference output.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::fock::{DensityMatrix, FockCutoff, Operator, Tensor};
use crate::optics::{beamsplitter_matrix, dephase, SourceModel};

/// Embeds a two-mode operator on modes `(i, j)` of a four-mode space.
pub(crate) fn embed(u: &Operator, i: usize, j: usize, cutoff: FockCutoff) -> Operator {
    let d = cutoff.dim();
    let dim = cutoff.dim_modes(4);
    let mut out = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let occ = cutoff.occupations(col, 4);
        let sub_col = occ[i] * d + occ[j];
        for sub_row in 0..d * d {
            let amp = u[(sub_row, sub_col)];
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut o = occ.clone();
            o[i] = sub_row / d;
            o[j] = sub_row % d;
            out[(cutoff.index(&o).unwrap(), col)] += amp;
        }
    }
    out
}

/// Full output over modes `(m1, m2, o1, o2)`: matched and orthogonal
/// internal modes of spatial arms 1 and 2. Arm 2 is split into its internal
/// modes by a beam splitter of transmittance `ξ²`, then the spatial splitter
/// acts on both internal pairs.
pub(crate) fn four_mode_output(source: &SourceModel, cutoff: FockCutoff) -> DensityMatrix {
    let lift = |arm: &DensityMatrix| {
        let mut m = DMatrix::zeros(cutoff.dim(), cutoff.dim());
        let n = arm.dim().min(cutoff.dim());
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = arm.entries()[(i, j)];
            }
        }
        DensityMatrix::from_raw(m, cutoff, 1)
    };
    let (a1, a2) = (dephase(&lift(source.arm1())), dephase(&lift(source.arm2())));
    let vac = DensityMatrix::vacuum(1, cutoff).unwrap();
    let rho = a1.tensor(&a2).unwrap().tensor(&vac).unwrap().tensor(&vac).unwrap();
    let xi = source.overlap();
    let internal = embed(&beamsplitter_matrix(xi * xi, 0.0, cutoff).unwrap(), 1, 3, cutoff);
    let bs = beamsplitter_matrix(source.transmittance(), source.phase(), cutoff).unwrap();
    let u = embed(&bs, 2, 3, cutoff) * embed(&bs, 0, 1, cutoff) * internal;
    DensityMatrix::from_raw(&u * rho.entries() * u.adjoint(), cutoff, 4)
}

pub(crate) fn four_mode_measured(source: &SourceModel, cutoff: FockCutoff) -> DensityMatrix {
    four_mode_output(source, cutoff).partial_trace(4).unwrap().partial_trace(3).unwrap()
}

/// Coincidence probability read off the four-mode populations: both spatial
/// arms hold at least one photon in some internal mode.
pub(crate) fn four_mode_p11(source: &SourceModel, cutoff: FockCutoff) -> f64 {
    let out = four_mode_output(source, cutoff);
    out.populations()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let o = cutoff.occupations(*i, 4);
            o[0] + o[2] > 0 && o[1] + o[3] > 0
        })
        .map(|(_, p)| p)
        .sum()
}
