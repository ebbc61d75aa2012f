//! Independent eigenvalue oracle: second-order finite differences on every
//! edge (piecewise-linear elements with lumped mass), Kirchhoff or Dirichlet
//! vertices, eigenvalues located by Sylvester inertia counts.

use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexKind {
    /// Continuity and zero sum of outgoing derivatives; Neumann at degree 1.
    Kirchhoff,
    Dirichlet,
}

#[derive(Debug, Clone)]
pub struct FdGraph {
    pub vertices: Vec<VertexKind>,
    /// (tail, head, length)
    pub edges: Vec<(usize, usize, f64)>,
}

/// Number of eigenvalues of the discrete problem `K u = lambda M u` below
/// `sigma`, with `n` intervals per edge: the negative inertia of `K - sigma M`,
/// split into per-edge tridiagonal blocks and a dense Schur complement on
/// the vertex nodes.
pub fn count_below(g: &FdGraph, n: usize, sigma: f64) -> usize {
    assert!(n >= 2);
    let unknown: Vec<Option<usize>> = {
        let mut next = 0;
        g.vertices
            .iter()
            .map(|k| match k {
                VertexKind::Dirichlet => None,
                VertexKind::Kirchhoff => {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    };
    let nv = unknown.iter().flatten().count();
    let mut schur = DMatrix::<f64>::zeros(nv, nv);
    let mut negative = 0;
    let m = n - 1;
    for &(tail, head, l) in &g.edges {
        let h = l / n as f64;
        let diag = 2.0 / h - sigma * h;
        let off = -1.0 / h;
        // LDL^T pivots of the constant tridiagonal block
        let mut pivots = Vec::with_capacity(m);
        let mut d = diag;
        for i in 0..m {
            if i > 0 {
                d = diag - off * off / pivots[i - 1];
            }
            if d == 0.0 {
                d = f64::EPSILON * diag.abs().max(1.0);
            }
            pivots.push(d);
        }
        negative += pivots.iter().filter(|&&p| p < 0.0).count();
        let solve = |rhs: &[f64]| -> Vec<f64> {
            // forward: L z = rhs, L unit lower bidiagonal with l_i = off / p_{i-1}
            let mut z = rhs.to_vec();
            for i in 1..m {
                z[i] -= off / pivots[i - 1] * z[i - 1];
            }
            for i in 0..m {
                z[i] /= pivots[i];
            }
            for i in (0..m - 1).rev() {
                z[i] -= off / pivots[i] * z[i + 1];
            }
            z
        };
        let mut e0 = vec![0.0; m];
        e0[0] = 1.0;
        let mut e1 = vec![0.0; m];
        e1[m - 1] = 1.0;
        let x = solve(&e0);
        let y = solve(&e1);
        let c2 = off * off;
        for (v, first) in [(tail, true), (head, false)] {
            if let Some(i) = unknown[v] {
                schur[(i, i)] += 1.0 / h - sigma * h / 2.0;
                schur[(i, i)] -= c2 * if first { x[0] } else { y[m - 1] };
            }
        }
        if let (Some(i), Some(j)) = (unknown[tail], unknown[head]) {
            schur[(i, j)] -= c2 * x[m - 1];
            schur[(j, i)] -= c2 * x[m - 1];
        }
    }
    if nv > 0 {
        negative += schur.symmetric_eigenvalues().iter().filter(|&&e| e < 0.0).count();
    }
    negative
}

/// The `j`-th (1-based) discrete eigenvalue by bisection on the count.
pub fn eigenvalue(g: &FdGraph, n: usize, j: usize) -> f64 {
    let mut hi = 1.0;
    while count_below(g, n, hi) < j {
        hi *= 2.0;
    }
    let mut lo = -1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(g, n, mid) >= j {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// First `count` eigenvalues, Richardson-extrapolated from `n` and `2n`
/// intervals per edge: `(4 lambda_2n - lambda_n) / 3`.
pub fn richardson_eigenvalues(g: &FdGraph, n: usize, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|j| {
            let coarse = eigenvalue(g, n, j);
            let fine = eigenvalue(g, 2 * n, j);
            (4.0 * fine - coarse) / 3.0
        })
        .collect()
}

/// Positive square roots of the extrapolated eigenvalues, skipping the
/// `zero_modes` lowest ones.
pub fn positive_roots(g: &FdGraph, n: usize, zero_modes: usize, count: usize) -> Vec<f64> {
    richardson_eigenvalues(g, n, zero_modes + count)
        .into_iter()
        .skip(zero_modes)
        .map(f64::sqrt)
        .collect()
}
