//! Compressed sparse rows and preconditioned conjugate gradients.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    /// Builds from per-row `(col, value)` lists; duplicate columns are summed.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        debug_assert_eq!(rows.len(), n);
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in r {
                if last == Some(c) {
                    *val.last_mut().unwrap() += v;
                } else {
                    col.push(c);
                    val.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col.len());
        }
        Self { n, row_ptr, col, val }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.val[k] * x[self.col[k]];
            }
            *yi = acc;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col[r.clone()].binary_search(&j) {
            Ok(p) => self.val[r.start + p],
            Err(_) => 0.0,
        }
    }

    /// Largest `|A_ij - A_ji|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                worst = worst.max((self.val[k] - self.get(self.col[k], i)).abs());
            }
        }
        worst
    }
}

/// Block-diagonal preconditioner whose blocks are periodic tridiagonal
/// matrices (one per grid ring) or scalars.
#[derive(Debug, Clone)]
pub struct RingPreconditioner {
    blocks: Vec<Block>,
}

#[derive(Debug, Clone)]
struct Block {
    range: Range<usize>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    /// Sherman-Morrison data for the periodic corners: `top / gamma`, the
    /// solution `q` of `T' q = u`, and `1 + v.q`.
    corner: Option<(f64, Vec<f64>, f64)>,
}

impl RingPreconditioner {
    /// `blocks` partition `0..a.n` into contiguous index ranges.
    pub fn new(a: &Csr, blocks: &[Range<usize>]) -> Self {
        let blocks = blocks
            .iter()
            .map(|r| {
                let m = r.len();
                let at = |i: usize, j: usize| a.get(r.start + i, r.start + j);
                let mut diag: Vec<f64> = (0..m).map(|i| at(i, i)).collect();
                if m < 3 {
                    return Block {
                        range: r.clone(),
                        lower: vec![0.0; m],
                        diag,
                        upper: vec![0.0; m],
                        corner: None,
                    };
                }
                let lower: Vec<f64> = (0..m).map(|i| if i > 0 { at(i, i - 1) } else { 0.0 }).collect();
                let upper: Vec<f64> = (0..m).map(|i| if i + 1 < m { at(i, i + 1) } else { 0.0 }).collect();
                let top = at(0, m - 1);
                let bottom = at(m - 1, 0);
                let corner = if top != 0.0 || bottom != 0.0 {
                    // A = T' + u v^T, u = (gamma, 0.., bottom), v = (1, 0.., top/gamma)
                    let gamma = -diag[0];
                    diag[0] -= gamma;
                    diag[m - 1] -= top * bottom / gamma;
                    let mut u = vec![0.0; m];
                    u[0] = gamma;
                    u[m - 1] = bottom;
                    let q = thomas(&lower, &diag, &upper, &u);
                    let ratio = top / gamma;
                    let denom = 1.0 + q[0] + ratio * q[m - 1];
                    Some((ratio, q, denom))
                } else {
                    None
                };
                Block {
                    range: r.clone(),
                    lower,
                    diag,
                    upper,
                    corner,
                }
            })
            .collect();
        Self { blocks }
    }

    /// `z = M^{-1} r`
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        for b in &self.blocks {
            let rr = &r[b.range.clone()];
            let m = rr.len();
            if m < 3 {
                for i in 0..m {
                    z[b.range.start + i] = rr[i] / b.diag[i];
                }
                continue;
            }
            let y = thomas(&b.lower, &b.diag, &b.upper, rr);
            match &b.corner {
                None => z[b.range.clone()].copy_from_slice(&y),
                Some((ratio, q, denom)) => {
                    let f = (y[0] + ratio * y[m - 1]) / denom;
                    for i in 0..m {
                        z[b.range.start + i] = y[i] - f * q[i];
                    }
                }
            }
        }
    }
}

/// Solves a tridiagonal system (no pivoting; the blocks are SPD).
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..m {
        let den = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / den;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / den;
    }
    let mut x = d;
    for i in (0..m - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// Outcome of a converged solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Iteration cap `50 sqrt(N) ln(1/tol)`.
pub fn iteration_cap(n: usize, tol: f64) -> usize {
    let cap = 50.0 * (n as f64).sqrt() * (1.0 / tol).ln().max(1.0);
    (cap.ceil() as usize).max(100)
}

/// Preconditioned conjugate gradients for SPD `a`, stopping at
/// `||b - a x|| <= tol ||b||`. `x` holds the initial guess on entry.
pub fn pcg(a: &Csr, b: &[f64], x: &mut [f64], pre: &RingPreconditioner, tol: f64) -> Result<CgStats> {
    let n = a.n;
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut rel = dot(&r, &r).sqrt() / bnorm;
    if rel <= tol {
        return Ok(CgStats {
            iterations: 0,
            relative_residual: rel,
        });
    }
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let cap = iteration_cap(n, tol);
    for it in 1..=cap {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverDiverged {
                iterations: it,
                residual: rel,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = dot(&r, &r).sqrt() / bnorm;
        if rel <= tol {
            return Ok(CgStats {
                iterations: it,
                relative_residual: rel,
            });
        }
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDiverged {
        iterations: cap,
        residual: rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periodic_laplacian(m: usize, shift: f64) -> Csr {
        let rows = (0..m)
            .map(|i| {
                vec![
                    (i, 2.0 + shift),
                    ((i + 1) % m, -1.0),
                    ((i + m - 1) % m, -1.0),
                ]
            })
            .collect();
        Csr::from_rows(m, rows)
    }

    #[test]
    fn cyclic_block_is_exact_inverse() {
        let a = periodic_laplacian(16, 0.3);
        let pre = RingPreconditioner::new(&a, &[0..16]);
        let b: Vec<f64> = (0..16).map(|i| (i as f64 * 0.7).sin() + 0.1).collect();
        let mut z = vec![0.0; 16];
        pre.apply(&b, &mut z);
        let mut az = vec![0.0; 16];
        a.matvec(&z, &mut az);
        for (x, y) in az.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn pcg_solves_block_coupled_system() {
        // two coupled rings
        let m = 16;
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
        for ring in 0..2 {
            for j in 0..m {
                let i = ring * m + j;
                let other = (1 - ring) * m + j;
                rows.push(vec![
                    (i, 3.0),
                    (ring * m + (j + 1) % m, -1.0),
                    (ring * m + (j + m - 1) % m, -1.0),
                    (other, -0.5),
                ]);
            }
        }
        let a = Csr::from_rows(2 * m, rows);
        assert_eq!(a.asymmetry(), 0.0);
        let pre = RingPreconditioner::new(&a, &[0..m, m..2 * m]);
        let b: Vec<f64> = (0..2 * m).map(|i| i as f64).collect();
        let mut x = vec![0.0; 2 * m];
        let stats = pcg(&a, &b, &mut x, &pre, 1e-12).unwrap();
        assert!(stats.iterations < 2 * m);
        let mut ax = vec![0.0; 2 * m];
        a.matvec(&x, &mut ax);
        for (p, q) in ax.iter().zip(&b) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = periodic_laplacian(16, 1.0);
        let pre = RingPreconditioner::new(&a, &[0..16]);
        let mut x = vec![1.0; 16];
        pcg(&a, &vec![0.0; 16], &mut x, &pre, 1e-10).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }
}
