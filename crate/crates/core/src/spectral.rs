//! Exact inverse of `σ − Δ_h` for the cell-centered Neumann Laplacian.
//!
//! The mirror-ghost Laplacian is diagonalized by the type-II cosine basis
//! `cos(πk(i + ½)/n)`, with eigenvalues `(4/h²) sin²(πk / 2n)`. Transforms
//! are dense separable matrix products, `O(nx·ny·(nx + ny))`.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{Field2D, Grid};
use crate::math;

/// Type-II cosine transform along one axis, split into even and odd
/// modes: `cos(πk(n−1−i+½)/n) = (−1)^k cos(πk(i+½)/n)` halves the work.
#[derive(Clone, Debug)]
struct Dct {
    n: usize,
    /// `fe[i][k'] = c(2k', i)` for `i < ⌈n/2⌉`
    fe: Vec<f64>,
    /// `fo[i][k'] = c(2k'+1, i)` for `i < ⌊n/2⌋`
    fo: Vec<f64>,
    /// `ie[k'][i] = w(2k') c(2k', i)`
    ie: Vec<f64>,
    /// `io[k'][i] = w(2k'+1) c(2k'+1, i)`
    io: Vec<f64>,
}

impl Dct {
    fn new(n: usize) -> Self {
        let (hi, lo) = (n.div_ceil(2), n / 2);
        let c = |k: usize, i: usize| math::cos(math::PI * k as f64 * (i as f64 + 0.5) / n as f64);
        let w = |k: usize| if k == 0 { 1.0 } else { 2.0 } / n as f64;
        let mut fe = vec![0.0; hi * hi];
        let mut ie = vec![0.0; hi * hi];
        for i in 0..hi {
            for k in 0..hi {
                fe[i * hi + k] = c(2 * k, i);
                ie[k * hi + i] = w(2 * k) * c(2 * k, i);
            }
        }
        let mut fo = vec![0.0; lo * lo];
        let mut io = vec![0.0; lo * lo];
        for i in 0..lo {
            for k in 0..lo {
                fo[i * lo + k] = c(2 * k + 1, i);
                io[k * lo + i] = w(2 * k + 1) * c(2 * k + 1, i);
            }
        }
        Self { n, fe, fo, ie, io }
    }

    /// `dst[k] = Σ_i src[i] cos(πk(i+½)/n)`; `buf` needs length `n`.
    fn forward(&self, src: &[f64], dst: &mut [f64], buf: &mut [f64]) {
        let (n, hi, lo) = (self.n, self.n.div_ceil(2), self.n / 2);
        let (even, odd) = buf[..n].split_at_mut(hi);
        even.fill(0.0);
        odd.fill(0.0);
        for i in 0..lo {
            let (a, b) = (src[i], src[n - 1 - i]);
            axpy(a + b, &self.fe[i * hi..(i + 1) * hi], even);
            axpy(a - b, &self.fo[i * lo..(i + 1) * lo], odd);
        }
        if hi > lo {
            axpy(src[lo], &self.fe[lo * hi..(lo + 1) * hi], even);
        }
        for k in 0..hi {
            dst[2 * k] = even[k];
        }
        for k in 0..lo {
            dst[2 * k + 1] = odd[k];
        }
    }

    /// Inverse of [`Dct::forward`].
    fn inverse(&self, src: &[f64], dst: &mut [f64], buf: &mut [f64]) {
        let (n, hi, lo) = (self.n, self.n.div_ceil(2), self.n / 2);
        let (even, odd) = buf[..n].split_at_mut(hi);
        even.fill(0.0);
        odd.fill(0.0);
        for k in 0..hi {
            axpy(src[2 * k], &self.ie[k * hi..(k + 1) * hi], even);
        }
        for k in 0..lo {
            axpy(src[2 * k + 1], &self.io[k * lo..(k + 1) * lo], odd);
        }
        for i in 0..lo {
            dst[i] = even[i] + odd[i];
            dst[n - 1 - i] = even[i] - odd[i];
        }
        if hi > lo {
            dst[lo] = even[lo];
        }
    }

    fn rows(&self, src: &[f64], dst: &mut [f64], buf: &mut [f64], forward: bool) {
        for (s, d) in src.chunks_exact(self.n).zip(dst.chunks_exact_mut(self.n)) {
            if forward {
                self.forward(s, d, buf);
            } else {
                self.inverse(s, d, buf);
            }
        }
    }
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn eigenvalues(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let s = math::sin(math::PI * k as f64 / (2.0 * n as f64));
            4.0 * s * s / (h * h)
        })
        .collect()
}

fn transpose(data: &[f64], rows: usize, cols: usize, out: &mut [f64]) {
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
}

#[derive(Clone, Debug)]
pub struct CosineSolver {
    grid: Grid,
    dct_x: Dct,
    dct_y: Dct,
    eig_x: Vec<f64>,
    eig_y: Vec<f64>,
}

impl CosineSolver {
    pub fn new(grid: &Grid) -> Self {
        Self {
            grid: *grid,
            dct_x: Dct::new(grid.nx()),
            dct_y: Dct::new(grid.ny()),
            eig_x: eigenvalues(grid.nx(), grid.hx()),
            eig_y: eigenvalues(grid.ny(), grid.hy()),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Eigenvalue of `−Δ_h` for mode `(k, l)`.
    pub fn eigenvalue(&self, k: usize, l: usize) -> f64 {
        self.eig_x[k] + self.eig_y[l]
    }

    /// Solves `(σ − Δ_h) x = b`. Requires `σ > 0`.
    pub fn solve(&self, sigma: f64, b: &Field2D) -> Field2D {
        debug_assert!(sigma > 0.0);
        debug_assert_eq!(b.grid(), &self.grid);
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut a = vec![0.0; nx * ny];
        let mut t = vec![0.0; nx * ny];
        let mut buf = vec![0.0; nx.max(ny)];

        self.dct_x.rows(b.values(), &mut a, &mut buf, true);
        transpose(&a, ny, nx, &mut t);
        self.dct_y.rows(&t, &mut a, &mut buf, true);
        // a is now indexed [k][l]
        for (k, row) in a.chunks_exact_mut(ny).enumerate() {
            let ex = sigma + self.eig_x[k];
            for (c, ey) in row.iter_mut().zip(&self.eig_y) {
                *c /= ex + ey;
            }
        }
        self.dct_y.rows(&a, &mut t, &mut buf, false);
        transpose(&t, nx, ny, &mut a);
        self.dct_x.rows(&a, &mut t, &mut buf, false);
        self.grid.field(t).expect("transform output has grid length")
    }
}
