//! Cell-centered grid on `[0, Lx] × [0, Ly]` and the homogeneous-Neumann
//! finite-difference operators built on it.
//!
//! Cell `(i, j)` has center `((i + ½)hx, (j + ½)hy)` and is stored at
//! `j * nx + i`. Boundary faces carry zero normal difference, which is the
//! ghost-cell mirror reflection of the Neumann condition; every operator
//! below is written in face-flux form so interior fluxes cancel pairwise
//! under [`integrate`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_param, Error, Result};
use crate::math;

/// Uniform rectangular grid. `nx, ny ≥ 4`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    hx: f64,
    hy: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        check_param("nx", nx as f64, nx >= 4, "an integer >= 4")?;
        check_param("ny", ny as f64, ny >= 4, "an integer >= 4")?;
        check_param("lx", lx, lx > 0.0 && lx.is_finite(), "a finite length > 0")?;
        check_param("ly", ly, ly > 0.0 && ly.is_finite(), "a finite length > 0")?;
        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            hx: lx / nx as f64,
            hy: ly / ny as f64,
        })
    }

    /// `n × n` grid on the unit square.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    /// Number of cells.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    /// `|Ω| = Lx·Ly`.
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn min_spacing(&self) -> f64 {
        self.hx.min(self.hy)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// x coordinate of the center of column `i`.
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.hx
    }

    /// y coordinate of the center of row `j`.
    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.hy
    }

    /// First nonzero eigenvalue of `−Δ` with Neumann conditions on the
    /// rectangle, `π² min(1/Lx², 1/Ly²)`.
    pub fn lambda1(&self) -> f64 {
        let l = self.lx.max(self.ly);
        math::PI * math::PI / (l * l)
    }

    /// Samples `f(x, y)` at cell centers.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Field2D {
        let mut values = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            let y = self.y(j);
            for i in 0..self.nx {
                values.push(f(self.x(i), y));
            }
        }
        Field2D { grid: *self, values }
    }

    pub fn constant(&self, c: f64) -> Field2D {
        Field2D {
            grid: *self,
            values: vec![c; self.len()],
        }
    }

    pub fn zeros(&self) -> Field2D {
        self.constant(0.0)
    }

    /// Wraps raw row-major values.
    pub fn field(&self, values: Vec<f64>) -> Result<Field2D> {
        if values.len() != self.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Field2D { grid: *self, values })
    }
}

/// Scalar field sampled at the cell centers of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field2D {
    grid: Grid,
    values: Vec<f64>,
}

impl Field2D {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field2D {
        Field2D {
            grid: self.grid,
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Field2D, f: impl Fn(f64, f64) -> f64) -> Field2D {
        debug_assert_eq!(self.grid, other.grid);
        Field2D {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Field2D {
        self.map(|x| c * x)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    pub fn same_grid(&self, other: &Field2D) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Mirror image across the vertical line `x = Lx/2`.
    pub fn reflect_x(&self) -> Field2D {
        let g = self.grid;
        let mut out = self.clone();
        for j in 0..g.ny {
            for i in 0..g.nx {
                out.values[g.idx(i, j)] = self.values[g.idx(g.nx - 1 - i, j)];
            }
        }
        out
    }

    /// Mirror image across the horizontal line `y = Ly/2`.
    pub fn reflect_y(&self) -> Field2D {
        let g = self.grid;
        let mut out = self.clone();
        for j in 0..g.ny {
            for i in 0..g.nx {
                out.values[g.idx(i, j)] = self.values[g.idx(i, g.ny - 1 - j)];
            }
        }
        out
    }
}

/// Face differences `(f[i+1] − f[i]) / hx` on the `(nx − 1) × ny` interior
/// x-faces, face `(i, j)` sitting between cells `(i, j)` and `(i + 1, j)`.
pub fn face_diff_x(f: &Field2D) -> Vec<f64> {
    let g = f.grid;
    let mut out = Vec::with_capacity((g.nx - 1) * g.ny);
    let inv = 1.0 / g.hx;
    for row in f.values.chunks_exact(g.nx) {
        out.extend(row.windows(2).map(|w| (w[1] - w[0]) * inv));
    }
    out
}

/// Face differences `(f[j+1] − f[j]) / hy` on the `nx × (ny − 1)` interior
/// y-faces, face `(i, j)` sitting between cells `(i, j)` and `(i, j + 1)`.
pub fn face_diff_y(f: &Field2D) -> Vec<f64> {
    let g = f.grid;
    let inv = 1.0 / g.hy;
    let v = &f.values;
    let mut out = Vec::with_capacity(g.nx * (g.ny - 1));
    for j in 0..g.ny - 1 {
        let (a, b) = (&v[j * g.nx..(j + 1) * g.nx], &v[(j + 1) * g.nx..(j + 2) * g.nx]);
        out.extend(a.iter().zip(b).map(|(lo, hi)| (hi - lo) * inv));
    }
    out
}

/// Five-point Neumann Laplacian.
pub fn laplacian_neumann(f: &Field2D) -> Field2D {
    let mut out = f.grid.zeros();
    add_laplacian(f, 1.0, &mut out.values);
    out
}

/// `out += c·Δ_h f`, accumulated face by face.
pub(crate) fn add_laplacian(f: &Field2D, c: f64, out: &mut [f64]) {
    let g = f.grid;
    let v = &f.values;
    let cx = c / (g.hx * g.hx);
    let cy = c / (g.hy * g.hy);
    for j in 0..g.ny {
        let row = j * g.nx;
        for i in 0..g.nx - 1 {
            let k = row + i;
            let flux = cx * (v[k + 1] - v[k]);
            out[k] += flux;
            out[k + 1] -= flux;
        }
    }
    for j in 0..g.ny - 1 {
        let row = j * g.nx;
        for i in 0..g.nx {
            let k = row + i;
            let flux = cy * (v[k + g.nx] - v[k]);
            out[k] += flux;
            out[k + g.nx] -= flux;
        }
    }
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a > 0.0 {
        a.min(b)
    } else {
        a.max(b)
    }
}

/// Upwind face value with a minmod-limited linear reconstruction in the
/// upwind cell; `at(i)` reads cell `i` of a line of `n` cells, face `i`
/// sits between cells `i` and `i + 1`. Mirror ghosts give zero slope at
/// the ends. Face values lie in `[u/2, 3u/2]` of the upwind cell, so a
/// sweep with Courant number `≤ 1/2` keeps `u ≥ 0`.
#[inline]
fn muscl_face(at: impl Fn(usize) -> f64, n: usize, i: usize, a: f64) -> f64 {
    let (l, r) = (at(i), at(i + 1));
    if a >= 0.0 {
        let ll = if i == 0 { l } else { at(i - 1) };
        l + 0.5 * minmod(l - ll, r - l)
    } else {
        let rr = if i + 2 == n { r } else { at(i + 2) };
        r - 0.5 * minmod(r - l, rr - r)
    }
}

/// Upwind `∇·(u a)` along x for face velocities `vel_x` (layout of
/// [`face_diff_x`]), accumulated into `out`.
pub(crate) fn upwind_divergence_x(u: &Field2D, vel_x: &[f64], out: &mut [f64]) {
    let g = u.grid;
    let inv = 1.0 / g.hx;
    for j in 0..g.ny {
        let row = &u.values[j * g.nx..(j + 1) * g.nx];
        let frow = j * (g.nx - 1);
        for i in 0..g.nx - 1 {
            let a = vel_x[frow + i];
            let flux = muscl_face(|c| row[c], g.nx, i, a) * a * inv;
            out[j * g.nx + i] += flux;
            out[j * g.nx + i + 1] -= flux;
        }
    }
}

/// y counterpart of [`upwind_divergence_x`].
pub(crate) fn upwind_divergence_y(u: &Field2D, vel_y: &[f64], out: &mut [f64]) {
    let g = u.grid;
    let inv = 1.0 / g.hy;
    let v = &u.values;
    for j in 0..g.ny - 1 {
        for i in 0..g.nx {
            let a = vel_y[j * g.nx + i];
            let flux = muscl_face(|c| v[c * g.nx + i], g.ny, j, a) * a * inv;
            out[j * g.nx + i] += flux;
            out[(j + 1) * g.nx + i] -= flux;
        }
    }
}

/// Conservative `∇·(u∇v)` with limited upwind face values of `u`; boundary faces
/// carry no flux. The caller applies `−χ`.
pub fn chemotactic_divergence(u: &Field2D, v: &Field2D) -> Field2D {
    debug_assert_eq!(u.grid, v.grid);
    let mut out = u.grid.zeros();
    upwind_divergence_x(u, &face_diff_x(v), &mut out.values);
    upwind_divergence_y(u, &face_diff_y(v), &mut out.values);
    out
}

/// Midpoint quadrature `Σ f_ij hx hy`.
pub fn integrate(f: &Field2D) -> f64 {
    f.values.iter().sum::<f64>() * f.grid.cell_area()
}

/// `L^p` norm through [`integrate`]; `p = ∞` gives `max |f|`.
pub fn norm(f: &Field2D, p: f64) -> f64 {
    debug_assert!(p >= 1.0);
    if p.is_infinite() {
        return f.max_abs();
    }
    lp_of(f.values.iter().map(|x| x.abs()), p, f.grid.cell_area())
}

fn lp_of(values: impl Iterator<Item = f64>, p: f64, cell_area: f64) -> f64 {
    if p == 1.0 {
        values.sum::<f64>() * cell_area
    } else if p == 2.0 {
        math::sqrt(values.map(|x| x * x).sum::<f64>() * cell_area)
    } else {
        math::powf(values.map(|x| math::powf(x, p)).sum::<f64>() * cell_area, 1.0 / p)
    }
}

/// Squared gradient magnitude per cell: the mean of the squared differences
/// on the two x-faces plus the mean on the two y-faces, boundary faces
/// contributing zero.
pub fn grad_magnitude_sq(f: &Field2D) -> Field2D {
    let g = f.grid;
    let dx = face_diff_x(f);
    let dy = face_diff_y(f);
    let mut out = g.zeros();
    for j in 0..g.ny {
        for i in 0..g.nx - 1 {
            let d = dx[j * (g.nx - 1) + i];
            let d2 = 0.5 * d * d;
            out.values[g.idx(i, j)] += d2;
            out.values[g.idx(i + 1, j)] += d2;
        }
    }
    for j in 0..g.ny - 1 {
        for i in 0..g.nx {
            let d = dy[j * g.nx + i];
            let d2 = 0.5 * d * d;
            out.values[g.idx(i, j)] += d2;
            out.values[g.idx(i, j + 1)] += d2;
        }
    }
    out
}

/// `L^q` norm of the cell gradient magnitude.
pub fn grad_norm(f: &Field2D, q: f64) -> f64 {
    let g2 = grad_magnitude_sq(f);
    if q.is_infinite() {
        return math::sqrt(g2.max());
    }
    lp_of(g2.values.iter().map(|&x| math::sqrt(x)), q, f.grid.cell_area())
}

/// Face inner product `∫∇a·∇b ≈ Σ_faces (Da)(Db) hx hy`.
pub fn grad_dot(a: &Field2D, b: &Field2D) -> f64 {
    let sx: f64 = face_diff_x(a)
        .iter()
        .zip(face_diff_x(b))
        .map(|(p, q)| p * q)
        .sum();
    let sy: f64 = face_diff_y(a)
        .iter()
        .zip(face_diff_y(b))
        .map(|(p, q)| p * q)
        .sum();
    (sx + sy) * a.grid.cell_area()
}
