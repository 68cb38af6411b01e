//! Builds initial fields from presets.

use std::path::Path;

use anyhow::{bail, Context, Result};
use chemohapto_core::grid::integrate;
use chemohapto_core::{Field2D, Grid, InitialData};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Preset, RunConfig};
use crate::io;

/// `stream` separates the random streams of `u`, `v` and `w`.
pub fn build_field(grid: &Grid, preset: &Preset, seed: u64, stream: u64, base: &Path) -> Result<Field2D> {
    let (lx, ly) = (grid.lx(), grid.ly());
    let pi = std::f64::consts::PI;
    Ok(match preset {
        Preset::Homogeneous { value } => grid.constant(*value),
        Preset::Cosine {
            mean,
            amplitude,
            kx,
            ky,
        } => grid.sample(|x, y| {
            mean + amplitude * (*kx as f64 * pi * x / lx).cos() * (*ky as f64 * pi * y / ly).cos()
        }),
        Preset::Gaussian {
            bumps,
            background,
            mass,
        } => {
            let f = grid.sample(|x, y| {
                background
                    + bumps
                        .iter()
                        .map(|b| {
                            let r2 = (x - b.x).powi(2) + (y - b.y).powi(2);
                            b.amplitude * (-r2 / (2.0 * b.width * b.width)).exp()
                        })
                        .sum::<f64>()
            });
            match mass {
                Some(m) => {
                    let total = integrate(&f);
                    if total.is_nan() || total <= 0.0 {
                        bail!("gaussian preset has integral {total}; cannot rescale to mass {m}");
                    }
                    f.scale(m / total)
                }
                None => f,
            }
        }
        Preset::Random { mean, amplitude } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let values = (0..grid.len())
                .map(|_| mean + amplitude * rng.random_range(-1.0..=1.0))
                .collect();
            grid.field(values).expect("grid length")
        }
        Preset::File { path } => {
            let path = if path.is_relative() {
                base.join(path)
            } else {
                path.clone()
            };
            let f = io::read_field(&path)?;
            if f.grid().nx() != grid.nx() || f.grid().ny() != grid.ny() {
                bail!(
                    "{} is {}x{}, the configured grid is {}x{}",
                    path.display(),
                    f.grid().nx(),
                    f.grid().ny(),
                    grid.nx(),
                    grid.ny()
                );
            }
            grid.field(f.into_values()).expect("grid length")
        }
    })
}

/// Initial data of a configuration; `base` anchors relative file paths.
pub fn build_initial(cfg: &RunConfig, base: &Path) -> Result<InitialData> {
    let grid = cfg.grid.build()?;
    let seed = cfg.numerics.seed;
    let init = &cfg.initial;
    let u0 = build_field(&grid, &init.u, seed, 0, base)
        .context("initial.u")?
        .scale(init.mass_scale);
    let v0 = build_field(&grid, &init.v, seed, 1, base).context("initial.v")?;
    let w0 = build_field(&grid, &init.w, seed, 2, base).context("initial.w")?;
    InitialData::new(u0, v0, w0, init.a).map_err(|e| anyhow::anyhow!("initial: {e}"))
}
