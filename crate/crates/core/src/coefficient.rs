//! Piecewise constant isotropic diffusion fields on the fine mesh.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::{Axis, Mesh};
use crate::scalar::Real;

/// Scalar diffusion value per fine element, with cached spectral bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient<S> {
    level: u32,
    values: Vec<S>,
    alpha: S,
    beta: S,
}

impl<S: Real> Coefficient<S> {
    /// Builds a field from per-element values; every value must be positive and finite.
    pub fn from_values(mesh: &Mesh, values: Vec<S>) -> Result<Self> {
        if values.len() != mesh.num_elements() {
            return Err(Error::Config(format!(
                "{} coefficient values for {} elements",
                values.len(),
                mesh.num_elements()
            )));
        }
        if let Some((e, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > S::zero() && v.is_finite()))
        {
            return Err(Error::Domain(format!(
                "coefficient value {v} on element {e} is not positive"
            )));
        }
        let (alpha, beta) = min_max(&values);
        Ok(Self {
            level: mesh.level(),
            values,
            alpha,
            beta,
        })
    }

    pub fn constant(mesh: &Mesh, value: S) -> Result<Self> {
        Self::from_values(mesh, vec![value; mesh.num_elements()])
    }

    /// Alternating `low`/`high` stripes of width `period / 2` across `axis`,
    /// starting with `low` at the origin.
    pub fn periodic_stripes(mesh: &Mesh, period: f64, low: S, high: S, axis: Axis) -> Result<Self> {
        let h = mesh.width_f64();
        let cells_per_stripe = period / 2.0 / h;
        if !(period > 0.0) || cells_per_stripe < 1.0 || cells_per_stripe.fract() != 0.0 {
            return Err(Error::Config(format!(
                "stripe period {period} is not resolved by cells of width {h}"
            )));
        }
        let cells_per_stripe = cells_per_stripe as usize;
        let values = (0..mesh.num_elements())
            .map(|e| {
                let [ix, iy] = mesh.cell(e);
                let i = match axis {
                    Axis::X => ix,
                    Axis::Y => iy,
                } as usize;
                if (i / cells_per_stripe) % 2 == 0 {
                    low
                } else {
                    high
                }
            })
            .collect();
        Self::from_values(mesh, values)
    }

    /// Samples `raster` at every element midpoint.
    pub fn from_raster(mesh: &Mesh, raster: &RasterField) -> Result<Self> {
        let h = mesh.width_f64();
        let [xmin, ymin, xmax, ymax] = raster.extent;
        let dx = (xmax - xmin) / raster.nx as f64;
        let dy = (ymax - ymin) / raster.ny as f64;
        let aligned = |v: f64| (v / h).fract() == 0.0;
        if !(aligned(dx) && aligned(dy) && aligned(xmin) && aligned(ymin)) {
            return Err(Error::Ingest {
                line: 2,
                msg: format!("raster cells {dx} x {dy} do not align with mesh cells of width {h}"),
            });
        }
        let mut values = Vec::with_capacity(mesh.num_elements());
        for e in 0..mesh.num_elements() {
            let [ix, iy] = mesh.cell(e);
            let (x, y) = ((ix as f64 + 0.5) * h, (iy as f64 + 0.5) * h);
            let v = raster.value_at(x, y).ok_or_else(|| Error::Ingest {
                line: 2,
                msg: format!("element midpoint ({x}, {y}) lies outside the raster extent"),
            })?;
            values.push(S::lit(v));
        }
        Self::from_values(mesh, values)
    }

    pub fn load_raster(mesh: &Mesh, path: impl AsRef<Path>) -> Result<Self> {
        let raster = RasterField::read(path)?;
        Self::from_raster(mesh, &raster)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    #[inline]
    pub fn value(&self, e: usize) -> S {
        self.values[e]
    }

    /// `(min, max)` over the elements of the domain.
    pub fn spectral_bounds(&self) -> (S, S) {
        (self.alpha, self.beta)
    }

    pub fn contrast(&self) -> S {
        self.beta / self.alpha
    }
}

fn min_max<S: Real>(values: &[S]) -> (S, S) {
    let mut lo = values[0];
    let mut hi = values[0];
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// A positive field on a Cartesian raster, rows stored bottom to top.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterField {
    pub nx: usize,
    pub ny: usize,
    /// `[xmin, ymin, xmax, ymax]`
    pub extent: [f64; 4],
    /// Row-major, row 0 at `ymin`.
    pub values: Vec<f64>,
}

impl RasterField {
    pub fn value_at(&self, x: f64, y: f64) -> Option<f64> {
        let [xmin, ymin, xmax, ymax] = self.extent;
        if x < xmin || x > xmax || y < ymin || y > ymax {
            return None;
        }
        let i = (((x - xmin) / (xmax - xmin) * self.nx as f64) as usize).min(self.nx - 1);
        let j = (((y - ymin) / (ymax - ymin) * self.ny as f64) as usize).min(self.ny - 1);
        Some(self.values[j * self.nx + i])
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Parses the ASCII raster format: `nx ny`, then `xmin ymin xmax ymax`,
    /// then `ny` rows of `nx` values with the top row (largest y) first.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (line, header) = lines.next().ok_or(Error::Ingest {
            line: 0,
            msg: "missing dimension header".into(),
        })?;
        let dims = parse_numbers::<usize>(line, header)?;
        let [nx, ny] = dims[..] else {
            return Err(Error::Ingest {
                line,
                msg: "expected `nx ny`".into(),
            });
        };
        if nx == 0 || ny == 0 {
            return Err(Error::Ingest {
                line,
                msg: "empty raster".into(),
            });
        }

        let (line, ext) = lines.next().ok_or(Error::Ingest {
            line,
            msg: "missing extent line".into(),
        })?;
        let ext = parse_numbers::<f64>(line, ext)?;
        let [xmin, ymin, xmax, ymax] = ext[..] else {
            return Err(Error::Ingest {
                line,
                msg: "expected `xmin ymin xmax ymax`".into(),
            });
        };
        if !(xmax > xmin && ymax > ymin) {
            return Err(Error::Ingest {
                line,
                msg: "degenerate extent".into(),
            });
        }

        let mut rows = Vec::with_capacity(ny);
        for (line, text) in lines.by_ref() {
            let row = parse_numbers::<f64>(line, text)?;
            if row.len() != nx {
                return Err(Error::Ingest {
                    line,
                    msg: format!("expected {nx} values, found {}", row.len()),
                });
            }
            if let Some(v) = row.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(Error::Ingest {
                    line,
                    msg: format!("value {v} is not positive"),
                });
            }
            rows.push(row);
            if rows.len() == ny {
                break;
            }
        }
        if rows.len() != ny {
            return Err(Error::Ingest {
                line: text.lines().count(),
                msg: format!("expected {ny} rows, found {}", rows.len()),
            });
        }
        if let Some((line, _)) = lines.next() {
            return Err(Error::Ingest {
                line,
                msg: "trailing data".into(),
            });
        }
        let values = rows.into_iter().rev().flatten().collect();
        Ok(Self {
            nx,
            ny,
            extent: [xmin, ymin, xmax, ymax],
            values,
        })
    }

    /// Inverse of [`RasterField::parse`]; values use the shortest round-trip decimal form.
    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        let [xmin, ymin, xmax, ymax] = self.extent;
        let _ = writeln!(out, "{} {}", self.nx, self.ny);
        let _ = writeln!(out, "{xmin} {ymin} {xmax} {ymax}");
        for j in (0..self.ny).rev() {
            let row = &self.values[j * self.nx..(j + 1) * self.nx];
            let row: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }
}

fn parse_numbers<T: std::str::FromStr>(line: usize, text: &str) -> Result<Vec<T>> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<T>().map_err(|_| Error::Ingest {
                line,
                msg: format!("cannot parse `{tok}`"),
            })
        })
        .collect()
}
