use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::error::{Error, Result};

/// A masked uniform grid over `(−1,1)²`. Cell `(i, j)` sits at
/// `(−1 + i·h, −1 + j·h)` and is stored at index `j·nx + i`. The outermost
/// ring is always exterior (Dirichlet).
#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    nx: usize,
    ny: usize,
    h: f64,
    mask: Vec<bool>,
    interior: Vec<usize>,
}

/// Spacing of an `n`-point grid spanning `[−1, 1]`.
pub fn square_spacing(n: usize) -> f64 {
    2.0 / (n as f64 - 1.0)
}

impl GridDomain {
    /// `mask` is indexed `j·nx + i`.
    pub fn new(nx: usize, ny: usize, h: f64, mask: Vec<bool>) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::invalid("grid needs at least 3 points per side"));
        }
        if mask.len() != nx * ny {
            return Err(Error::DimensionMismatch {
                expected: nx * ny,
                found: mask.len(),
            });
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::invalid("grid spacing must be positive"));
        }
        for j in 0..ny {
            for i in 0..nx {
                let edge = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
                if edge && mask[j * nx + i] {
                    return Err(Error::invalid("boundary cells must be exterior"));
                }
            }
        }
        let interior: Vec<usize> = (0..nx * ny).filter(|&p| mask[p]).collect();
        if interior.is_empty() {
            return Err(Error::invalid("mask has no interior cell"));
        }
        Ok(GridDomain {
            nx,
            ny,
            h,
            mask,
            interior,
        })
    }

    fn from_predicate(n: usize, keep: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let mut mask = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let inside = i > 0 && j > 0 && i < n - 1 && j < n - 1;
                mask.push(inside && keep(i, j));
            }
        }
        GridDomain::new(n, n, square_spacing(n), mask)
    }

    /// `(−1,1)²` on an `n × n` grid.
    pub fn full_square(n: usize) -> Result<Self> {
        GridDomain::from_predicate(n, |_, _| true)
    }

    /// `(−1,1)² ∖ [0,1)×(−1,0]`: cells with `x ≥ 0` and `y ≤ 0` are removed.
    pub fn l_shape(n: usize) -> Result<Self> {
        GridDomain::from_predicate(n, |i, j| !(2 * i + 1 >= n && 2 * j <= n - 1))
    }

    /// Cells with `r_in < √(x²+y²) < r_out`.
    pub fn annulus(n: usize, r_in: f64, r_out: f64) -> Result<Self> {
        if !(0.0 <= r_in && r_in < r_out) {
            return Err(Error::invalid("annulus needs 0 <= r_in < r_out"));
        }
        let h = square_spacing(n);
        GridDomain::from_predicate(n, |i, j| {
            let x = -1.0 + i as f64 * h;
            let y = -1.0 + j as f64 * h;
            let r = libm::sqrt(x * x + y * y);
            r_in < r && r < r_out
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        self.mask[self.index(i, j)]
    }

    /// Flat indices of the interior cells, ascending.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }

    /// Physical coordinates of cell `(i, j)`.
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (-1.0 + i as f64 * self.h, -1.0 + j as f64 * self.h)
    }

    /// Text form: a header `nx ny h`, then `ny` lines of `nx` characters
    /// `0`/`1`, top row (largest `y`) first.
    pub fn to_ascii(&self) -> String {
        let mut s = String::with_capacity(self.len() + self.ny + 32);
        let _ = writeln!(s, "{} {} {}", self.nx, self.ny, self.h);
        for j in (0..self.ny).rev() {
            for i in 0..self.nx {
                s.push(if self.is_interior(i, j) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn parse_ascii(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty mask file".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let parse_err = |message: String| Error::Parse {
            line: hline,
            message,
        };
        if fields.len() != 3 {
            return Err(parse_err("header must be `nx ny h`".into()));
        }
        let nx: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(format!("bad nx `{}`", fields[0])))?;
        let ny: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(format!("bad ny `{}`", fields[1])))?;
        let h: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(format!("bad h `{}`", fields[2])))?;
        let rows: Vec<(usize, Vec<bool>)> = lines
            .map(|(line, l)| {
                let row = l
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(Error::Parse {
                            line,
                            message: format!("unexpected character `{other}`"),
                        }),
                    })
                    .collect::<Result<Vec<bool>>>()?;
                Ok((line, row))
            })
            .collect::<Result<_>>()?;
        GridDomain::from_rows(nx, ny, h, rows)
    }

    /// Comma-separated `0`/`1` rows, top row first; `h = 2/(nx−1)`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for j in (0..self.ny).rev() {
            for i in 0..self.nx {
                if i > 0 {
                    s.push(',');
                }
                s.push(if self.is_interior(i, j) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let rows: Vec<(usize, Vec<bool>)> = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(k, l)| {
                let row = l
                    .split(',')
                    .map(|c| match c.trim() {
                        "0" => Ok(false),
                        "1" => Ok(true),
                        other => Err(Error::Parse {
                            line: k + 1,
                            message: format!("expected 0 or 1, found `{other}`"),
                        }),
                    })
                    .collect::<Result<Vec<bool>>>()?;
                Ok((k + 1, row))
            })
            .collect::<Result<_>>()?;
        let ny = rows.len();
        let nx = rows.first().map_or(0, |(_, r)| r.len());
        GridDomain::from_rows(nx, ny, square_spacing(nx), rows)
    }

    fn from_rows(nx: usize, ny: usize, h: f64, rows: Vec<(usize, Vec<bool>)>) -> Result<Self> {
        if rows.len() != ny {
            return Err(Error::Parse {
                line: rows.last().map_or(1, |(l, _)| *l),
                message: format!("expected {ny} rows, found {}", rows.len()),
            });
        }
        let mut mask = alloc::vec![false; nx * ny];
        for (r, (line, row)) in rows.iter().enumerate() {
            if row.len() != nx {
                return Err(Error::Parse {
                    line: *line,
                    message: format!("expected {nx} cells, found {}", row.len()),
                });
            }
            let j = ny - 1 - r;
            mask[j * nx..(j + 1) * nx].copy_from_slice(row);
        }
        GridDomain::new(nx, ny, h, mask)
    }
}
