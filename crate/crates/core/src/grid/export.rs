use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt::Write as _;

use super::{GridDomain, GridField};
use crate::error::{Error, Result};

/// Comma-separated rows, top row (largest `y`) first, shortest
/// round-trip decimal for every value.
pub fn field_to_csv(u: &GridField) -> String {
    let d = u.domain();
    let mut s = String::new();
    for j in (0..d.ny()).rev() {
        for i in 0..d.nx() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{}", u.get(i, j));
        }
        s.push('\n');
    }
    s
}

pub fn parse_field_csv(domain: &Arc<GridDomain>, text: &str) -> Result<GridField> {
    let (nx, ny) = (domain.nx(), domain.ny());
    let mut values = alloc::vec![0.0; nx * ny];
    let mut r = 0;
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if r == ny {
            return Err(Error::Parse {
                line: k + 1,
                message: format!("more than {ny} rows"),
            });
        }
        let j = ny - 1 - r;
        let mut count = 0;
        for (i, cell) in line.split(',').enumerate() {
            if i >= nx {
                count = i + 1;
                continue;
            }
            values[j * nx + i] = cell.trim().parse().map_err(|_| Error::Parse {
                line: k + 1,
                message: format!("bad number `{}`", cell.trim()),
            })?;
            count = i + 1;
        }
        if count != nx {
            return Err(Error::Parse {
                line: k + 1,
                message: format!("expected {nx} values, found {count}"),
            });
        }
        r += 1;
    }
    if r != ny {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: format!("expected {ny} rows, found {r}"),
        });
    }
    GridField::from_values(domain, values)
}

/// Binary P5 greymap. Interior values map affinely from `[min, max]` to
/// `[0, 255]` (a constant field maps to 255); exterior cells are 0. The
/// header comment records `λ` and `γ`.
pub fn encode_pgm(u: &GridField, lambda: f64, gamma: f64) -> Vec<u8> {
    let d = u.domain();
    let (lo, hi) = d
        .interior()
        .iter()
        .map(|&p| u.values()[p])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let mut header = String::new();
    let _ = write!(
        header,
        "P5\n# lambda={lambda} gamma={gamma}\n{} {}\n255\n",
        d.nx(),
        d.ny()
    );
    let mut out = header.into_bytes();
    out.reserve(d.len());
    for j in (0..d.ny()).rev() {
        for i in 0..d.nx() {
            let byte = if !d.is_interior(i, j) {
                0
            } else if hi > lo {
                libm::round(255.0 * (u.get(i, j) - lo) / (hi - lo)) as u8
            } else {
                255
            };
            out.push(byte);
        }
    }
    out
}
