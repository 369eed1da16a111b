//! Exceptional-point search in a two-parameter plane.

use num_complex::Complex64;

use super::FloquetModel;
use crate::error::{Error, Result};
use crate::units;

/// Rectangular search box and stopping tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpSearch {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    /// Stop once the two eigenvalues are this close.
    pub tol_energy: f64,
    /// Stop once the refined box is this small along both axes.
    pub tol_param: f64,
}

impl EpSearch {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        Self {
            x_range,
            y_range,
            tol_energy: 1e-8,
            tol_param: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpCandidate {
    pub x: f64,
    pub y: f64,
    /// `|E_a - E_b|` at `(x, y)`.
    pub separation: f64,
    /// Log-log slope of the separation against distance from `(x, y)`.
    pub exponent: f64,
    /// Separation grows along ±x and ±y.
    pub local_minimum: bool,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpOutcome {
    Found(EpCandidate),
    /// The coarse minimum sits on the box boundary.
    OutsideBox(EpCandidate),
    /// A separation minimum without the square-root signature.
    AvoidedCrossing(EpCandidate),
}

impl EpOutcome {
    pub fn candidate(&self) -> &EpCandidate {
        match self {
            EpOutcome::Found(c) | EpOutcome::OutsideBox(c) | EpOutcome::AvoidedCrossing(c) => c,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            EpOutcome::Found(_) => "found",
            EpOutcome::OutsideBox(_) => "outside-box",
            EpOutcome::AvoidedCrossing(_) => "avoided-crossing",
        }
    }
}

const GRID: usize = 5;
const MAX_LEVELS: usize = 80;
const PROBE_OFFSETS: [f64; 5] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];

/// Minimises `|E_a - E_b|` over the box by nested 5×5 grid refinement, then
/// checks the square-root signature along both axes.
///
/// `pair(x, y)` returns the two eigenvalues expected to coalesce.
pub fn locate_ep<F>(search: &EpSearch, mut pair: F) -> Result<EpOutcome>
where
    F: FnMut(f64, f64) -> Result<(Complex64, Complex64)>,
{
    let (x0, x1) = search.x_range;
    let (y0, y1) = search.y_range;
    if !(x0 < x1 && y0 < y1) {
        return Err(Error::InvalidInput("search box must have positive extent".into()));
    }
    let mut evaluations = 0usize;
    let mut sep = |x: f64, y: f64| -> Result<f64> {
        evaluations += 1;
        let (a, b) = pair(x, y)?;
        Ok((a - b).norm())
    };

    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (x0, x1, y0, y1);
    let mut best = (0.5 * (x0 + x1), 0.5 * (y0 + y1), f64::INFINITY);
    for level in 0..MAX_LEVELS {
        let hx = (hi_x - lo_x) / (GRID - 1) as f64;
        let hy = (hi_y - lo_y) / (GRID - 1) as f64;
        let mut best_ij = (0, 0);
        let mut level_best = f64::INFINITY;
        for i in 0..GRID {
            for j in 0..GRID {
                let (x, y) = (lo_x + i as f64 * hx, lo_y + j as f64 * hy);
                let s = sep(x, y)?;
                if s < level_best {
                    level_best = s;
                    best_ij = (i, j);
                }
            }
        }
        let (bx, by) = (lo_x + best_ij.0 as f64 * hx, lo_y + best_ij.1 as f64 * hy);
        if level_best <= best.2 {
            best = (bx, by, level_best);
        }
        if level == 0 {
            let edge = |k: usize| k == 0 || k == GRID - 1;
            if edge(best_ij.0) || edge(best_ij.1) {
                return Ok(EpOutcome::OutsideBox(EpCandidate {
                    x: bx,
                    y: by,
                    separation: level_best,
                    exponent: f64::NAN,
                    local_minimum: false,
                    evaluations,
                }));
            }
        }
        if best.2 < search.tol_energy || (hi_x - lo_x).max(hi_y - lo_y) < search.tol_param {
            break;
        }
        lo_x = best.0 - hx;
        hi_x = best.0 + hx;
        lo_y = best.1 - hy;
        hi_y = best.1 + hy;
    }

    let (cx, cy, s0) = best;
    let (wx, wy) = (x1 - x0, y1 - y0);
    let mut slopes = Vec::with_capacity(2);
    for (ux, uy) in [(wx, 0.0), (0.0, wy)] {
        let pts: Vec<(f64, f64)> = PROBE_OFFSETS
            .iter()
            .map(|&d| Ok((d.ln(), sep(cx + d * ux, cy + d * uy)?.max(f64::MIN_POSITIVE).ln())))
            .collect::<Result<_>>()?;
        slopes.push(fit_slope(&pts));
    }
    let exponent = 0.5 * (slopes[0] + slopes[1]);
    let d = PROBE_OFFSETS[PROBE_OFFSETS.len() - 1];
    let mut local_minimum = true;
    for (ux, uy) in [(wx, 0.0), (-wx, 0.0), (0.0, wy), (0.0, -wy)] {
        if sep(cx + d * ux, cy + d * uy)? <= s0 {
            local_minimum = false;
        }
    }
    let candidate = EpCandidate {
        x: cx,
        y: cy,
        separation: s0,
        exponent,
        local_minimum,
        evaluations,
    };
    if (exponent - 0.5).abs() <= 0.1 && local_minimum {
        Ok(EpOutcome::Found(candidate))
    } else {
        Ok(EpOutcome::AvoidedCrossing(candidate))
    }
}

/// Least-squares slope of `y` against `x`.
fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Quasienergies of the two dressed states carrying the most zero-photon
/// weight on levels `a` and `b`, at intensity `x · intensity_unit` (W/cm²)
/// and wavelength `y` (nm).
pub fn molecular_pair(
    model: &FloquetModel,
    n_photon: usize,
    levels: (usize, usize),
    intensity_unit: f64,
    x: f64,
    y: f64,
) -> Result<(Complex64, Complex64)> {
    let n = model.n_levels();
    for v in [levels.0, levels.1] {
        if v >= n {
            return Err(Error::IndexOutOfRange {
                what: "vibrational level",
                index: v,
                len: n,
            });
        }
    }
    let field = units::intensity_to_field((x * intensity_unit).max(0.0))?;
    let omega = units::wavelength_to_omega(y)?;
    let raw = model.operator(field, omega, n_photon)?.diagonalize()?;
    let weight = |j: usize| raw.level_weight(j, levels.0) + raw.level_weight(j, levels.1);
    let mut order: Vec<usize> = (0..raw.energies.len()).collect();
    order.sort_by(|&p, &q| weight(q).total_cmp(&weight(p)));
    Ok((raw.energies[order[0]], raw.energies[order[1]]))
}
