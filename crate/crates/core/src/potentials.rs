//! Electronic potential curves, transition dipole and reduced masses.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::units;

/// Cubic spline through tabulated `(R, V)` pairs with not-a-knot end
/// conditions. Outside the table the boundary values are held constant.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    r: Vec<f64>,
    v: Vec<f64>,
    /// Second derivatives at the nodes.
    m: Vec<f64>,
}

impl CurveTable {
    pub fn new(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if r.len() != v.len() {
            return Err(Error::LengthMismatch {
                expected: r.len(),
                found: v.len(),
            });
        }
        if r.len() < 4 {
            return Err(Error::InvalidInput(format!(
                "curve table needs at least 4 points, got {}",
                r.len()
            )));
        }
        if let Some(k) = r.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(format!(
                "abscissae not strictly increasing at row {}",
                k + 2
            )));
        }
        if r.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite value in curve table".into()));
        }
        let m = not_a_knot_second_derivatives(&r, &v);
        Ok(Self { r, v, m })
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.r
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.v
    }

    pub fn node_second_derivatives(&self) -> &[f64] {
        &self.m
    }

    fn segment(&self, x: f64) -> usize {
        let k = self.r.partition_point(|&r| r <= x);
        k.clamp(1, self.r.len() - 1) - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        let last = self.r.len() - 1;
        if x <= self.r[0] {
            return self.v[0];
        }
        if x >= self.r[last] {
            return self.v[last];
        }
        let i = self.segment(x);
        let h = self.r[i + 1] - self.r[i];
        let a = (self.r[i + 1] - x) / h;
        let b = (x - self.r[i]) / h;
        a * self.v[i]
            + b * self.v[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    /// Second derivative of the interpolant (zero outside the table).
    pub fn second_derivative(&self, x: f64) -> f64 {
        if x < self.r[0] || x > self.r[self.r.len() - 1] {
            return 0.0;
        }
        let i = self.segment(x);
        let h = self.r[i + 1] - self.r[i];
        let a = (self.r[i + 1] - x) / h;
        a * self.m[i] + (1.0 - a) * self.m[i + 1]
    }

    pub fn last_value(&self) -> f64 {
        self.v[self.v.len() - 1]
    }
}

fn not_a_knot_second_derivatives(r: &[f64], v: &[f64]) -> Vec<f64> {
    let n = r.len();
    let h: Vec<f64> = r.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..n - 1).map(|i| (v[i + 1] - v[i]) / h[i]).collect();
    // Unknowns M_1..M_{n-2}; M_0 and M_{n-1} eliminated via third-derivative continuity.
    let k = n - 2;
    let mut sub = vec![0.0; k];
    let mut diag = vec![0.0; k];
    let mut sup = vec![0.0; k];
    let mut rhs = vec![0.0; k];
    for j in 0..k {
        let i = j + 1;
        sub[j] = h[i - 1];
        diag[j] = 2.0 * (h[i - 1] + h[i]);
        sup[j] = h[i];
        rhs[j] = 6.0 * (d[i] - d[i - 1]);
    }
    let (h0, h1) = (h[0], h[1]);
    diag[0] += h0 + h0 * h0 / h1;
    sup[0] -= h0 * h0 / h1;
    let (ha, hb) = (h[n - 3], h[n - 2]);
    if k == 1 {
        diag[0] += hb + hb * hb / ha;
    } else {
        diag[k - 1] += hb + hb * hb / ha;
        sub[k - 1] -= hb * hb / ha;
    }
    // Thomas elimination.
    for j in 1..k {
        let w = sub[j] / diag[j - 1];
        diag[j] -= w * sup[j - 1];
        rhs[j] -= w * rhs[j - 1];
    }
    let mut inner = vec![0.0; k];
    inner[k - 1] = rhs[k - 1] / diag[k - 1];
    for j in (0..k - 1).rev() {
        inner[j] = (rhs[j] - sup[j] * inner[j + 1]) / diag[j];
    }
    let mut m = vec![0.0; n];
    m[1..n - 1].copy_from_slice(&inner);
    m[0] = m[1] + h0 / h1 * (m[1] - m[2]);
    m[n - 1] = m[n - 2] + hb / ha * (m[n - 2] - m[n - 3]);
    m
}

/// Reads a two-column whitespace-separated table; `#` starts a comment.
pub fn load_curve(path: impl AsRef<Path>) -> Result<CurveTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_curve(&text, path)
}

fn parse_curve(text: &str, path: &Path) -> Result<CurveTable> {
    let (r, mut cols) = parse_columns(text, path, 1)?;
    CurveTable::new(r, cols.remove(0)).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })
}

/// Splits a whitespace table into its sorted first column and `extra`
/// further columns.
fn parse_columns(text: &str, path: &Path, extra: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut r = Vec::new();
    let mut cols = vec![Vec::new(); extra];
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != extra + 1 {
            return Err(parse_err(
                idx + 1,
                format!("expected {} columns, found {}", extra + 1, fields.len()),
            ));
        }
        let x: f64 = fields[0]
            .parse()
            .map_err(|_| parse_err(idx + 1, format!("non-numeric abscissa `{}`", fields[0])))?;
        if let Some(&prev) = r.last() {
            if !(x > prev) {
                return Err(parse_err(
                    idx + 1,
                    format!("unsorted abscissa {x} after {prev}"),
                ));
            }
        }
        for (col, field) in cols.iter_mut().zip(&fields[1..]) {
            let y: f64 = field
                .parse()
                .map_err(|_| parse_err(idx + 1, format!("non-numeric ordinate `{field}`")))?;
            col.push(y);
        }
        r.push(x);
    }
    Ok((r, cols))
}

/// A function of the internuclear distance.
#[derive(Debug, Clone, PartialEq)]
pub enum Curve {
    Constant(f64),
    /// `asymptote + D[(1 - e^{-a(R-R_e)})² - 1]`
    Morse {
        depth: f64,
        r_e: f64,
        a: f64,
        asymptote: f64,
    },
    /// `asymptote + A e^{-βR} / R`
    ScreenedRepulsive {
        amplitude: f64,
        decay: f64,
        asymptote: f64,
    },
    /// `asymptote + A e^{-β(R-R_ref)}`
    ExponentialRepulsive {
        amplitude: f64,
        decay: f64,
        r_ref: f64,
        asymptote: f64,
    },
    /// `(R/2)(1 + (R/R_c)^8)^{-1/8}`: linear growth saturating beyond `R_c`.
    SaturatedLinear { r_c: f64 },
    Table(CurveTable),
}

impl Curve {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Curve::Constant(c) => *c,
            Curve::Morse {
                depth,
                r_e,
                a,
                asymptote,
            } => {
                let y = 1.0 - (-a * (r - r_e)).exp();
                asymptote + depth * (y * y - 1.0)
            }
            Curve::ScreenedRepulsive {
                amplitude,
                decay,
                asymptote,
            } => asymptote + amplitude * (-decay * r).exp() / r,
            Curve::ExponentialRepulsive {
                amplitude,
                decay,
                r_ref,
                asymptote,
            } => asymptote + amplitude * (-decay * (r - r_ref)).exp(),
            Curve::SaturatedLinear { r_c } => 0.5 * r * (1.0 + (r / r_c).powi(8)).powf(-0.125),
            Curve::Table(t) => t.eval(r),
        }
    }

    /// Value approached at large R.
    pub fn asymptote(&self) -> f64 {
        match self {
            Curve::Constant(c) => *c,
            Curve::Morse { asymptote, .. }
            | Curve::ScreenedRepulsive { asymptote, .. }
            | Curve::ExponentialRepulsive { asymptote, .. } => *asymptote,
            Curve::SaturatedLinear { r_c } => 0.5 * r_c,
            Curve::Table(t) => t.last_value(),
        }
    }

    pub fn sample(&self, grid: &RadialGrid) -> Vec<f64> {
        grid.points().map(|r| self.eval(r)).collect()
    }
}

/// Bound channel, repulsive channel, transition dipole and reduced mass.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSet {
    pub name: String,
    pub bound: Curve,
    pub repulsive: Curve,
    pub dipole: Curve,
    pub mass: f64,
}

/// Largest admissible rise of the repulsive channel, relative to its span.
pub const REPULSIVE_RISE_TOLERANCE: f64 = 1e-3;

/// Proton mass over two, in electron masses.
pub const H2PLUS_REDUCED_MASS: f64 = 918.076;
/// Half the ²³Na atomic mass, in electron masses.
pub const NA2_REDUCED_MASS: f64 = 20953.89;

/// Analytic stand-in for H₂⁺: Morse 1sσg, screened-Coulomb 2pσu,
/// transition dipole growing as R/2 and saturating near 10 a.u.
pub fn builtin_h2plus() -> PotentialSet {
    PotentialSet {
        name: "h2plus".into(),
        bound: Curve::Morse {
            depth: 0.102634,
            r_e: 2.0,
            a: 0.72,
            asymptote: 0.0,
        },
        repulsive: Curve::ScreenedRepulsive {
            amplitude: 2.0,
            decay: 0.553,
            asymptote: 0.0,
        },
        dipole: Curve::SaturatedLinear { r_c: 10.0 },
        mass: H2PLUS_REDUCED_MASS,
    }
}

const H2PLUS_EXACT_TABLE: &str = include_str!("../data/h2plus_exact.dat");

/// Exact Born–Oppenheimer 1sσg/2pσu curves and transition dipole of H₂⁺,
/// tabulated on 0.4 ≤ R ≤ 40 (see `data/generate_h2plus.py`).
///
/// The 2pσu curve carries its physical polarization well of about
/// 6·10⁻⁵ hartree near R ≈ 12.5; [`PotentialSet::validate`] tolerates rises
/// that small relative to the channel span.
pub fn builtin_h2plus_exact() -> PotentialSet {
    let (r, cols) = parse_columns(H2PLUS_EXACT_TABLE, Path::new("h2plus_exact.dat"), 3)
        .expect("embedded table parses");
    let table = |v: &Vec<f64>| Curve::Table(CurveTable::new(r.clone(), v.clone()).expect("valid table"));
    PotentialSet {
        name: "h2plus-exact".into(),
        bound: table(&cols[0]),
        repulsive: table(&cols[1]),
        dipole: table(&cols[2]),
        mass: H2PLUS_REDUCED_MASS,
    }
}

/// Na₂ triplet pair: shallow a³Σu⁺-like Morse well and a repulsive upper
/// curve converging to 3S+3P, placed 560 nm above the well minimum.
pub fn builtin_na2() -> PotentialSet {
    const DEPTH: f64 = 7.946e-4;
    const R_E: f64 = 9.81;
    const UPPER_ASYMPTOTE: f64 = 0.077258;
    let vertical_gap = units::WAVELENGTH_ENERGY_NM / 560.0;
    PotentialSet {
        name: "na2".into(),
        bound: Curve::Morse {
            depth: DEPTH,
            r_e: R_E,
            a: 0.354,
            asymptote: 0.0,
        },
        repulsive: Curve::ExponentialRepulsive {
            amplitude: vertical_gap - DEPTH - UPPER_ASYMPTOTE,
            decay: 0.5,
            r_ref: R_E,
            asymptote: UPPER_ASYMPTOTE,
        },
        dipole: Curve::Constant(3.0),
        mass: NA2_REDUCED_MASS,
    }
}

impl PotentialSet {
    /// Builds a set from three tabulated curve files.
    pub fn from_files(
        bound: impl AsRef<Path>,
        repulsive: impl AsRef<Path>,
        dipole: impl AsRef<Path>,
        mass: f64,
    ) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::Domain {
                quantity: "reduced mass",
                value: mass,
                reason: "must be positive",
            });
        }
        Ok(Self {
            name: "tabulated".into(),
            bound: Curve::Table(load_curve(bound)?),
            repulsive: Curve::Table(load_curve(repulsive)?),
            dipole: Curve::Table(load_curve(dipole)?),
            mass,
        })
    }

    pub fn bound_asymptote(&self) -> f64 {
        self.bound.asymptote()
    }

    pub fn repulsive_asymptote(&self) -> f64 {
        self.repulsive.asymptote()
    }

    /// Checks the structural requirements on `grid`: a well in the bound
    /// channel, a non-increasing repulsive channel, finite curves. The
    /// repulsive channel may rise by at most [`REPULSIVE_RISE_TOLERANCE`]
    /// of its span above its running minimum, which admits long-range
    /// polarization wells.
    pub fn validate(&self, grid: &RadialGrid) -> Result<()> {
        let e1 = self.bound.sample(grid);
        let e2 = self.repulsive.sample(grid);
        let mu = self.dipole.sample(grid);
        if e1.iter().chain(&e2).chain(&mu).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "potential set `{}` is not finite on the grid",
                self.name
            )));
        }
        let min1 = e1.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min1 < self.bound_asymptote()) {
            return Err(Error::InvalidInput(format!(
                "bound channel of `{}` has no well below its asymptote",
                self.name
            )));
        }
        let span = e2.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - e2.iter().cloned().fold(f64::INFINITY, f64::min);
        let tolerance = REPULSIVE_RISE_TOLERANCE * span;
        let mut floor = f64::INFINITY;
        for (i, &e) in e2.iter().enumerate() {
            if e - floor > tolerance {
                return Err(Error::InvalidInput(format!(
                    "repulsive channel of `{}` increases at R = {}",
                    self.name,
                    grid.point(i)
                )));
            }
            floor = floor.min(e);
        }
        Ok(())
    }

    /// Largest |potential| or |coupling| on the grid for a peak field `field`.
    pub fn energy_scale(&self, grid: &RadialGrid, field: f64) -> f64 {
        grid.points()
            .map(|r| {
                self.bound
                    .eval(r)
                    .abs()
                    .max(self.repulsive.eval(r).abs())
                    .max((self.dipole.eval(r) * field).abs())
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn table_of(f: impl Fn(f64) -> f64, xs: &[f64]) -> CurveTable {
        CurveTable::new(xs.to_vec(), xs.iter().map(|&x| f(x)).collect()).unwrap()
    }

    #[test]
    fn spline_hits_nodes() {
        let xs: Vec<f64> = (0..10).map(|i| 0.5 + i as f64 * 0.7).collect();
        let t = table_of(|x| x * x, &xs);
        for &x in &xs {
            assert_eq!(t.eval(x), x * x);
        }
    }

    #[test]
    fn spline_reproduces_cubics() {
        let xs = [0.0, 0.4, 1.1, 1.5, 2.7, 3.0, 4.2];
        let p = |x: f64| 2.0 - x + 0.5 * x * x - 0.3 * x * x * x;
        let t = table_of(p, &xs);
        for w in xs.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            assert!((t.eval(mid) - p(mid)).abs() < 1e-12, "at {mid}");
        }
        let four = table_of(p, &xs[..4]);
        assert!((four.eval(0.77) - p(0.77)).abs() < 1e-12);
    }

    #[test]
    fn spline_is_c2() {
        let xs: Vec<f64> = (0..15).map(|i| 1.0 + 0.5 * i as f64).collect();
        let t = table_of(|x| (x * 0.9).sin() / x, &xs);
        let h = 1e-4;
        for (k, &x) in xs.iter().enumerate().skip(1).take(xs.len() - 2) {
            let dd = (t.eval(x + h) - 2.0 * t.eval(x) + t.eval(x - h)) / (h * h);
            assert!((dd - t.node_second_derivatives()[k]).abs() < 1e-6, "node {k}");
        }
    }

    #[test]
    fn extension_holds_boundary_values() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let t = table_of(|x| -1.0 / x, &xs);
        assert_eq!(t.eval(0.2), -1.0);
        assert_eq!(t.eval(50.0), -0.2);
    }

    #[test]
    fn file_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.dat");
        let mut f = fs::File::create(&good).unwrap();
        writeln!(f, "# R  V\n1.0 0.5\n2.0 0.25  # comment\n\n3.0 0.125\n4.0 0.0625").unwrap();
        let t = load_curve(&good).unwrap();
        assert_eq!(t.abscissae(), &[1.0, 2.0, 3.0, 4.0]);

        let bad = dir.path().join("unsorted.dat");
        fs::write(&bad, "1 0\n3 0\n2 0\n4 0\n").unwrap();
        match load_curve(&bad) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("unsorted"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = dir.path().join("text.dat");
        fs::write(&text, "1 0\n2 x\n3 0\n4 0\n").unwrap();
        assert!(matches!(load_curve(&text), Err(Error::Parse { line: 2, .. })));
        let short = dir.path().join("short.dat");
        fs::write(&short, "1 0\n2 0\n3 0\n").unwrap();
        assert!(load_curve(&short).is_err());
        assert!(matches!(load_curve(dir.path().join("missing")), Err(Error::Io { .. })));
    }

    #[test]
    fn h2plus_structure() {
        let p = builtin_h2plus();
        let g = RadialGrid::new(0.5, 25.0, 1024).unwrap();
        p.validate(&g).unwrap();
        let e1 = |r| p.bound.eval(r);
        assert!((e1(2.0) + 0.102634).abs() < 1e-15);
        assert!(e1(1.99) > e1(2.0) && e1(2.01) > e1(2.0));
        let e2 = p.repulsive.sample(&g);
        assert!(e2.windows(2).all(|w| w[0] > w[1]));
        assert!((p.dipole.eval(1.0) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn h2plus_exact_matches_independent_solutions() {
        let p = builtin_h2plus_exact();
        // Nodes: literature electronic energies at R = 2 (total minus 1/R, plus 1/2).
        assert!((p.bound.eval(2.0) - (-1.1026342145 + 0.5 + 0.5)).abs() < 1e-9);
        assert!((p.repulsive.eval(2.0) - (-0.6675343922 + 0.5 + 0.5)).abs() < 1e-9);
        // Off-node spot solutions of the same separated equations.
        let checks = [
            (1.025, 0.035696385445116996, 0.9078736097894008, 0.684810244115237),
            (2.975, -0.07841828762123937, 0.13491502620542045, 1.4224958057899177),
            (7.05, -0.00538151026185818, 0.0035559048215411115, 3.430532936529184),
            (15.25, -4.5271247676170745e-05, -3.982705996785629e-05, 7.605494167765186),
        ];
        for (r, e1, e2, mu) in checks {
            assert!((p.bound.eval(r) - e1).abs() < 2e-6, "eps1({r})");
            assert!((p.repulsive.eval(r) - e2).abs() < 2e-6, "eps2({r})");
            assert!((p.dipole.eval(r) - mu).abs() < 1e-4, "mu({r})");
        }
        // Charge-resonance limit.
        assert!((p.dipole.eval(38.0) / 19.0 - 1.0).abs() < 1e-3);
        p.validate(&RadialGrid::new(0.5, 25.0, 1024).unwrap()).unwrap();
    }

    #[test]
    fn validation_tolerates_only_tiny_rises() {
        let mut p = builtin_h2plus();
        let g = RadialGrid::new(0.5, 25.0, 512).unwrap();
        p.repulsive = Curve::Table(table_of(
            |r| 2.0 * (-r).exp() / r - 1e-4 * (-(r - 12.0) * (r - 12.0)).exp(),
            &(0..200).map(|i| 0.4 + 0.13 * i as f64).collect::<Vec<_>>(),
        ));
        p.validate(&g).unwrap();
        p.repulsive = Curve::Table(table_of(
            |r| 2.0 * (-r).exp() / r - 0.1 * (-(r - 12.0) * (r - 12.0)).exp(),
            &(0..200).map(|i| 0.4 + 0.13 * i as f64).collect::<Vec<_>>(),
        ));
        assert!(p.validate(&g).is_err());
    }

    #[test]
    fn na2_structure() {
        let p = builtin_na2();
        let g = RadialGrid::new(4.0, 60.0, 2048).unwrap();
        p.validate(&g).unwrap();
        let r_e = 9.81;
        let gap = p.repulsive.eval(r_e) - p.bound.eval(r_e);
        let target = units::wavelength_to_omega(560.0).unwrap();
        assert!((gap - target).abs() < 0.02 * target, "gap {gap}");
        // constant dipole: the coupling matrix is symmetric by construction
        assert_eq!(p.dipole.eval(5.0), p.dipole.eval(50.0));
    }

    #[test]
    fn rejects_increasing_repulsive_curve() {
        let mut p = builtin_h2plus();
        p.repulsive = Curve::Morse {
            depth: 0.1,
            r_e: 3.0,
            a: 1.0,
            asymptote: 0.0,
        };
        let g = RadialGrid::new(0.5, 25.0, 256).unwrap();
        assert!(p.validate(&g).is_err());
    }
}
