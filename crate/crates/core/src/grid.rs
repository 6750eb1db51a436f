//! Discrete calculus on the unit square with homogeneous Dirichlet boundary.
//!
//! The grid has `n` interior nodes per axis and mesh width `h = 1/(n+1)`.
//! Only interior values are stored; boundary nodes are identically zero.
//! Fields are stored row-major: node `(i, j)` sits at `x = (i+1)h`,
//! `y = (j+1)h` and has flat index `j*n + i`.
//!
//! The Dirichlet form [`h1_inner`] is the sum of forward-difference products
//! over all grid edges, which is exactly the quadratic form of the 5-point
//! Laplacian. The discrete Green identity
//! `h1_inner(u, v) = integrate(v * laplacian_apply(u))` therefore holds to
//! rounding.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{QspError, Result, EXP_ARG_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDomain {
    n: usize,
    h: f64,
}

impl DiscreteDomain {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(QspError::InvalidParameter {
                name: "n",
                value: n as f64,
                reason: "grid needs at least 3 interior nodes per axis",
            });
        }
        Ok(Self {
            n,
            h: 1.0 / (n as f64 + 1.0),
        })
    }

    /// Interior nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Quadrature weight attached to every interior node.
    pub fn quad_weight(&self) -> f64 {
        self.h * self.h
    }

    /// Number of interior unknowns, `n²`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of interior index `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.h
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }
}

/// Real grid function on the interior nodes of a [`DiscreteDomain`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    dom: DiscreteDomain,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(dom: DiscreteDomain) -> Self {
        Self {
            dom,
            values: vec![0.0; dom.len()],
        }
    }

    pub fn constant(dom: DiscreteDomain, c: f64) -> Self {
        Self {
            dom,
            values: vec![c; dom.len()],
        }
    }

    /// Wraps nodal values, rejecting wrong lengths and non-finite entries.
    pub fn from_values(dom: DiscreteDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != dom.len() {
            return Err(QspError::InvalidField(format!(
                "expected {} values for n={}, got {}",
                dom.len(),
                dom.n(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(QspError::InvalidField(format!(
                "non-finite value {} at node {k}",
                values[k]
            )));
        }
        Ok(Self { dom, values })
    }

    /// Samples `g(x, y)` at every interior node.
    pub fn from_fn(dom: DiscreteDomain, g: impl Fn(f64, f64) -> f64) -> Self {
        let n = dom.n();
        let mut values = Vec::with_capacity(dom.len());
        for j in 0..n {
            let y = dom.coord(j);
            for i in 0..n {
                values.push(g(dom.coord(i), y));
            }
        }
        Self { dom, values }
    }

    pub fn domain(&self) -> DiscreteDomain {
        self.dom
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, g: impl Fn(f64) -> f64) -> Field {
        Field {
            dom: self.dom,
            values: self.values.iter().map(|&v| g(v)).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    /// `a*self + b*other`.
    ///
    /// Panics when the two fields live on different domains; use
    /// [`check_same_domain`] first when the operands come from outside.
    pub fn lin_comb(&self, a: f64, other: &Field, b: f64) -> Field {
        assert_eq!(self.dom, other.dom, "lin_comb across domains");
        Field {
            dom: self.dom,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn add(&self, other: &Field) -> Field {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.lin_comb(1.0, other, -1.0)
    }

    /// Nodal product.
    pub fn mul(&self, other: &Field) -> Field {
        assert_eq!(self.dom, other.dom, "mul across domains");
        Field {
            dom: self.dom,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x * y)
                .collect(),
        }
    }

    /// Plain Euclidean dot product of nodal values (no quadrature weight).
    pub fn dot(&self, other: &Field) -> f64 {
        dot(&self.values, &other.values)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn check_same_domain(a: &Field, b: &Field) -> Result<()> {
    if a.dom != b.dom {
        return Err(QspError::DomainMismatch {
            left: a.dom.n(),
            right: b.dom.n(),
        });
    }
    Ok(())
}

/// 5-point stencil of `-Δ_h` with zero boundary, written into `out`.
pub(crate) fn neg_laplacian_into(n: usize, h: f64, u: &[f64], out: &mut [f64]) {
    let inv_h2 = 1.0 / (h * h);
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            let mut s = 4.0 * u[k];
            if i > 0 {
                s -= u[k - 1];
            }
            if i + 1 < n {
                s -= u[k + 1];
            }
            if j > 0 {
                s -= u[k - n];
            }
            if j + 1 < n {
                s -= u[k + n];
            }
            out[k] = s * inv_h2;
        }
    }
}

/// `-Δ_h u` at every interior node.
pub fn laplacian_apply(u: &Field) -> Field {
    let dom = u.dom;
    let mut out = vec![0.0; dom.len()];
    neg_laplacian_into(dom.n(), dom.h(), &u.values, &mut out);
    Field { dom, values: out }
}

/// Discrete Dirichlet inner product `⟨u, v⟩ = ∫ ∇u·∇v`.
pub fn h1_inner(u: &Field, v: &Field) -> Result<f64> {
    check_same_domain(u, v)?;
    Ok(h1_inner_raw(u.dom.n(), &u.values, &v.values))
}

pub(crate) fn h1_inner_raw(n: usize, u: &[f64], v: &[f64]) -> f64 {
    let at = |w: &[f64], i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
            0.0
        } else {
            w[j as usize * n + i as usize]
        }
    };
    let mut s = 0.0;
    // Edges (i-1, j) -> (i, j) for i = 0..=n, including the two boundary edges per row.
    for j in 0..n as isize {
        for i in 0..=n as isize {
            let du = at(u, i, j) - at(u, i - 1, j);
            let dv = at(v, i, j) - at(v, i - 1, j);
            s += du * dv;
        }
    }
    for j in 0..=n as isize {
        for i in 0..n as isize {
            let du = at(u, i, j) - at(u, i, j - 1);
            let dv = at(v, i, j) - at(v, i, j - 1);
            s += du * dv;
        }
    }
    // Forward differences carry 1/h each and the edge quadrature weight is h²,
    // so the factors cancel.
    s
}

/// `‖u‖² = ⟨u, u⟩`.
pub fn h1_norm_sq(u: &Field) -> f64 {
    h1_inner_raw(u.dom.n(), &u.values, &u.values)
}

pub fn h1_norm(u: &Field) -> f64 {
    h1_norm_sq(u).sqrt()
}

/// Discrete `L^p` norm `(Σ|u_i|^p h²)^{1/p}`; `p = ∞` gives the max norm.
pub fn lp_norm(u: &Field, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(QspError::InvalidParameter {
            name: "p",
            value: p,
            reason: "L^p norm needs p >= 1",
        });
    }
    if p.is_infinite() {
        return Ok(u.values.iter().fold(0.0, |m: f64, v| m.max(v.abs())));
    }
    let w = u.dom.quad_weight();
    let s: f64 = if p == 2.0 {
        u.values.iter().map(|v| v * v).sum()
    } else {
        u.values.iter().map(|v| v.abs().powf(p)).sum()
    };
    Ok((s * w).powf(1.0 / p))
}

/// Nodal quadrature `Σ g_i h²`.
pub fn integrate(g: &Field) -> f64 {
    g.values.iter().sum::<f64>() * g.dom.quad_weight()
}

/// `∫ exp(α u²)` by nodal quadrature, failing loudly on overflow.
pub fn tm_quadrature(u: &Field, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(QspError::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "Trudinger-Moser exponent must be positive",
        });
    }
    let mut s = 0.0;
    for (k, v) in u.values.iter().enumerate() {
        let e = alpha * v * v;
        if e > EXP_ARG_MAX {
            return Err(QspError::Overflow {
                node: k,
                exponent: e,
            });
        }
        s += e.exp();
    }
    Ok(s * u.dom.quad_weight())
}

const FIELD_MAGIC: &str = "qsp-field";

/// Writes the text dump: header `qsp-field n=<n> h=<h>` then `n²` values.
///
/// Values are printed in shortest round-trip form, so a reload is bit-exact.
pub fn write_field<W: Write>(mut w: W, u: &Field) -> Result<()> {
    let n = u.dom.n();
    writeln!(w, "{FIELD_MAGIC} n={} h={}", n, u.dom.h())?;
    let mut line = String::new();
    for row in u.values.chunks(n) {
        line.clear();
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                line.push(' ');
            }
            write!(line, "{v:?}").expect("writing to String");
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_field<R: Read>(r: R) -> Result<Field> {
    let mut reader = BufReader::new(r);
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(FIELD_MAGIC) {
        return Err(QspError::Parse(format!(
            "missing `{FIELD_MAGIC}` header line"
        )));
    }
    let n_tok = parts
        .next()
        .and_then(|t| t.strip_prefix("n="))
        .ok_or_else(|| QspError::Parse("header lacks n=<n>".into()))?;
    let n: usize = n_tok
        .parse()
        .map_err(|_| QspError::Parse(format!("bad grid size `{n_tok}`")))?;
    let h_tok = parts
        .next()
        .and_then(|t| t.strip_prefix("h="))
        .ok_or_else(|| QspError::Parse("header lacks h=<h>".into()))?;
    let h: f64 = h_tok
        .parse()
        .map_err(|_| QspError::Parse(format!("bad mesh width `{h_tok}`")))?;
    let dom = DiscreteDomain::new(n)?;
    if (h - dom.h()).abs() > 1e-12 {
        return Err(QspError::Parse(format!(
            "mesh width {h} inconsistent with n={n}"
        )));
    }
    let mut body = String::new();
    reader.read_to_string(&mut body)?;
    let values = body
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| QspError::Parse(format!("bad value `{t}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != dom.len() {
        return Err(QspError::Parse(format!(
            "expected {} values, found {}",
            dom.len(),
            values.len()
        )));
    }
    Field::from_values(dom, values)
}

/// Smooth random field: a few low sine modes with uniform coefficients and
/// `1/(k²+l²)` decay, so derivatives stay moderate on any grid.
pub fn random_smooth_field<R: rand::Rng>(dom: DiscreteDomain, rng: &mut R, modes: usize) -> Field {
    use std::f64::consts::PI;
    let coef: Vec<f64> = (0..modes * modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Field::from_fn(dom, |x, y| {
        let mut s = 0.0;
        for k in 1..=modes {
            let sx = (PI * k as f64 * x).sin();
            for l in 1..=modes {
                let c = coef[(k - 1) * modes + (l - 1)];
                s += c * sx * (PI * l as f64 * y).sin() / (k * k + l * l) as f64;
            }
        }
        s
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sines(dom: DiscreteDomain) -> Field {
        Field::from_fn(dom, |x, y| (PI * x).sin() * (PI * y).sin())
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(DiscreteDomain::new(2).is_err());
        let d = DiscreteDomain::new(3).unwrap();
        assert!((d.h() * 4.0 - 1.0).abs() <= f64::EPSILON);
    }

    #[test]
    fn zero_laplacian() {
        let d = DiscreteDomain::new(9).unwrap();
        let z = laplacian_apply(&Field::zeros(d));
        assert!(z.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quadratic_bump_is_exact() {
        for n in [5, 17, 40] {
            let d = DiscreteDomain::new(n).unwrap();
            let u = Field::from_fn(d, |x, y| x * (1.0 - x) * y * (1.0 - y));
            let exact = Field::from_fn(d, |x, y| 2.0 * (x * (1.0 - x) + y * (1.0 - y)));
            let lu = laplacian_apply(&u);
            for (a, b) in lu.as_slice().iter().zip(exact.as_slice()) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn eigenfunction_laplacian() {
        let d = DiscreteDomain::new(63).unwrap();
        let u = sines(d);
        let lu = laplacian_apply(&u);
        let lam = 2.0 * PI * PI;
        let mut worst: f64 = 0.0;
        for (a, b) in lu.as_slice().iter().zip(u.as_slice()) {
            worst = worst.max((a - lam * b).abs() / (lam * b.abs()));
        }
        assert!(worst < 2e-3, "{worst}");
    }

    #[test]
    fn dirichlet_energy_of_sines() {
        let d = DiscreteDomain::new(63).unwrap();
        let u = sines(d);
        let e = h1_inner(&u, &u).unwrap();
        let exact = PI * PI / 2.0;
        assert!((e - exact).abs() / exact < 1e-2);
        assert_eq!(h1_inner(&Field::zeros(d), &u).unwrap(), 0.0);
    }

    #[test]
    fn domain_mismatch_is_an_error() {
        let a = Field::zeros(DiscreteDomain::new(5).unwrap());
        let b = Field::zeros(DiscreteDomain::new(6).unwrap());
        assert!(matches!(
            h1_inner(&a, &b),
            Err(QspError::DomainMismatch { .. })
        ));
    }

    #[test]
    fn norms_and_integrals() {
        let d = DiscreteDomain::new(63).unwrap();
        let n2h2 = (d.len() as f64) * d.quad_weight();
        assert_eq!(lp_norm(&Field::zeros(d), 3.0).unwrap(), 0.0);
        let c = Field::constant(d, -2.5);
        assert!((lp_norm(&c, 2.0).unwrap() - 2.5 * n2h2.sqrt()).abs() < 1e-12);
        assert!((integrate(&Field::constant(d, 1.0)) - n2h2).abs() < 1e-12);
        let s = integrate(&sines(d));
        assert!((s - 4.0 / (PI * PI)).abs() < 1e-3);
        assert!(lp_norm(&c, 0.5).is_err());
        assert_eq!(lp_norm(&c, f64::INFINITY).unwrap(), 2.5);
    }

    #[test]
    fn tm_quadrature_basics() {
        let d = DiscreteDomain::new(15).unwrap();
        let z = tm_quadrature(&Field::zeros(d), 4.0).unwrap();
        assert!((z - d.len() as f64 * d.quad_weight()).abs() < 1e-14);
        let u = sines(d).scale(3.0);
        assert!(tm_quadrature(&u, 1.0).unwrap() <= tm_quadrature(&u, 2.0).unwrap());
        let big = sines(d).scale(40.0);
        assert!(matches!(
            tm_quadrature(&big, 1.0),
            Err(QspError::Overflow { .. })
        ));
        assert!(tm_quadrature(&u, 0.0).is_err());
    }

    #[test]
    fn field_dump_rejects_bad_counts() {
        let text = "qsp-field n=3 h=0.25\n1 2 3\n";
        assert!(read_field(text.as_bytes()).is_err());
        let text = "qsp-field n=3 h=0.3\n0 0 0 0 0 0 0 0 0\n";
        assert!(read_field(text.as_bytes()).is_err());
        let text = "other n=3 h=0.25\n0 0 0 0 0 0 0 0 0\n";
        assert!(read_field(text.as_bytes()).is_err());
    }

    #[test]
    fn from_values_rejects_nan() {
        let d = DiscreteDomain::new(3).unwrap();
        let mut v = vec![0.0; 9];
        v[4] = f64::NAN;
        assert!(Field::from_values(d, v).is_err());
    }
}
