//! Convex potentials on R^n: grids, closed forms, sampled data and the
//! regular set where the Hessian exists and is invertible.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed in the per-axis convexity check of sampled data.
pub const EPS_CVX: f64 = 1e-6;
/// Relative symmetry tolerance for stored Hessians.
pub const EPS_SYM: f64 = 1e-8;
/// Invertibility threshold is `EPS_DET_REL * (median Hessian diagonal)^n`.
pub const EPS_DET_REL: f64 = 1e-10;

/// Axis-aligned tensor grid. Nodes are `lower + i * spacing`; each node is
/// the midpoint of a cell of volume `prod(spacing)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
    #[serde(skip)]
    spacing: Vec<f64>,
}

impl Grid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let n = lower.len();
        if n == 0 || upper.len() != n || counts.len() != n {
            return Err(Error::Grid("lower, upper and counts must share a nonzero length".into()));
        }
        for k in 0..n {
            if !(lower[k] < upper[k]) || !lower[k].is_finite() || !upper[k].is_finite() {
                return Err(Error::Grid(format!("axis {k}: need finite lower < upper")));
            }
            if counts[k] < 5 {
                return Err(Error::Grid(format!("axis {k}: need at least 5 samples, got {}", counts[k])));
            }
        }
        let spacing = (0..n).map(|k| (upper[k] - lower[k]) / (counts[k] - 1) as f64).collect();
        Ok(Grid { lower, upper, counts, spacing })
    }

    /// The cube `[-radius, radius]^dim` with `count` nodes per axis.
    pub fn cube(dim: usize, radius: f64, count: usize) -> Result<Self> {
        Self::new(vec![-radius; dim], vec![radius; dim], vec![count; dim])
    }

    /// Rebuilds the derived spacing after deserialization.
    pub fn validated(self) -> Result<Self> {
        Self::new(self.lower, self.upper, self.counts)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Stride of each axis in the linear index; the last axis varies fastest.
    pub fn strides(&self) -> Vec<usize> {
        let n = self.dim();
        let mut s = vec![1; n];
        for k in (0..n.saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.counts[k + 1];
        }
        s
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let n = self.dim();
        let mut out = vec![0; n];
        for k in (0..n).rev() {
            out[k] = idx % self.counts[k];
            idx /= self.counts[k];
        }
        out
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn node_into(&self, idx: usize, out: &mut [f64]) {
        let mut rem = idx;
        for k in (0..self.dim()).rev() {
            let i = rem % self.counts[k];
            rem /= self.counts[k];
            out[k] = self.lower[k] + i as f64 * self.spacing[k];
        }
    }

    pub fn node(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.node_into(idx, &mut x);
        x
    }

    /// Every other node along each axis (spacing doubled).
    pub fn coarsened(&self) -> Result<Grid> {
        let counts: Vec<usize> = self.counts.iter().map(|c| (c - 1) / 2 + 1).collect();
        let upper = (0..self.dim())
            .map(|k| self.lower[k] + 2.0 * self.spacing[k] * (counts[k] - 1) as f64)
            .collect();
        Grid::new(self.lower.clone(), upper, counts)
    }

    /// Index of the node nearest to `x`, if `x` lies within half a cell of a node.
    pub fn nearest_node(&self, x: &[f64]) -> Option<usize> {
        let mut multi = vec![0; self.dim()];
        for k in 0..self.dim() {
            let u = (x[k] - self.lower[k]) / self.spacing[k];
            let r = u.round();
            if r < 0.0 || r > (self.counts[k] - 1) as f64 || (u - r).abs() > 1e-6 {
                return None;
            }
            multi[k] = r as usize;
        }
        Some(self.linear_index(&multi))
    }
}

/// Smooth convex ridge `amplitude * ln cosh(<direction, x> - offset)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ridge {
    pub direction: Vec<f64>,
    pub offset: f64,
    pub amplitude: f64,
}

fn ln_cosh(u: f64) -> f64 {
    let a = u.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Grid-sampled convex function with `+inf` marking points outside the domain.
#[derive(Clone, Debug)]
pub struct SampledConvex {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl SampledConvex {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Invalid(format!(
                "sampled function has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::Invalid("sampled values must be finite or +inf".into()));
        }
        let strides = grid.strides();
        for idx in 0..values.len() {
            let m = grid.multi_index(idx);
            for k in 0..grid.dim() {
                if m[k] == 0 || m[k] + 1 >= grid.counts[k] {
                    continue;
                }
                let (a, b, c) = (values[idx - strides[k]], values[idx], values[idx + strides[k]]);
                if !(a.is_finite() && b.is_finite() && c.is_finite()) {
                    continue;
                }
                let tol = EPS_CVX * (a.abs() + 2.0 * b.abs() + c.abs()) + 1e-12;
                if a - 2.0 * b + c < -tol {
                    return Err(Error::Invalid(format!(
                        "sampled values are not convex along axis {k} at node {:?}",
                        grid.node(idx)
                    )));
                }
            }
        }
        Ok(SampledConvex { grid, values })
    }

    /// Multilinear interpolation; `+inf` outside the box or when any corner
    /// with positive weight is infinite.
    fn interpolate(&self, x: &[f64]) -> f64 {
        let g = &self.grid;
        let n = g.dim();
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for k in 0..n {
            let u = (x[k] - g.lower[k]) / g.spacing[k];
            let last = (g.counts[k] - 1) as f64;
            if u < -1e-9 || u > last + 1e-9 {
                return f64::INFINITY;
            }
            let mut u = u.clamp(0.0, last);
            if (u - u.round()).abs() < 1e-9 {
                u = u.round();
            }
            let i = (u.floor() as usize).min(g.counts[k] - 2);
            base[k] = i;
            frac[k] = u - i as f64;
        }
        let strides = g.strides();
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = 0;
            for k in 0..n {
                let bit = (corner >> k) & 1;
                w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
                idx += (base[k] + bit) * strides[k];
            }
            if w == 0.0 {
                continue;
            }
            let v = self.values[idx];
            if !v.is_finite() {
                return f64::INFINITY;
            }
            acc += w * v;
        }
        acc
    }
}

/// Affine change of variables `x -> psi(T x + shift) + <linear, x> + constant`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub t: DMatrix<f64>,
    pub shift: DVector<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
}

impl AffineMap {
    fn identity(n: usize) -> Self {
        AffineMap {
            t: DMatrix::identity(n, n),
            shift: DVector::zeros(n),
            linear: DVector::zeros(n),
            constant: 0.0,
        }
    }

    /// True when the map is `x -> psi(T x)` with nothing added.
    pub fn is_linear(&self) -> bool {
        self.shift.iter().all(|v| *v == 0.0) && self.linear.iter().all(|v| *v == 0.0) && self.constant == 0.0
    }
}

#[derive(Clone, Debug)]
pub enum Kind {
    Sampled(Arc<SampledConvex>),
    /// `<A x, x> + offset` (no factor 1/2).
    Quadratic { a: DMatrix<f64>, offset: f64 },
    /// `c^2 |x|^2 / 2`.
    Gaussian { dim: usize, c: f64 },
    /// Potential of `[(1 - s c^2 |x|^2)_+]^{1/(2s)}`, i.e. `(1 - sqrt(1 - s c^2 |x|^2)) / s`
    /// on the open ball `|x| < 1/(c sqrt(s))`.
    SEnvelope { dim: usize, s: f64, c: f64 },
    /// A base potential plus convex ridges.
    Ridged { base: Box<FunctionRep>, ridges: Vec<Ridge> },
}

/// A convex potential `psi`, optionally precomposed with an affine map.
#[derive(Clone, Debug)]
pub struct FunctionRep {
    kind: Kind,
    map: Option<AffineMap>,
}

/// Value, gradient and flattened row-major Hessian at one point.
#[derive(Clone, Debug)]
pub struct Derivs {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<f64>,
}

impl FunctionRep {
    pub fn gaussian(dim: usize, c: f64) -> Result<Self> {
        if dim == 0 || !(c > 0.0) {
            return Err(Error::Invalid("gaussian potential needs dim >= 1 and c > 0".into()));
        }
        Ok(Self::from_kind(Kind::Gaussian { dim, c }))
    }

    pub fn quadratic(a: DMatrix<f64>, offset: f64) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::Invalid("quadratic matrix must be square".into()));
        }
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if (&a - a.transpose()).iter().any(|v| v.abs() > EPS_SYM * scale.max(1.0)) {
            return Err(Error::Invalid("quadratic matrix must be symmetric".into()));
        }
        if a.clone().cholesky().is_none() {
            return Err(Error::Invalid("quadratic matrix must be positive definite".into()));
        }
        Ok(Self::from_kind(Kind::Quadratic { a, offset }))
    }

    pub fn s_envelope(dim: usize, s: f64, c: f64) -> Result<Self> {
        if dim == 0 || !(s > 0.0) || !(c > 0.0) {
            return Err(Error::Invalid("s-envelope needs dim >= 1, s > 0 and c > 0".into()));
        }
        Ok(Self::from_kind(Kind::SEnvelope { dim, s, c }))
    }

    pub fn sampled(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Ok(Self::from_kind(Kind::Sampled(Arc::new(SampledConvex::new(grid, values)?))))
    }

    pub fn ridged(base: FunctionRep, ridges: Vec<Ridge>) -> Result<Self> {
        let n = base.dim();
        for r in &ridges {
            if r.direction.len() != n {
                return Err(Error::Dimension { expected: n, got: r.direction.len() });
            }
            if !(r.amplitude >= 0.0) {
                return Err(Error::Invalid("ridge amplitude must be nonnegative".into()));
            }
        }
        Ok(Self::from_kind(Kind::Ridged { base: Box::new(base), ridges }))
    }

    fn from_kind(kind: Kind) -> Self {
        FunctionRep { kind, map: None }
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn map(&self) -> Option<&AffineMap> {
        self.map.as_ref()
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            Kind::Sampled(s) => s.grid.dim(),
            Kind::Quadratic { a, .. } => a.nrows(),
            Kind::Gaussian { dim, .. } | Kind::SEnvelope { dim, .. } => *dim,
            Kind::Ridged { base, .. } => base.dim(),
        }
    }

    /// True when derivatives are analytic everywhere on the domain.
    pub fn is_closed_form(&self) -> bool {
        match &self.kind {
            Kind::Sampled(_) => false,
            Kind::Ridged { base, .. } => base.is_closed_form(),
            _ => true,
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// Value at `x`; `+inf` outside the domain.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.value_at(x))
    }

    pub(crate) fn value_at(&self, x: &[f64]) -> f64 {
        match &self.map {
            None => self.inner_value(x),
            Some(m) => {
                let u = apply_map(m, x);
                let v = self.inner_value(u.as_slice());
                v + m.linear.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + m.constant
            }
        }
    }

    fn inner_value(&self, x: &[f64]) -> f64 {
        match &self.kind {
            Kind::Sampled(s) => s.interpolate(x),
            Kind::Quadratic { a, offset } => {
                let n = a.nrows();
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += a[(i, j)] * x[i] * x[j];
                    }
                }
                acc + offset
            }
            Kind::Gaussian { c, .. } => 0.5 * c * c * norm2(x),
            Kind::SEnvelope { s, c, .. } => {
                let r2 = norm2(x);
                let q = 1.0 - s * c * c * r2;
                if q <= 0.0 {
                    f64::INFINITY
                } else {
                    c * c * r2 / (1.0 + q.sqrt())
                }
            }
            Kind::Ridged { base, ridges } => {
                let v = base.value_at(x);
                if !v.is_finite() {
                    return v;
                }
                v + ridges.iter().map(|r| r.amplitude * ln_cosh(dot(&r.direction, x) - r.offset)).sum::<f64>()
            }
        }
    }

    /// Analytic value, gradient and Hessian; `None` outside the open domain
    /// or for sampled kinds.
    pub fn derivs(&self, x: &[f64]) -> Option<Derivs> {
        if x.len() != self.dim() {
            return None;
        }
        match &self.map {
            None => self.inner_derivs(x),
            Some(m) => {
                let n = x.len();
                let u = apply_map(m, x);
                let d = self.inner_derivs(u.as_slice())?;
                let g = DVector::from_column_slice(&d.gradient);
                let h = DMatrix::from_row_slice(n, n, &d.hessian);
                let grad = m.t.transpose() * g + &m.linear;
                let hess = m.t.transpose() * h * &m.t;
                Some(Derivs {
                    value: d.value + m.linear.dot(&DVector::from_column_slice(x)) + m.constant,
                    gradient: grad.as_slice().to_vec(),
                    hessian: row_major(&hess),
                })
            }
        }
    }

    fn inner_derivs(&self, x: &[f64]) -> Option<Derivs> {
        let n = x.len();
        match &self.kind {
            Kind::Sampled(_) => None,
            Kind::Quadratic { a, .. } => {
                let xv = DVector::from_column_slice(x);
                let g = a * &xv * 2.0;
                Some(Derivs {
                    value: self.inner_value(x),
                    gradient: g.as_slice().to_vec(),
                    hessian: row_major(&(a * 2.0)),
                })
            }
            Kind::Gaussian { c, .. } => {
                let c2 = c * c;
                let mut h = vec![0.0; n * n];
                for i in 0..n {
                    h[i * n + i] = c2;
                }
                Some(Derivs { value: 0.5 * c2 * norm2(x), gradient: x.iter().map(|v| c2 * v).collect(), hessian: h })
            }
            Kind::SEnvelope { s, c, .. } => {
                let c2 = c * c;
                let r2 = norm2(x);
                let q = 1.0 - s * c2 * r2;
                if q <= 0.0 {
                    return None;
                }
                let r = q.sqrt();
                let mut h = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        h[i * n + j] = s * c2 * c2 * x[i] * x[j] / (r * r * r);
                    }
                    h[i * n + i] += c2 / r;
                }
                Some(Derivs {
                    value: c2 * r2 / (1.0 + r),
                    gradient: x.iter().map(|v| c2 * v / r).collect(),
                    hessian: h,
                })
            }
            Kind::Ridged { base, ridges } => {
                let mut d = base.derivs(x)?;
                for rg in ridges {
                    let u = dot(&rg.direction, x) - rg.offset;
                    let th = u.tanh();
                    let sech2 = 1.0 - th * th;
                    d.value += rg.amplitude * ln_cosh(u);
                    for i in 0..n {
                        d.gradient[i] += rg.amplitude * th * rg.direction[i];
                        for j in 0..n {
                            d.hessian[i * n + j] += rg.amplitude * sech2 * rg.direction[i] * rg.direction[j];
                        }
                    }
                }
                Some(d)
            }
        }
    }

    /// Step used for finite differences of non-closed forms.
    fn fd_step(&self) -> Vec<f64> {
        match self.sampled_grid() {
            Some(g) => g.spacing().to_vec(),
            None => vec![1e-4; self.dim()],
        }
    }

    /// Grid of the innermost sampled data, if any.
    pub fn sampled_grid(&self) -> Option<&Grid> {
        match &self.kind {
            Kind::Sampled(s) => Some(&s.grid),
            Kind::Ridged { base, .. } => base.sampled_grid(),
            _ => None,
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        if self.is_closed_form() {
            return self.derivs(x).map(|d| d.gradient).ok_or_else(|| Error::Boundary(x.to_vec()));
        }
        let h = self.fd_step();
        let n = x.len();
        let mut g = vec![0.0; n];
        let mut p = x.to_vec();
        for k in 0..n {
            p[k] = x[k] + h[k];
            let up = self.value_at(&p);
            p[k] = x[k] - h[k];
            let dn = self.value_at(&p);
            p[k] = x[k];
            if !up.is_finite() || !dn.is_finite() || !self.value_at(x).is_finite() {
                return Err(Error::Boundary(x.to_vec()));
            }
            g[k] = (up - dn) / (2.0 * h[k]);
        }
        Ok(g)
    }

    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        let n = x.len();
        if self.is_closed_form() {
            return self
                .derivs(x)
                .map(|d| DMatrix::from_row_slice(n, n, &d.hessian))
                .ok_or_else(|| Error::Boundary(x.to_vec()));
        }
        let h = self.fd_step();
        let f = |p: &[f64]| -> Result<f64> {
            let v = self.value_at(p);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Boundary(x.to_vec()))
            }
        };
        // Two spacings of clearance along each axis.
        let mut p = x.to_vec();
        for k in 0..n {
            for m in [-2.0, 2.0] {
                p[k] = x[k] + m * h[k];
                f(&p)?;
            }
            p[k] = x[k];
        }
        let center = f(x)?;
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            p[i] = x[i] + h[i];
            let up = f(&p)?;
            p[i] = x[i] - h[i];
            let dn = f(&p)?;
            p[i] = x[i];
            out[(i, i)] = (up - 2.0 * center + dn) / (h[i] * h[i]);
            for j in 0..i {
                let corner = |si: f64, sj: f64| -> Result<f64> {
                    let mut q = x.to_vec();
                    q[i] += si * h[i];
                    q[j] += sj * h[j];
                    f(&q)
                };
                let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?)
                    / (4.0 * h[i] * h[j]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok((&out + out.transpose()) * 0.5)
    }

    /// `x -> psi(T x)`. Quadratics stay quadratics; other kinds store `T`.
    pub fn compose_linear(&self, t: &DMatrix<f64>) -> Result<Self> {
        let n = self.dim();
        if t.nrows() != n || t.ncols() != n {
            return Err(Error::Dimension { expected: n, got: t.nrows() });
        }
        let scale = t.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        if t.determinant().abs() <= 1e-12 * scale.powi(n as i32) {
            return Err(Error::Invalid("composition matrix is singular".into()));
        }
        if let (Kind::Quadratic { a, offset }, None) = (&self.kind, &self.map) {
            let at = t.transpose() * a * t;
            let at = (&at + at.transpose()) * 0.5;
            return Ok(Self::from_kind(Kind::Quadratic { a: at, offset: *offset }));
        }
        let m = self.map.clone().unwrap_or_else(|| AffineMap::identity(n));
        let map = AffineMap { t: &m.t * t, shift: m.shift.clone(), linear: t.transpose() * &m.linear, constant: m.constant };
        Ok(FunctionRep { kind: self.kind.clone(), map: Some(map) })
    }

    /// `x -> psi(x + z)`.
    pub fn translate(&self, z: &[f64]) -> Result<Self> {
        self.check_dim(z)?;
        let n = self.dim();
        let m = self.map.clone().unwrap_or_else(|| AffineMap::identity(n));
        let zv = DVector::from_column_slice(z);
        let map = AffineMap {
            shift: &m.shift + &m.t * &zv,
            constant: m.constant + m.linear.dot(&zv),
            t: m.t,
            linear: m.linear,
        };
        Ok(FunctionRep { kind: self.kind.clone(), map: Some(map) })
    }

    /// `x -> psi(x) + <linear, x> + constant`.
    pub fn add_affine(&self, linear: &[f64], constant: f64) -> Result<Self> {
        self.check_dim(linear)?;
        let n = self.dim();
        let mut m = self.map.clone().unwrap_or_else(|| AffineMap::identity(n));
        m.linear += DVector::from_column_slice(linear);
        m.constant += constant;
        Ok(FunctionRep { kind: self.kind.clone(), map: Some(m) })
    }

    pub(crate) fn with_map(kind: Kind, map: Option<AffineMap>) -> Self {
        FunctionRep { kind, map }
    }

    /// A box on which the potential's exponential is negligible at the
    /// edges (or which covers the compact domain).
    pub fn suggested_box(&self) -> (Vec<f64>, Vec<f64>) {
        const LEVEL: f64 = 40.0;
        let n = self.dim();
        let (lo, hi) = match &self.kind {
            Kind::Sampled(s) => (s.grid.lower.clone(), s.grid.upper.clone()),
            Kind::Quadratic { a, offset } => {
                let lmin = a.clone().symmetric_eigen().eigenvalues.min().max(1e-12);
                let r = ((LEVEL - offset.min(0.0)) / lmin).sqrt();
                (vec![-r; n], vec![r; n])
            }
            Kind::Gaussian { c, .. } => {
                let r = (2.0 * LEVEL).sqrt() / c;
                (vec![-r; n], vec![r; n])
            }
            Kind::SEnvelope { s, c, .. } => {
                let r = 1.0 / (c * s.sqrt());
                (vec![-r; n], vec![r; n])
            }
            Kind::Ridged { base, .. } => base.suggested_box(),
        };
        match &self.map {
            None => (lo, hi),
            Some(m) => {
                // Bounding box of T^{-1}(box - shift).
                let tinv = m.t.clone().try_inverse().expect("composition matrices are invertible");
                let mut out_lo = vec![f64::INFINITY; n];
                let mut out_hi = vec![f64::NEG_INFINITY; n];
                for corner in 0..(1usize << n) {
                    let u = DVector::from_iterator(
                        n,
                        (0..n).map(|k| if (corner >> k) & 1 == 1 { hi[k] } else { lo[k] } - m.shift[k]),
                    );
                    let x = &tinv * u;
                    for k in 0..n {
                        out_lo[k] = out_lo[k].min(x[k]);
                        out_hi[k] = out_hi[k].max(x[k]);
                    }
                }
                (out_lo, out_hi)
            }
        }
    }

    /// Grid over [`suggested_box`](Self::suggested_box) with `count` nodes per axis.
    pub fn suggested_grid(&self, count: usize) -> Result<Grid> {
        let (lo, hi) = self.suggested_box();
        Grid::new(lo, hi, vec![count; self.dim()])
    }

    /// Samples the function at every node of `grid`.
    pub fn sample_values(&self, grid: &Grid) -> Result<Vec<f64>> {
        if grid.dim() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: grid.dim() });
        }
        let mut x = vec![0.0; grid.dim()];
        Ok((0..grid.len())
            .map(|i| {
                grid.node_into(i, &mut x);
                self.value_at(&x)
            })
            .collect())
    }

    /// The sampled representation of this function on `grid`.
    pub fn sample_on(&self, grid: &Grid) -> Result<Self> {
        Self::sampled(grid.clone(), self.sample_values(grid)?)
    }

    /// Writes `x1,..,xn,value` rows in grid order.
    pub fn write_csv(&self, grid: &Grid, path: &Path) -> Result<()> {
        let values = self.sample_values(grid)?;
        write_grid_csv(grid, &values, path)
    }
}

/// Writes grid samples as CSV with a header row.
pub fn write_grid_csv(grid: &Grid, values: &[f64], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (1..=grid.dim()).map(|k| format!("x{k}")).collect();
    header.push("value".into());
    w.write_record(&header)?;
    let mut x = vec![0.0; grid.dim()];
    for (i, v) in values.iter().enumerate() {
        grid.node_into(i, &mut x);
        let mut row: Vec<String> = x.iter().map(|c| format!("{c}")).collect();
        row.push(format!("{v}"));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV written by [`write_grid_csv`] onto the declared grid.
pub fn read_grid_csv(grid: &Grid, path: &Path) -> Result<FunctionRep> {
    let mut r = csv::Reader::from_path(path)?;
    let n = grid.dim();
    let mut values = vec![f64::NAN; grid.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != n + 1 {
            return Err(Error::Invalid(format!("row {}: expected {} columns", line + 2, n + 1)));
        }
        let nums: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Invalid(format!("row {}: {e}", line + 2)))?;
        let idx = grid
            .nearest_node(&nums[..n])
            .ok_or_else(|| Error::Invalid(format!("row {}: point is not a grid node", line + 2)))?;
        values[idx] = nums[n];
    }
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::Invalid(format!("grid node {:?} missing from CSV", grid.node(i))));
    }
    FunctionRep::sampled(grid.clone(), values)
}

fn apply_map(m: &AffineMap, x: &[f64]) -> DVector<f64> {
    &m.t * DVector::from_column_slice(x) + &m.shift
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Determinant of a flattened row-major n×n matrix.
pub(crate) fn det(h: &[f64], n: usize) -> f64 {
    match n {
        1 => h[0],
        2 => h[0] * h[3] - h[1] * h[2],
        3 => {
            h[0] * (h[4] * h[8] - h[5] * h[7]) - h[1] * (h[3] * h[8] - h[5] * h[6])
                + h[2] * (h[3] * h[7] - h[4] * h[6])
        }
        _ => DMatrix::from_row_slice(n, n, h).determinant(),
    }
}

/// All leading principal minors positive.
pub(crate) fn positive_definite(h: &[f64], n: usize) -> bool {
    DMatrix::from_row_slice(n, n, h).cholesky().is_some()
}

/// Discretized regular set: the grid points where the potential is finite
/// and its Hessian is positive definite with determinant above the
/// invertibility threshold. Each point carries a quadrature weight, so the
/// set doubles as a quadrature rule for integrals over the domain.
///
/// Dual views built in [`crate::transforms`] reuse this type with the roles
/// of points and gradients exchanged; `indices` then still refer to the
/// primal grid.
#[derive(Clone, Debug)]
pub struct RegularSet {
    pub dim: usize,
    pub indices: Vec<usize>,
    pub positions: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
    pub gradients: Vec<f64>,
    /// Row-major Hessians; empty for views where they are not tracked.
    pub hessians: Vec<f64>,
    pub hess_dets: Vec<f64>,
    pub eps_det: f64,
}

/// One point of a [`RegularSet`] as seen by test functions.
#[derive(Clone, Copy, Debug)]
pub struct SamplePoint<'a> {
    pub x: &'a [f64],
    pub value: f64,
    pub gradient: &'a [f64],
    pub hess_det: f64,
}

impl RegularSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn gradient(&self, i: usize) -> &[f64] {
        &self.gradients[i * self.dim..(i + 1) * self.dim]
    }

    pub fn hessian(&self, i: usize) -> Option<&[f64]> {
        let m = self.dim * self.dim;
        self.hessians.get(i * m..(i + 1) * m)
    }

    pub fn point(&self, i: usize) -> SamplePoint<'_> {
        SamplePoint { x: self.position(i), value: self.values[i], gradient: self.gradient(i), hess_det: self.hess_dets[i] }
    }

    /// `<x, grad psi(x)> - psi(x)`, which equals `psi*(grad psi(x))`.
    pub fn conjugate_value(&self, i: usize) -> f64 {
        dot(self.position(i), self.gradient(i)) - self.values[i]
    }

    /// The regular set of `x -> psi(x + z)`: same data at points shifted by `-z`.
    pub fn translated(&self, z: &[f64]) -> RegularSet {
        let mut out = self.clone();
        for (k, p) in out.positions.iter_mut().enumerate() {
            *p -= z[k % self.dim];
        }
        out
    }

    /// Largest `|x|` over the set.
    pub fn radius(&self) -> f64 {
        (0..self.len()).map(|i| norm2(self.position(i)).sqrt()).fold(0.0, f64::max)
    }

    /// Keeps only the points for which `keep` returns true.
    pub fn filtered(&self, mut keep: impl FnMut(usize) -> bool) -> RegularSet {
        let n = self.dim;
        let mut out = RegularSet {
            dim: n,
            indices: vec![],
            positions: vec![],
            weights: vec![],
            values: vec![],
            gradients: vec![],
            hessians: vec![],
            hess_dets: vec![],
            eps_det: self.eps_det,
        };
        for i in 0..self.len() {
            if !keep(i) {
                continue;
            }
            out.indices.push(self.indices[i]);
            out.positions.extend_from_slice(self.position(i));
            out.weights.push(self.weights[i]);
            out.values.push(self.values[i]);
            out.gradients.extend_from_slice(self.gradient(i));
            if let Some(h) = self.hessian(i) {
                out.hessians.extend_from_slice(h);
            }
            out.hess_dets.push(self.hess_dets[i]);
        }
        out
    }
}

struct Candidate {
    index: usize,
    value: f64,
    gradient: Vec<f64>,
    hessian: Vec<f64>,
}

/// Detects the regular set of `psi` on `grid`.
///
/// Closed forms use analytic derivatives at every node of the open domain.
/// Other inputs are sampled at the nodes and differentiated with central
/// differences; a node qualifies only if its full 5-point stencil along every
/// axis (and the mixed-difference corners) is finite.
pub fn regular_set(psi: &FunctionRep, grid: &Grid) -> Result<RegularSet> {
    if grid.dim() != psi.dim() {
        return Err(Error::Dimension { expected: psi.dim(), got: grid.dim() });
    }
    let n = grid.dim();
    let mut cands: Vec<Candidate> = Vec::new();
    if psi.is_closed_form() {
        let mut x = vec![0.0; n];
        for idx in 0..grid.len() {
            grid.node_into(idx, &mut x);
            if let Some(d) = psi.derivs(&x) {
                if d.value.is_finite() && d.hessian.iter().all(|v| v.is_finite()) {
                    cands.push(Candidate { index: idx, value: d.value, gradient: d.gradient, hessian: d.hessian });
                }
            }
        }
    } else {
        let values = psi.sample_values(grid)?;
        let strides = grid.strides();
        let h = grid.spacing();
        'nodes: for idx in 0..grid.len() {
            let v0 = values[idx];
            if !v0.is_finite() {
                continue;
            }
            let m = grid.multi_index(idx);
            for k in 0..n {
                if m[k] < 2 || m[k] + 2 >= grid.counts[k] {
                    continue 'nodes;
                }
                for off in [-2i64, -1, 1, 2] {
                    let j = (idx as i64 + off * strides[k] as i64) as usize;
                    if !values[j].is_finite() {
                        continue 'nodes;
                    }
                }
            }
            let at = |offs: &[(usize, i64)]| -> f64 {
                let mut j = idx as i64;
                for &(k, o) in offs {
                    j += o * strides[k] as i64;
                }
                values[j as usize]
            };
            let mut grad = vec![0.0; n];
            let mut hess = vec![0.0; n * n];
            for i in 0..n {
                let up = at(&[(i, 1)]);
                let dn = at(&[(i, -1)]);
                grad[i] = (up - dn) / (2.0 * h[i]);
                hess[i * n + i] = (up - 2.0 * v0 + dn) / (h[i] * h[i]);
                for j in 0..i {
                    let c = [at(&[(i, 1), (j, 1)]), at(&[(i, 1), (j, -1)]), at(&[(i, -1), (j, 1)]), at(&[(i, -1), (j, -1)])];
                    if c.iter().any(|v| !v.is_finite()) {
                        continue 'nodes;
                    }
                    let v = (c[0] - c[1] - c[2] + c[3]) / (4.0 * h[i] * h[j]);
                    hess[i * n + j] = v;
                    hess[j * n + i] = v;
                }
            }
            cands.push(Candidate { index: idx, value: v0, gradient: grad, hessian: hess });
        }
    }
    let mut diag: Vec<f64> = cands.iter().flat_map(|c| (0..n).map(move |i| c.hessian[i * n + i].abs())).collect();
    if diag.is_empty() {
        return Err(Error::Degenerate("no grid point has a finite value and a full stencil".into()));
    }
    diag.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = diag[diag.len() / 2];
    let eps_det = EPS_DET_REL * median.powi(n as i32);
    let cell = grid.cell_volume();
    let mut out = RegularSet {
        dim: n,
        indices: vec![],
        positions: vec![],
        weights: vec![],
        values: vec![],
        gradients: vec![],
        hessians: vec![],
        hess_dets: vec![],
        eps_det,
    };
    let mut x = vec![0.0; n];
    for c in cands {
        let d = det(&c.hessian, n);
        if !(d > eps_det) || !positive_definite(&c.hessian, n) {
            continue;
        }
        grid.node_into(c.index, &mut x);
        out.indices.push(c.index);
        out.positions.extend_from_slice(&x);
        out.weights.push(cell);
        out.values.push(c.value);
        out.gradients.extend_from_slice(&c.gradient);
        out.hessians.extend_from_slice(&c.hessian);
        out.hess_dets.push(d);
    }
    if out.is_empty() {
        return Err(Error::Degenerate("no grid point has an invertible Hessian".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    #[test]
    fn grid_rejects_too_few_samples() {
        assert!(Grid::cube(2, 1.0, 4).is_err());
        assert!(Grid::new(vec![1.0], vec![0.0], vec![9]).is_err());
        let g = Grid::cube(2, 1.0, 5).unwrap();
        assert_eq!(g.spacing(), &[0.5, 0.5]);
        assert_eq!(g.len(), 25);
        assert_eq!(g.node(g.linear_index(&[1, 3])), vec![-0.5, 0.5]);
    }

    #[test]
    fn coarsened_grid_keeps_even_nodes() {
        let g = Grid::cube(2, 2.0, 9).unwrap();
        let c = g.coarsened().unwrap();
        assert_eq!(c.counts, vec![5, 5]);
        assert_eq!(c.spacing(), &[1.0, 1.0]);
        assert_eq!(c.upper, vec![2.0, 2.0]);
    }

    #[test]
    fn closed_form_values() {
        let q = FunctionRep::quadratic(DMatrix::identity(2, 2), 0.0).unwrap();
        assert_eq!(q.eval(&[1.0, 1.0]).unwrap(), 2.0);
        let g = FunctionRep::gaussian(2, 1.0).unwrap();
        assert_eq!(g.eval(&[0.0, 0.0]).unwrap(), 0.0);
        let e = FunctionRep::s_envelope(2, 0.5, 1.0).unwrap();
        assert_eq!(e.eval(&[2.0, 0.0]).unwrap(), f64::INFINITY);
        assert_eq!(e.eval(&[2f64.sqrt(), 0.0]).unwrap(), f64::INFINITY);
        assert!(q.eval(&[1.0]).is_err());
    }

    #[test]
    fn closed_form_gradients() {
        let g = FunctionRep::gaussian(2, 2.0).unwrap();
        assert_eq!(g.gradient(&[1.0, 0.0]).unwrap(), vec![4.0, 0.0]);
        let e = FunctionRep::s_envelope(2, 0.5, 1.0).unwrap();
        let grad = e.gradient(&[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(grad[0], 2f64.sqrt(), epsilon = 1e-12);
        // finite-difference oracle with step 1e-6
        let h = 1e-6;
        let fd = (e.eval(&[1.0 + h, 0.0]).unwrap() - e.eval(&[1.0 - h, 0.0]).unwrap()) / (2.0 * h);
        assert_abs_diff_eq!(grad[0], fd, epsilon = 1e-6);
        assert_abs_diff_eq!(grad[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn envelope_hessian_matches_fd_of_gradient() {
        let e = FunctionRep::s_envelope(2, 0.25, 1.3).unwrap();
        let x = [0.4, -0.7];
        let hess = e.hessian(&x).unwrap();
        let h = 1e-6;
        for j in 0..2 {
            let mut up = x;
            let mut dn = x;
            up[j] += h;
            dn[j] -= h;
            let gu = e.gradient(&up).unwrap();
            let gd = e.gradient(&dn).unwrap();
            for i in 0..2 {
                assert_abs_diff_eq!(hess[(i, j)], (gu[i] - gd[i]) / (2.0 * h), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn sampled_gradient_and_hessian_are_second_order() {
        let grid = Grid::cube(2, 3.0, 61).unwrap();
        let half = FunctionRep::gaussian(2, 1.0).unwrap().sample_on(&grid).unwrap();
        let g = half.gradient(&[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(g[0], 0.5, epsilon = 1e-10);
        let q = FunctionRep::quadratic(diag(&[1.0, 2.0]), 0.0).unwrap().sample_on(&grid).unwrap();
        let h = q.hessian(&[0.3, -0.6]).unwrap();
        assert_abs_diff_eq!(h[(0, 0)], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(h[(1, 1)], 4.0, epsilon = 1e-8);
        assert_abs_diff_eq!(h[(0, 1)], 0.0, epsilon = 1e-8);
    }

    #[test]
    fn sampled_hessian_error_shrinks_quadratically() {
        // psi = exp(x) + exp(y): Hessian diag(e^x, e^y)
        let f = |x: &[f64]| x[0].exp() + x[1].exp();
        let x0 = [0.2, 0.2];
        let mut errs = vec![];
        for count in [21usize, 41, 81] {
            let grid = Grid::cube(2, 1.0, count).unwrap();
            let vals = (0..grid.len()).map(|i| f(&grid.node(i))).collect();
            let s = FunctionRep::sampled(grid, vals).unwrap();
            let h = s.hessian(&x0).unwrap();
            errs.push((h[(0, 0)] - 0.2f64.exp()).abs());
        }
        // interpolation at an off-node point adds O(h^2) too; ratio ≈ 4
        assert!(errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0, "{errs:?}");
    }

    #[test]
    fn boundary_stencil_is_an_error() {
        let grid = Grid::cube(1, 1.0, 21).unwrap();
        let s = FunctionRep::gaussian(1, 1.0).unwrap().sample_on(&grid).unwrap();
        assert!(matches!(s.gradient(&[1.0]), Err(Error::Boundary(_))));
        assert!(matches!(s.hessian(&[0.95]), Err(Error::Boundary(_))));
    }

    #[test]
    fn non_convex_samples_rejected() {
        let grid = Grid::cube(1, 1.0, 11).unwrap();
        let vals = (0..grid.len()).map(|i| -grid.node(i)[0].powi(2)).collect();
        assert!(FunctionRep::sampled(grid, vals).is_err());
    }

    #[test]
    fn regular_set_of_gaussian_has_unit_determinant() {
        let grid = Grid::cube(2, 4.0, 33).unwrap();
        let rs = regular_set(&FunctionRep::gaussian(2, 1.0).unwrap(), &grid).unwrap();
        assert_eq!(rs.len(), grid.len());
        assert!(rs.hess_dets.iter().all(|d| (d - 1.0).abs() < 1e-14));
    }

    #[test]
    fn regular_set_excludes_flat_region() {
        let grid = Grid::cube(2, 3.0, 61).unwrap();
        let vals: Vec<f64> = (0..grid.len()).map(|i| (norm2(&grid.node(i)).sqrt() - 1.0).max(0.0)).collect();
        let psi = FunctionRep::sampled(grid.clone(), vals).unwrap();
        match regular_set(&psi, &grid) {
            Ok(rs) => {
                for i in 0..rs.len() {
                    assert!(norm2(rs.position(i)).sqrt() > 0.8, "flat point {:?} kept", rs.position(i));
                }
            }
            Err(Error::Degenerate(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn regular_set_of_envelope_stays_inside_support() {
        let grid = Grid::cube(2, 1.5, 41).unwrap();
        let e = FunctionRep::s_envelope(2, 0.5, 1.0).unwrap();
        let rs = regular_set(&e, &grid).unwrap();
        for i in 0..rs.len() {
            let r2 = norm2(rs.position(i));
            assert!(r2 < 2.0);
            // det = c^{2n} (1 - s c^2 |x|^2)^{-(n+2)/2}
            let expected = (1.0 - 0.5 * r2).powf(-2.0);
            assert!((rs.hess_dets[i] / expected - 1.0).abs() < 1e-10);
        }
        // the sampled version drops a band near the boundary via the stencil rule
        let sampled = e.sample_on(&grid).unwrap();
        let srs = regular_set(&sampled, &grid).unwrap();
        assert!(srs.len() < rs.len());
    }

    #[test]
    fn composition_rules() {
        let a = diag(&[1.0, 3.0]);
        let t = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let q = FunctionRep::quadratic(a.clone(), 0.5).unwrap();
        match q.compose_linear(&t).unwrap().kind() {
            Kind::Quadratic { a: at, offset } => {
                assert_eq!(*offset, 0.5);
                assert!((at - t.transpose() * &a * &t).abs().max() < 1e-14);
            }
            _ => panic!("quadratic must stay quadratic"),
        }
        let g = FunctionRep::gaussian(2, 1.0).unwrap();
        let comp = g.compose_linear(&t).unwrap();
        let back = comp.compose_linear(&t.clone().try_inverse().unwrap()).unwrap();
        for x in [[0.3, -1.2], [2.0, 0.5]] {
            assert_abs_diff_eq!(back.eval(&x).unwrap(), g.eval(&x).unwrap(), epsilon = 1e-13);
        }
        let th: f64 = 0.7;
        let rot = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
        let rg = g.compose_linear(&rot).unwrap();
        assert_abs_diff_eq!(rg.eval(&[1.0, 2.0]).unwrap(), g.eval(&[1.0, 2.0]).unwrap(), epsilon = 1e-13);
        assert!(g.compose_linear(&DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn translation_and_affine_terms() {
        let g = FunctionRep::gaussian(2, 1.0).unwrap();
        let tz = g.translate(&[1.0, -2.0]).unwrap();
        assert_abs_diff_eq!(tz.eval(&[0.0, 0.0]).unwrap(), 2.5, epsilon = 1e-14);
        let grad = tz.gradient(&[-1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(grad[0], 0.0, epsilon = 1e-14);
        let aff = g.add_affine(&[1.0, 0.0], 3.0).unwrap();
        assert_abs_diff_eq!(aff.eval(&[2.0, 0.0]).unwrap(), 2.0 + 2.0 + 3.0, epsilon = 1e-14);
    }

    #[test]
    fn ridge_is_smooth_and_convex() {
        let base = FunctionRep::gaussian(2, 1.0).unwrap();
        let r = FunctionRep::ridged(base, vec![Ridge { direction: vec![1.0, 0.5], offset: 0.3, amplitude: 0.7 }]).unwrap();
        let x = [0.4, -0.2];
        let g = r.gradient(&x).unwrap();
        let h = 1e-6;
        let fd = (r.eval(&[x[0] + h, x[1]]).unwrap() - r.eval(&[x[0] - h, x[1]]).unwrap()) / (2.0 * h);
        assert_abs_diff_eq!(g[0], fd, epsilon = 1e-7);
        assert!(r.hessian(&x).unwrap().cholesky().is_some());
        assert_abs_diff_eq!(ln_cosh(800.0), 800.0 - std::f64::consts::LN_2, epsilon = 1e-9);
    }

    #[test]
    fn csv_round_trip_is_exact_at_nodes() {
        let grid = Grid::cube(2, 2.0, 7).unwrap();
        let e = FunctionRep::s_envelope(2, 0.5, 1.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        e.write_csv(&grid, &path).unwrap();
        let back = read_grid_csv(&grid, &path).unwrap();
        for i in 0..grid.len() {
            let x = grid.node(i);
            let a = e.eval(&x).unwrap();
            let b = back.eval(&x).unwrap();
            assert!(a == b || (a.is_infinite() && b.is_infinite()), "{a} vs {b}");
        }
    }
}
