//! Dualities: the Legendre transform and polar dual, the s-concave dual and
//! its gradient map, the `F̆` envelope of two weights, and centering at the
//! point minimising a dual integral.
//!
//! Most functionals never build the dual on a grid. They use a *view*: the
//! primal regular set re-read through the gradient map, which carries exact
//! dual positions, values, weights and Hessian determinants.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::funcrep::{dot, regular_set, AffineMap, FunctionRep, Grid, Kind, RegularSet};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::quadrature::{pairwise_sum, WeightFunction};

/// Nodes per axis when a grid is chosen automatically.
pub fn default_count(dim: usize) -> usize {
    match dim {
        1 => 401,
        2 => 121,
        _ => 31,
    }
}

/// Data of `psi*` at the points `grad psi(x)` of a primal regular set.
/// Weights become `w det ∇²psi`, so sums over the view are pushforward
/// integrals.
pub fn legendre_view(rs: &RegularSet) -> RegularSet {
    let n = rs.dim;
    let mut out = rs.clone();
    out.positions = rs.gradients.clone();
    out.gradients = rs.positions.clone();
    out.values = (0..rs.len()).map(|i| rs.conjugate_value(i)).collect();
    out.weights = (0..rs.len()).map(|i| rs.weights[i] * rs.hess_dets[i]).collect();
    out.hess_dets = rs.hess_dets.iter().map(|d| 1.0 / d).collect();
    out.hessians = Vec::with_capacity(rs.hessians.len());
    for i in 0..rs.len() {
        match rs.hessian(i) {
            Some(h) => {
                let m = DMatrix::from_row_slice(n, n, h);
                let inv = m.try_inverse().unwrap_or_else(|| DMatrix::from_element(n, n, f64::NAN));
                out.hessians.extend(inv.transpose().iter());
            }
            None => {
                out.hessians.clear();
                break;
            }
        }
    }
    out.eps_det = 0.0;
    out
}

/// `1 + s<x, grad psi> - s psi` at point `i`.
pub fn psi_tilde(rs: &RegularSet, s: f64, i: usize) -> f64 {
    1.0 + s * rs.conjugate_value(i)
}

/// Data of the s-dual at the points `T_psi(x)`. Weights are the pushforward
/// weights `w (1 - s psi) det ∇²psi / psi~^{n+1}`; Hessians are not tracked.
pub fn s_dual_view(rs: &RegularSet, s: f64) -> RegularSet {
    let n = rs.dim;
    let mut out = rs.clone();
    out.hessians.clear();
    out.eps_det = 0.0;
    for i in 0..rs.len() {
        let x = rs.position(i);
        let g = rs.gradient(i);
        let tilde = psi_tilde(rs, s, i);
        let q = 1.0 - s * rs.values[i];
        for k in 0..n {
            out.positions[i * n + k] = g[k] / tilde;
            out.gradients[i * n + k] = x[k] / q;
        }
        let y = &out.positions[i * n..(i + 1) * n];
        out.values[i] = (dot(x, y) - rs.values[i]) / q;
        out.weights[i] = rs.weights[i] * q * rs.hess_dets[i] / tilde.powi(n as i32 + 1);
        out.hess_dets[i] = (tilde / q).powi(n as i32 + 2) / rs.hess_dets[i];
    }
    out
}

/// A potential and its Legendre transform sampled on a dual grid.
#[derive(Clone, Debug)]
pub struct DualPair {
    pub primal: FunctionRep,
    pub primal_grid: Grid,
    pub dual: FunctionRep,
    pub dual_grid: Grid,
    /// Sup-norm of `psi** - psi` over primal regular points whose gradient
    /// lies inside the dual grid.
    pub involution_error: f64,
}

/// Inverse and transpose-inverse of an invertible matrix.
fn inverse(t: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    t.clone().try_inverse().ok_or_else(|| Error::Invalid("map matrix is singular".into()))
}

/// The Legendre transform in closed form when the kind allows it.
pub fn closed_form_legendre(psi: &FunctionRep) -> Option<FunctionRep> {
    let base = match psi.kind() {
        Kind::Quadratic { a, offset } => {
            let inv = a.clone().try_inverse()? * 0.25;
            let inv = (&inv + inv.transpose()) * 0.5;
            FunctionRep::quadratic(inv, -offset).ok()?
        }
        Kind::Gaussian { dim, c } => FunctionRep::gaussian(*dim, 1.0 / c).ok()?,
        _ => return None,
    };
    match psi.map() {
        None => Some(base),
        Some(m) => {
            // x -> psi(Tx + b) + <l, x> + k  has conjugate
            // y -> psi*(T^{-t}(y - l)) - <T^{-1} b, y - l> - k.
            let tinv = inverse(&m.t).ok()?;
            let tinv_t = tinv.transpose();
            let tb = &tinv * &m.shift;
            let map = AffineMap {
                shift: -(&tinv_t * &m.linear),
                linear: -&tb,
                constant: tb.dot(&m.linear) - m.constant,
                t: tinv_t,
            };
            let (kind, inner) = (base.kind().clone(), base.map().cloned());
            debug_assert!(inner.is_none());
            Some(FunctionRep::with_map(kind, Some(map)))
        }
    }
}

/// Bounding box of `points` (flattened, `dim` per point) padded by `pad`
/// times its width on every side.
pub fn padded_box(points: &[f64], dim: usize, pad: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in points.chunks(dim) {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    for k in 0..dim {
        let w = hi[k] - lo[k];
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::Grid(format!("dual range is degenerate along axis {k}")));
        }
        lo[k] -= pad * w;
        hi[k] += pad * w;
    }
    Ok((lo, hi))
}

fn auto_grid(points: &[f64], dim: usize, counts: &[usize]) -> Result<Grid> {
    let (lo, hi) = padded_box(points, dim, 0.1)?;
    Grid::new(lo, hi, counts.to_vec())
}

fn on_box_edge(grid: &Grid, idx: usize) -> bool {
    grid.multi_index(idx).iter().zip(&grid.counts).any(|(&m, &c)| m == 0 || m + 1 == c)
}

/// Finite samples of a potential on a grid: positions (flattened), values,
/// and whether each sits on the edge of the grid box.
struct Samples {
    dim: usize,
    positions: Vec<f64>,
    values: Vec<f64>,
    edge: Vec<bool>,
}

impl Samples {
    /// Samples with values below `limit` (pass `+inf` to keep every finite one).
    fn new(psi: &FunctionRep, grid: &Grid, limit: f64) -> Result<Self> {
        let all = psi.sample_values(grid)?;
        let mut out = Samples { dim: grid.dim(), positions: vec![], values: vec![], edge: vec![] };
        for (idx, v) in all.into_iter().enumerate() {
            if v.is_finite() && v < limit {
                out.positions.extend(grid.node(idx));
                out.values.push(v);
                out.edge.push(on_box_edge(grid, idx));
            }
        }
        if out.values.is_empty() {
            return Err(Error::Invalid("potential is infinite at every sample".into()));
        }
        Ok(out)
    }

    /// `max_i score(i)` with the first maximiser kept on ties; `+inf` when
    /// the maximiser lies on the box edge, where the true supremum may sit
    /// outside the sampled window.
    fn sup(&self, mut score: impl FnMut(&[f64], f64) -> f64) -> f64 {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for (i, p) in self.positions.chunks(self.dim).enumerate() {
            let v = score(p, self.values[i]);
            if v > best {
                best = v;
                arg = i;
            }
        }
        if self.edge[arg] {
            f64::INFINITY
        } else {
            best
        }
    }
}

/// Discrete conjugate `max_x <x, y> - psi(x)` at every node of `dual_grid`,
/// over the finite samples of `psi` on `primal_grid`.
pub fn discrete_conjugate(psi: &FunctionRep, primal_grid: &Grid, dual_grid: &Grid) -> Result<Vec<f64>> {
    let samples = Samples::new(psi, primal_grid, f64::INFINITY)?;
    let mut y = vec![0.0; dual_grid.dim()];
    Ok((0..dual_grid.len())
        .map(|j| {
            dual_grid.node_into(j, &mut y);
            samples.sup(|x, v| dot(x, &y) - v)
        })
        .collect())
}

fn involution_error(primal: &FunctionRep, primal_grid: &Grid, dual: &FunctionRep, dual_grid: &Grid) -> Result<f64> {
    let rs = regular_set(primal, primal_grid)?;
    let (lo, hi): (Vec<f64>, Vec<f64>) = (0..dual_grid.dim())
        .map(|k| (dual_grid.lower[k] + dual_grid.spacing()[k], dual_grid.upper[k] - dual_grid.spacing()[k]))
        .unzip();
    let inside = |g: &[f64]| g.iter().enumerate().all(|(k, v)| *v >= lo[k] && *v <= hi[k]);
    if primal.is_closed_form() && dual.is_closed_form() {
        let back = closed_form_legendre(dual);
        let mut err = 0.0f64;
        for i in 0..rs.len() {
            if !inside(rs.gradient(i)) {
                continue;
            }
            let x = rs.position(i);
            let v = match &back {
                Some(b) => b.value_at(x),
                None => continue,
            };
            err = err.max((v - rs.values[i]).abs());
        }
        return Ok(err);
    }
    let samples = Samples::new(dual, dual_grid, f64::INFINITY)?;
    let mut err = 0.0f64;
    for i in 0..rs.len() {
        if !inside(rs.gradient(i)) {
            continue;
        }
        let x = rs.position(i);
        let back = samples.sup(|y, v| dot(x, y) - v);
        if back.is_finite() {
            err = err.max((back - rs.values[i]).abs());
        }
    }
    Ok(err)
}

/// `psi*` on a dual grid. Closed forms are transformed analytically; other
/// inputs use the discrete conjugate over samples on the primal grid.
/// Missing grids are chosen automatically: the primal from the potential's
/// suggested box, the dual from the range of sampled gradients plus 10%.
pub fn legendre(psi: &FunctionRep, primal_grid: Option<&Grid>, dual_grid: Option<&Grid>) -> Result<DualPair> {
    let primal_grid = match primal_grid {
        Some(g) => g.clone(),
        None => match psi.sampled_grid() {
            Some(g) if psi.map().is_none() => g.clone(),
            _ => psi.suggested_grid(default_count(psi.dim()))?,
        },
    };
    let dual_grid = match dual_grid {
        Some(g) => g.clone(),
        None => {
            let rs = regular_set(psi, &primal_grid)?;
            auto_grid(&rs.gradients, rs.dim, &primal_grid.counts)?
        }
    };
    let dual = match closed_form_legendre(psi) {
        Some(d) => d,
        None => FunctionRep::sampled(dual_grid.clone(), discrete_conjugate(psi, &primal_grid, &dual_grid)?)?,
    };
    let involution_error = involution_error(psi, &primal_grid, &dual, &dual_grid)?;
    Ok(DualPair { primal: psi.clone(), primal_grid, dual, dual_grid, involution_error })
}

/// The potential `psi*` of the polar dual `f° = e^{-psi*}` of `f = e^{-psi}`.
pub fn polar_dual(potential: &FunctionRep) -> Result<FunctionRep> {
    Ok(legendre(potential, None, None)?.dual)
}

/// A potential with `psi < 1/s` on its support, its regular set, and the
/// s-dual data at the points `T_psi(x)`.
#[derive(Clone, Debug)]
pub struct SDualPair {
    pub s: f64,
    pub primal: FunctionRep,
    pub primal_grid: Grid,
    /// Primal regular set.
    pub rs: RegularSet,
    /// s-dual view of `rs` (see [`s_dual_view`]).
    pub view: RegularSet,
    /// `psi~(x)` per regular point.
    pub psi_tilde: Vec<f64>,
    /// The s-dual sampled on its own grid, when built by [`s_dual`].
    pub dual: Option<(FunctionRep, Grid)>,
}

impl SDualPair {
    /// `T_psi(x_i)` for regular point `i`.
    pub fn tmap(&self, i: usize) -> &[f64] {
        self.view.position(i)
    }

    /// The same pair on the coarsened primal grid, without a sampled dual.
    pub fn coarse(&self) -> Result<SDualPair> {
        s_pair(&self.primal, self.s, &self.primal_grid.coarsened()?)
    }

    pub fn dim(&self) -> usize {
        self.rs.dim
    }
}

/// Builds the primal regular set and s-dual view only. The support of
/// `f = (1 - s psi)^{1/s}` is where `psi < 1/s`; regular points outside it
/// are dropped.
pub fn s_pair(psi: &FunctionRep, s: f64, grid: &Grid) -> Result<SDualPair> {
    if !(s > 0.0) {
        return Err(Error::Invalid("s must be positive".into()));
    }
    let full = regular_set(psi, grid)?;
    let rs = full.filtered(|i| s * full.values[i] < 1.0);
    if rs.is_empty() {
        return Err(Error::Invalid("potential has no regular point with psi < 1/s on the grid".into()));
    }
    let psi_tilde: Vec<f64> = (0..rs.len()).map(|i| psi_tilde(&rs, s, i)).collect();
    if let Some(i) = psi_tilde.iter().position(|t| !(*t > 0.0)) {
        return Err(Error::Invalid(format!(
            "psi~ = {} <= 0 at {:?}: not valid s-concave data",
            psi_tilde[i],
            rs.position(i)
        )));
    }
    let view = s_dual_view(&rs, s);
    Ok(SDualPair { s, primal: psi.clone(), primal_grid: grid.clone(), rs, view, psi_tilde, dual: None })
}

/// The s-dual in closed form: an s-envelope with the same `s` under a
/// linear map transforms to the reciprocal envelope under `T^{-t}`.
pub fn closed_form_s_dual(psi: &FunctionRep, s: f64) -> Option<FunctionRep> {
    match psi.kind() {
        Kind::SEnvelope { dim, s: es, c } if (es - s).abs() <= 1e-15 * s => {
            let base = FunctionRep::s_envelope(*dim, s, 1.0 / c).ok()?;
            match psi.map() {
                None => Some(base),
                Some(m) if m.is_linear() => base.compose_linear(&inverse(&m.t).ok()?.transpose()).ok(),
                Some(_) => None,
            }
        }
        _ => None,
    }
}

/// Discrete s-dual `max_x (<x, y> - psi(x)) / (1 - s psi(x))` at the nodes of
/// `dual_grid`; values with `1 - s psi* <= 0` are outside the dual support
/// and stored as `+inf`.
pub fn discrete_s_conjugate(psi: &FunctionRep, s: f64, primal_grid: &Grid, dual_grid: &Grid) -> Result<Vec<f64>> {
    let samples = Samples::new(psi, primal_grid, 1.0 / s)?;
    let mut y = vec![0.0; dual_grid.dim()];
    Ok((0..dual_grid.len())
        .map(|j| {
            dual_grid.node_into(j, &mut y);
            let v = samples.sup(|x, p| (dot(x, &y) - p) / (1.0 - s * p));
            if s * v >= 1.0 {
                f64::INFINITY
            } else {
                v
            }
        })
        .collect())
}

/// The s-dual pair with the dual sampled on a grid (automatic: the range of
/// `T_psi` plus 10%).
pub fn s_dual(psi: &FunctionRep, s: f64, primal_grid: Option<&Grid>, dual_grid: Option<&Grid>) -> Result<SDualPair> {
    let primal_grid = match primal_grid {
        Some(g) => g.clone(),
        None => match psi.sampled_grid() {
            Some(g) if psi.map().is_none() => g.clone(),
            _ => psi.suggested_grid(default_count(psi.dim()))?,
        },
    };
    let mut pair = s_pair(psi, s, &primal_grid)?;
    let dual_grid = match dual_grid {
        Some(g) => g.clone(),
        None => auto_grid(&pair.view.positions, pair.dim(), &primal_grid.counts)?,
    };
    let dual = match closed_form_s_dual(psi, s) {
        Some(d) => d,
        None => FunctionRep::sampled(dual_grid.clone(), discrete_s_conjugate(psi, s, &primal_grid, &dual_grid)?)?,
    };
    pair.dual = Some((dual, dual_grid));
    Ok(pair)
}

/// `T_psi(x) = grad psi(x) / psi~(x)`.
pub fn t_map(pair: &SDualPair, x: &[f64]) -> Result<Vec<f64>> {
    let psi = &pair.primal;
    let s = pair.s;
    if let (Kind::SEnvelope { s: es, c, .. }, None) = (psi.kind(), psi.map()) {
        if (es - s).abs() <= 1e-15 * s {
            if !psi.eval(x)?.is_finite() {
                return Err(Error::Invalid(format!("{x:?} is outside the support")));
            }
            return Ok(x.iter().map(|v| c * c * v).collect());
        }
    }
    let value = psi.eval(x)?;
    let grad = psi.gradient(x)?;
    let tilde = 1.0 + s * (dot(x, &grad) - value);
    if !(tilde > 0.0) {
        return Err(Error::Invalid(format!("psi~ = {tilde} <= 0 at {x:?}")));
    }
    Ok(grad.iter().map(|g| g / tilde).collect())
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `sup_u (ln F1(m + u) + ln F2(m - u)) / 2` over `|u| <= window`: grid scan
/// then golden-section refinement around the best node.
fn inner_sup(f1: &WeightFunction, f2: &WeightFunction, m: f64, window: f64, resolution: usize) -> f64 {
    let g = |u: f64| 0.5 * (f1.ln_eval(m + u) + f2.ln_eval(m - u));
    let k = resolution.max(8);
    let h = 2.0 * window / (k - 1) as f64;
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for i in 0..k {
        let v = g(-window + i as f64 * h);
        if v > best {
            best = v;
            arg = i;
        }
    }
    let u0 = -window + arg as f64 * h;
    let (_, refined) = golden_max(&g, (u0 - h).max(-window), (u0 + h).min(window), 60);
    best.max(refined)
}

/// `F̆(t) = sup { sqrt(F1(t1) F2(t2)) : (t1 + t2)/2 >= t }` tabulated at
/// `resolution` knots on `t_range`.
///
/// The outer supremum over the mean `m >= t` is a running maximum from the
/// right over `m` up to `t_max + span`; the inner one over the offset is
/// searched on `|u| <= max(10, 2 max|m|)`. Doubling that window must not raise
/// the value, otherwise the envelope is reported unbounded.
pub fn breve(f1: &WeightFunction, f2: &WeightFunction, t_range: (f64, f64), resolution: usize) -> Result<WeightFunction> {
    let (lo, hi) = t_range;
    if !(lo < hi) || resolution < 2 {
        return Err(Error::Invalid("breve needs lo < hi and at least two knots".into()));
    }
    let span = hi - lo;
    let window = (2.0 * lo.abs().max((hi + span).abs())).max(10.0);
    let h = span / (resolution - 1) as f64;
    let extra = resolution;
    let ms: Vec<f64> = (0..resolution + extra).map(|i| lo + i as f64 * h).collect();
    let mut g: Vec<f64> = Vec::with_capacity(ms.len());
    for &m in &ms {
        let v = inner_sup(f1, f2, m, window, 4 * resolution);
        let wide = inner_sup(f1, f2, m, 2.0 * window, 8 * resolution);
        if !v.is_finite() || wide > v + 1e-9 * (1.0 + v.abs()) {
            return Err(Error::Unbounded(format!(
                "envelope sup grows with the search window at mean {m} ({v} -> {wide})"
            )));
        }
        g.push(v);
    }
    for i in (0..g.len() - 1).rev() {
        g[i] = g[i].max(g[i + 1]);
    }
    let knots = ms[..resolution].to_vec();
    let values = g[..resolution].iter().map(|v| v.exp()).collect();
    WeightFunction::tabulated(knots, values)
}

/// `ln sum_i exp(a_i)` in a fixed order.
pub fn log_sum_exp(a: &[f64]) -> f64 {
    let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let terms: Vec<f64> = a.iter().map(|v| (v - m).exp()).collect();
    m + pairwise_sum(&terms).ln()
}

/// `ln ∫ F2(psi_z*(y)) dy` over the Legendre view of a regular set, where
/// `psi_z(x) = psi(x + z)` so `psi_z*(y) = psi*(y) - <z, y>`.
pub fn ln_translated_dual_integral(view: &RegularSet, f2: &WeightFunction, z: &[f64]) -> f64 {
    let terms: Vec<f64> = (0..view.len())
        .map(|i| view.weights[i].ln() + f2.ln_eval(view.values[i] - dot(z, view.position(i))))
        .collect();
    log_sum_exp(&terms)
}

/// Minimises a translation objective by simplex search from the origin.
/// Fails when the search does not settle and the objective still slopes.
pub(crate) fn minimise_translation(dim: usize, scale: f64, objective: impl Fn(&[f64]) -> f64) -> Result<Vec<f64>> {
    let step = vec![0.1 * scale.max(1e-3); dim];
    let opts = NelderMeadOptions { max_iter: 400 * dim, rel_tol: 1e-12, abs_floor: 1e-8 };
    let m = nelder_mead(&objective, &vec![0.0; dim], &step, &opts);
    // polish from the found point with a smaller simplex
    let m2 = nelder_mead(&objective, &m.point, &vec![0.01 * scale.max(1e-3); dim], &opts);
    let best = if m2.value <= m.value { m2 } else { m };
    if !best.value.is_finite() {
        return Err(Error::Unbounded("translation objective is infinite".into()));
    }
    if !best.converged {
        let h = 1e-4 * scale.max(1e-3);
        let mut slope = 0.0f64;
        for k in 0..dim {
            let mut a = best.point.clone();
            let mut b = best.point.clone();
            a[k] += h;
            b[k] -= h;
            slope = slope.max(((objective(&a) - objective(&b)) / (2.0 * h)).abs());
        }
        if slope > 1e-4 {
            return Err(Error::Unbounded(format!("centering search did not settle; slope {slope:e}")));
        }
    }
    Ok(best.point)
}

/// The translation `z0` minimising `z -> I(F2∘psi_z*)` over the regular set,
/// and the set translated by it (positions shifted by `-z0`).
pub fn center_regular_set(rs: &RegularSet, f2: &WeightFunction) -> Result<(Vec<f64>, RegularSet)> {
    let view = legendre_view(rs);
    let scale = rs.radius();
    let z = minimise_translation(rs.dim, scale, |z| ln_translated_dual_integral(&view, f2, z))?;
    let centered = rs.translated(&z);
    Ok((z, centered))
}

/// Santaló-type centering: `z0` minimises `I(F2∘psi_z*)` with
/// `psi_z(x) = psi(x + z)`; returns `z0` and `psi_{z0}`. The primal factor
/// `I(F1∘psi_z)` does not depend on `z`, so only `F2` enters.
pub fn santalo_center(psi: &FunctionRep, f2: &WeightFunction, grid: Option<&Grid>) -> Result<(Vec<f64>, FunctionRep)> {
    let grid = match grid {
        Some(g) => g.clone(),
        None => psi.suggested_grid(default_count(psi.dim()))?,
    };
    let rs = regular_set(psi, &grid)?;
    let (z, _) = center_regular_set(&rs, f2)?;
    Ok((z.clone(), psi.translate(&z)?))
}

/// Dense vector helper used by closed forms.
#[cfg(test)]
pub(crate) fn dvec(v: &[f64]) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quad(diag: &[f64], offset: f64) -> FunctionRep {
        FunctionRep::quadratic(DMatrix::from_diagonal(&dvec(diag)), offset).unwrap()
    }

    #[test]
    fn quadratic_closed_form() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let psi = FunctionRep::quadratic(a.clone(), 0.3).unwrap();
        let pair = legendre(&psi, None, None).unwrap();
        let ainv = a.try_inverse().unwrap();
        for y in [[0.3, -0.7], [1.5, 2.0], [0.0, 0.0]] {
            let yv = dvec(&y);
            let want = 0.25 * yv.dot(&(&ainv * &yv)) - 0.3;
            assert_relative_eq!(pair.dual.eval(&y).unwrap(), want, epsilon = 1e-12);
        }
        assert!(pair.involution_error < 1e-9);
    }

    #[test]
    fn gaussian_is_self_dual() {
        let psi = FunctionRep::gaussian(2, 1.0).unwrap();
        let d = polar_dual(&psi).unwrap();
        for y in [[0.4, -1.1], [3.0, 0.0]] {
            assert_relative_eq!(d.eval(&y).unwrap(), psi.eval(&y).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn discrete_conjugate_of_abs() {
        // conjugate of |x| is 0 on [-1, 1] and +inf beyond
        let grid = Grid::cube(1, 3.0, 601).unwrap();
        let vals: Vec<f64> = (0..grid.len()).map(|i| grid.node(i)[0].abs()).collect();
        let psi = FunctionRep::sampled(grid.clone(), vals).unwrap();
        let dual_grid = Grid::cube(1, 2.0, 81).unwrap();
        let d = discrete_conjugate(&psi, &grid, &dual_grid).unwrap();
        for (j, v) in d.iter().enumerate() {
            let y = dual_grid.node(j)[0];
            if y.abs() < 0.99 {
                assert!(v.abs() < 1e-12, "y={y} v={v}");
            } else if y.abs() > 1.01 {
                assert!(v.is_infinite());
            }
        }
    }

    #[test]
    fn discrete_conjugate_of_quadratic_is_accurate() {
        let psi = quad(&[1.0, 1.0], 0.0);
        let grid = Grid::cube(2, 2.0, 161).unwrap();
        let dual_grid = Grid::cube(2, 2.0, 41).unwrap();
        let d = discrete_conjugate(&psi.sample_on(&grid).unwrap(), &grid, &dual_grid).unwrap();
        for (j, v) in d.iter().enumerate() {
            let y = dual_grid.node(j);
            let want = 0.25 * (y[0] * y[0] + y[1] * y[1]);
            assert!((v - want).abs() < 2.0 * grid.max_spacing().powi(2), "{y:?}: {v} vs {want}");
        }
    }

    #[test]
    fn young_inequality_on_samples() {
        let psi = quad(&[1.0, 3.0], 0.2).sample_on(&Grid::cube(2, 2.0, 41).unwrap()).unwrap();
        let pair = legendre(&psi, None, None).unwrap();
        let pg = &pair.primal_grid;
        let dg = &pair.dual_grid;
        for i in (0..pg.len()).step_by(7) {
            let x = pg.node(i);
            let px = psi.eval(&x).unwrap();
            for j in (0..dg.len()).step_by(11) {
                let y = dg.node(j);
                let dy = pair.dual.eval(&y).unwrap();
                assert!(px + dy - dot(&x, &y) >= -1e-9);
            }
        }
        assert!(pair.involution_error < 0.05, "{}", pair.involution_error);
    }

    #[test]
    fn equivariance_under_linear_maps() {
        let psi = quad(&[1.0, 2.0], 0.0);
        let t = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 0.5]);
        let composed = FunctionRep::gaussian(2, 1.0).unwrap().compose_linear(&t).unwrap();
        let lhs = closed_form_legendre(&composed).unwrap();
        let rhs = closed_form_legendre(&FunctionRep::gaussian(2, 1.0).unwrap()).unwrap();
        let tit = t.clone().try_inverse().unwrap().transpose();
        for y in [[0.3, 0.2], [-1.0, 2.0]] {
            let u = &tit * dvec(&y);
            assert_relative_eq!(lhs.eval(&y).unwrap(), rhs.eval(u.as_slice()).unwrap(), epsilon = 1e-12);
        }
        let _ = psi;
    }

    #[test]
    fn affine_closed_form_matches_discrete() {
        let psi = quad(&[1.0, 0.5], 0.1).translate(&[0.3, -0.2]).unwrap().add_affine(&[0.4, 0.1], -0.5).unwrap();
        let cf = closed_form_legendre(&psi).unwrap();
        let grid = Grid::cube(2, 4.0, 161).unwrap();
        let dg = Grid::cube(2, 1.0, 9).unwrap();
        let d = discrete_conjugate(&psi, &grid, &dg).unwrap();
        for (j, v) in d.iter().enumerate() {
            let y = dg.node(j);
            assert!((cf.eval(&y).unwrap() - v).abs() < 1e-3, "{y:?}");
        }
    }

    #[test]
    fn envelope_s_dual_is_reciprocal() {
        let e = FunctionRep::s_envelope(2, 0.5, 2.0).unwrap();
        let pair = s_dual(&e, 0.5, None, None).unwrap();
        let (d, _) = pair.dual.as_ref().unwrap();
        let want = FunctionRep::s_envelope(2, 0.5, 0.5).unwrap();
        for y in [[0.1, 0.2], [0.9, -1.3]] {
            assert_relative_eq!(d.eval(&y).unwrap(), want.eval(&y).unwrap(), epsilon = 1e-12);
        }
        // matched points: 1 / (1 - s psi*(T x)) = psi~(x)
        for i in (0..pair.rs.len()).step_by(97) {
            let v = want.eval(pair.tmap(i)).unwrap();
            assert_relative_eq!(1.0 / (1.0 - 0.5 * v), pair.psi_tilde[i], max_relative = 1e-9);
            assert_relative_eq!(pair.view.values[i], v, epsilon = 1e-9);
        }
    }

    #[test]
    fn discrete_s_dual_of_sampled_envelope() {
        let s = 0.5;
        let e = FunctionRep::s_envelope(1, s, 1.0).unwrap();
        let grid = Grid::cube(1, 2f64.sqrt(), 2001).unwrap();
        let sampled = e.sample_on(&grid).unwrap();
        let dg = Grid::cube(1, 1.2, 49).unwrap();
        let d = discrete_s_conjugate(&sampled, s, &grid, &dg).unwrap();
        for (j, v) in d.iter().enumerate() {
            let y = dg.node(j);
            assert!((v - e.eval(&y).unwrap()).abs() < 1e-3, "{y:?}: {v}");
        }
    }

    #[test]
    fn t_map_on_envelope_and_roundtrip() {
        let s = 0.5;
        let c = 1.5;
        let e = FunctionRep::s_envelope(2, s, c).unwrap();
        let pair = s_dual(&e, s, None, None).unwrap();
        let x = [0.2, -0.3];
        let y = t_map(&pair, &x).unwrap();
        assert_relative_eq!(y[0], c * c * 0.2, epsilon = 1e-15);
        let (d, _) = pair.dual.clone().unwrap();
        let back_pair = s_dual(&d, s, None, None).unwrap();
        let back = t_map(&back_pair, &y).unwrap();
        assert_relative_eq!(back[0], x[0], epsilon = 1e-12);
        assert_relative_eq!(back[1], x[1], epsilon = 1e-12);
        // generic path through the gradient agrees with the analytic one
        let m = e.compose_linear(&DMatrix::identity(2, 2)).unwrap();
        let pm = s_pair(&m, s, &m.suggested_grid(41).unwrap()).unwrap();
        let y2 = t_map(&pm, &x).unwrap();
        assert_relative_eq!(y2[1], y[1], epsilon = 1e-9);
        assert_eq!(t_map(&pair, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn s_pair_keeps_only_the_support() {
        let psi = FunctionRep::gaussian(1, 1.0).unwrap();
        let pair = s_pair(&psi, 0.5, &Grid::cube(1, 3.0, 21).unwrap()).unwrap();
        assert!(pair.rs.values.iter().all(|v| *v < 2.0));
        assert!(pair.rs.positions.iter().all(|x| x.abs() < 2.0));
        let lifted = FunctionRep::quadratic(DMatrix::identity(1, 1), 2.5).unwrap();
        assert!(s_pair(&lifted, 0.5, &Grid::cube(1, 3.0, 21).unwrap()).is_err());
        assert!(s_pair(&psi, 0.0, &Grid::cube(1, 3.0, 21).unwrap()).is_err());
    }

    #[test]
    fn breve_of_equal_exponentials() {
        let e = WeightFunction::ExpNeg;
        let b = breve(&e, &e, (0.0, 5.0), 51).unwrap();
        for t in [0.0, 1.3, 4.9] {
            assert_relative_eq!(b.eval(t), (-t).exp(), max_relative = 1e-9);
        }
        let one = WeightFunction::ConstOne;
        let b = breve(&one, &one, (0.0, 5.0), 11).unwrap();
        assert_relative_eq!(b.eval(2.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn breve_characterisation() {
        // F1(t + a) = b F̆(t) and b F2(t - a) = F̆(t) reproduce F̆
        let (a, b) = (0.7, 2.0);
        let base = WeightFunction::ExpNeg;
        let f1 = WeightFunction::scaled_shifted(base.clone(), a, b).unwrap();
        let f2 = WeightFunction::scaled_shifted(base.clone(), -a, 1.0 / b).unwrap();
        let env = breve(&f1, &f2, (0.0, 4.0), 41).unwrap();
        for t in [0.5, 2.0, 3.5] {
            assert_relative_eq!(env.eval(t), base.eval(t), max_relative = 1e-8);
        }
    }

    #[test]
    fn breve_dominates_diagonal_and_decreases() {
        let f1 = WeightFunction::Power { alpha: 3.0 };
        let f2 = WeightFunction::Power { alpha: 2.0 };
        let env = breve(&f1, &f2, (0.0, 6.0), 31).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=60 {
            let t = i as f64 * 0.1;
            let v = env.eval(t);
            assert!(v <= prev + 1e-15);
            assert!(v >= (f1.eval(t) * f2.eval(t)).sqrt() * (1.0 - 1e-9));
            if i % 2 == 0 {
                // knot; the sup sits where the power-3 factor is 1
                assert_relative_eq!(v, 1.0 / (1.0 + 2.0 * t), max_relative = 1e-6);
            }
            prev = v;
        }
    }

    #[test]
    fn breve_unbounded_is_reported() {
        let f1 = WeightFunction::scaled_shifted(WeightFunction::ExpNeg, 0.0, 1.0).unwrap();
        let steep = WeightFunction::tabulated(vec![0.0, 1.0], vec![1.0, (-3.0f64).exp()]).unwrap();
        assert!(matches!(breve(&steep, &f1, (0.0, 2.0), 11), Err(Error::Unbounded(_))));
    }

    #[test]
    fn centering() {
        let f2 = WeightFunction::ExpNeg;
        let even = quad(&[1.0, 2.0], 0.0);
        let (z, _) = santalo_center(&even, &f2, Some(&Grid::cube(2, 5.0, 61).unwrap())).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-4), "{z:?}");
        let v = [0.4, -0.3];
        let shifted = even.translate(&[-v[0], -v[1]]).unwrap();
        let (z, centered) = santalo_center(&shifted, &f2, Some(&Grid::cube(2, 5.0, 61).unwrap())).unwrap();
        assert!((z[0] - v[0]).abs() < 1e-3 && (z[1] - v[1]).abs() < 1e-3, "{z:?}");
        assert_relative_eq!(centered.eval(&[0.1, 0.2]).unwrap(), even.eval(&[0.1, 0.2]).unwrap(), epsilon = 1e-5);
        let g = FunctionRep::gaussian(2, 1.0).unwrap();
        let (z, _) = santalo_center(&g, &f2, Some(&Grid::cube(2, 8.0, 41).unwrap())).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-4));
    }
}
