//! Pre-images of the real axis and of the unit circle ("X-ray"), traced by
//! predictor-corrector continuation, plus strip and embracing reports and
//! SVG/CSV rendering.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluator::FunctionHandle;
use crate::format::fmt_num;
use crate::zeros::{count_zeros_in, SearchRegion, ZeroFinderConfig, ZeroRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CurveKind {
    RealPreimage,
    UnitCirclePreimage,
}

impl CurveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveKind::RealPreimage => "real_preimage",
            CurveKind::UnitCirclePreimage => "unit_circle_preimage",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    GammaK0,
    GammaKj,
    ClosedLoop,
    Unclassified,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::GammaK0 => "gamma_k0",
            Classification::GammaKj => "gamma_kj",
            Classification::ClosedLoop => "closed_loop",
            Classification::Unclassified => "unclassified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceConfig {
    pub window: SearchRegion,
    pub grid_step: f64,
    pub arc_step: f64,
    pub corrector_tol: f64,
    pub max_points: usize,
    /// `|G'|` below this stops the trace at a node.
    pub node_tol: f64,
}

impl TraceConfig {
    pub fn new(window: SearchRegion) -> Self {
        TraceConfig { window, grid_step: 0.25, arc_step: 0.02, corrector_tol: 1e-9, max_points: 20_000, node_tol: 1e-8 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.arc_step < self.grid_step) {
            return Err(Error::InvalidArgument(format!("arc_step {} must be below grid_step {}", self.arc_step, self.grid_step)));
        }
        if !(self.corrector_tol < self.arc_step / 10.0) {
            return Err(Error::InvalidArgument(format!("corrector_tol {} must be below arc_step/10", self.corrector_tol)));
        }
        if self.max_points < 2 {
            return Err(Error::InvalidArgument("max_points must be at least 2".into()));
        }
        Ok(())
    }

    fn edges_touched(&self, z: Complex64) -> Option<Edge> {
        let w = &self.window;
        if z.re < w.sigma_min {
            Some(Edge::Left)
        } else if z.re > w.sigma_max {
            Some(Edge::Right)
        } else if z.im < w.t_min {
            Some(Edge::Bottom)
        } else if z.im > w.t_max {
            Some(Edge::Top)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub point: Complex64,
    pub kind: CurveKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveComponent {
    pub points: Vec<Complex64>,
    /// `f` at each point.
    pub values: Vec<Complex64>,
    pub kind: CurveKind,
    pub classification: Classification,
    /// `(min, max)` of `Re f`; real pre-images only.
    pub f_range: Option<(f64, f64)>,
    pub exits: Vec<Edge>,
    pub closed: bool,
    /// Where the trace stopped at a (near-)critical point.
    pub nodes: Vec<Complex64>,
}

impl CurveComponent {
    /// Largest on-curve residual: `|Im f|` or `||f| - 1|`.
    pub fn max_residual(&self) -> f64 {
        self.values.iter().map(|f| level_residual(self.kind, *f)).fold(0.0, f64::max)
    }

    /// Distance from `z` to the polyline.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        match self.points.len() {
            0 => f64::INFINITY,
            1 => (self.points[0] - z).norm(),
            _ => self.points.windows(2).map(|w| segment_distance(z, w[0], w[1])).fold(f64::INFINITY, f64::min),
        }
    }

    fn exits_right(&self) -> bool {
        self.exits.contains(&Edge::Right)
    }
}

fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let u = ((z - a) * ab.conj()).re / len2;
    (z - (a + ab * u.clamp(0.0, 1.0))).norm()
}

fn level_residual(kind: CurveKind, f: Complex64) -> f64 {
    match kind {
        CurveKind::RealPreimage => f.im.abs(),
        CurveKind::UnitCirclePreimage => (f.norm() - 1.0).abs(),
    }
}

/// Both curve families are `Im G = 0`: `G = f` for the real axis and
/// `G = -i ln f` (so `Im G = -ln|f|`) for the unit circle.
struct Level {
    im_g: f64,
    dg: Complex64,
    f: Complex64,
}

fn level(h: &FunctionHandle, s: Complex64, kind: CurveKind) -> Result<Level> {
    let (f, d) = h.value_and_derivative(s)?;
    Ok(match kind {
        CurveKind::RealPreimage => Level { im_g: f.im, dg: d, f },
        CurveKind::UnitCirclePreimage => Level { im_g: -f.norm().ln(), dg: Complex64::new(0.0, -1.0) * d / f, f },
    })
}

fn level_value(h: &FunctionHandle, s: Complex64, kind: CurveKind) -> Result<f64> {
    let f = h.value(s)?;
    Ok(match kind {
        CurveKind::RealPreimage => f.im,
        CurveKind::UnitCirclePreimage => -f.norm().ln(),
    })
}

/// Newton steps normal to the level curve until `|Im G|` meets the tolerance.
fn correct(h: &FunctionHandle, mut s: Complex64, kind: CurveKind, tol: f64, max_iter: usize) -> Result<Option<(Complex64, Level)>> {
    let inner_tol = match kind {
        CurveKind::RealPreimage => tol,
        CurveKind::UnitCirclePreimage => 0.5 * tol,
    };
    for _ in 0..=max_iter {
        let l = level(h, s, kind)?;
        if l.im_g.abs() <= inner_tol && level_residual(kind, l.f) <= tol {
            return Ok(Some((s, l)));
        }
        let g = l.dg.norm();
        if g == 0.0 || !g.is_finite() {
            return Ok(None);
        }
        let normal = Complex64::new(0.0, 1.0) * l.dg.conj() / g;
        s -= normal * (l.im_g / g);
    }
    Ok(None)
}

/// One seed per strict sign change of the level function along each grid
/// edge, bisected and then corrected onto the curve.
pub fn find_seeds(h: &FunctionHandle, cfg: &TraceConfig) -> Result<Vec<Seed>> {
    cfg.validate()?;
    let w = cfg.window;
    let nx = (w.width() / cfg.grid_step).ceil().max(1.0) as usize;
    let ny = (w.height() / cfg.grid_step).ceil().max(1.0) as usize;
    let node = |i: usize, j: usize| {
        Complex64::new(w.sigma_min + w.width() * i as f64 / nx as f64, w.t_min + w.height() * j as f64 / ny as f64)
    };
    let grid: Vec<Vec<Complex64>> = (0..=ny)
        .into_par_iter()
        .map(|j| (0..=nx).map(|i| h.value(node(i, j))).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut edges = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            if i < nx {
                edges.push(((i, j), (i + 1, j)));
            }
            if j < ny {
                edges.push(((i, j), (i, j + 1)));
            }
        }
    }
    let mut seeds = Vec::new();
    for kind in [CurveKind::RealPreimage, CurveKind::UnitCirclePreimage] {
        let lv = |f: Complex64| match kind {
            CurveKind::RealPreimage => f.im,
            CurveKind::UnitCirclePreimage => -f.norm().ln(),
        };
        let found: Vec<Option<Complex64>> = edges
            .par_iter()
            .map(|&((i0, j0), (i1, j1))| {
                let (va, vb) = (lv(grid[j0][i0]), lv(grid[j1][i1]));
                if !(va * vb < 0.0) {
                    return Ok(None);
                }
                bisect_seed(h, node(i0, j0), node(i1, j1), va, kind, cfg)
            })
            .collect::<Result<_>>()?;
        let mut kept: Vec<Complex64> = Vec::new();
        for p in found.into_iter().flatten() {
            if kept.iter().all(|q| (p - *q).norm() > 1e-9) {
                kept.push(p);
            }
        }
        seeds.extend(kept.into_iter().map(|point| Seed { point, kind }));
    }
    Ok(seeds)
}

fn bisect_seed(h: &FunctionHandle, mut a: Complex64, mut b: Complex64, mut va: f64, kind: CurveKind, cfg: &TraceConfig) -> Result<Option<Complex64>> {
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        let vm = level_value(h, m, kind)?;
        if vm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if va * vm < 0.0 {
            b = m;
        } else {
            a = m;
            va = vm;
        }
        if (b - a).norm() < 1e-13 {
            break;
        }
    }
    let m = 0.5 * (a + b);
    Ok(correct(h, m, kind, cfg.corrector_tol, 8)?.map(|(s, _)| s))
}

enum Stop {
    Exit(Edge),
    Closed,
    Node(Complex64),
    MaxPoints,
}

struct HalfTrace {
    points: Vec<Complex64>,
    values: Vec<Complex64>,
    stop: Stop,
}

fn trace_direction(h: &FunctionHandle, start: Complex64, start_level: &Level, sign: f64, kind: CurveKind, cfg: &TraceConfig, budget: usize) -> Result<HalfTrace> {
    let mut points = Vec::new();
    let mut values = Vec::new();
    let mut s = start;
    let mut dg = start_level.dg;
    let mut tangent = dg.conj() / dg.norm() * sign;
    let mut travelled = 0.0;
    let mut step = cfg.arc_step;
    let min_step = cfg.arc_step / 1024.0;
    loop {
        if points.len() >= budget {
            return Ok(HalfTrace { points, values, stop: Stop::MaxPoints });
        }
        if dg.norm() < cfg.node_tol {
            return Ok(HalfTrace { points, values, stop: Stop::Node(s) });
        }
        let mut accepted = None;
        while step >= min_step {
            let predicted = s + tangent * step;
            if let Some((q, l)) = correct(h, predicted, kind, cfg.corrector_tol, 6)? {
                let g = l.dg.norm();
                if g > 0.0 {
                    let mut t_new = l.dg.conj() / g;
                    if (t_new * tangent.conj()).re < 0.0 {
                        t_new = -t_new;
                    }
                    let turn = (t_new * tangent.conj()).arg().abs();
                    let drift = (q - predicted).norm();
                    if turn < 0.25 && drift < 0.25 * step && (q - s).norm() <= 1.5 * cfg.arc_step {
                        accepted = Some((q, l, t_new, turn));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        let Some((q, l, t_new, turn)) = accepted else {
            return Ok(HalfTrace { points, values, stop: Stop::Node(s) });
        };
        if let Some(edge) = cfg.edges_touched(q) {
            return Ok(HalfTrace { points, values, stop: Stop::Exit(edge) });
        }
        travelled += (q - s).norm();
        if travelled > 3.0 * cfg.arc_step && (q - start).norm() < 0.75 * cfg.arc_step {
            return Ok(HalfTrace { points, values, stop: Stop::Closed });
        }
        s = q;
        dg = l.dg;
        tangent = t_new;
        points.push(q);
        values.push(l.f);
        if turn < 0.05 {
            step = (step * 1.5).min(cfg.arc_step);
        }
    }
}

/// Traces the whole component through `seed` in both directions.
pub fn trace_component(h: &FunctionHandle, seed: Complex64, kind: CurveKind, cfg: &TraceConfig) -> Result<CurveComponent> {
    cfg.validate()?;
    let Some((s0, l0)) = correct(h, seed, kind, cfg.corrector_tol, 8)? else {
        let residual = level_residual(kind, h.value(seed)?);
        return Err(Error::SeedNotOnCurve { seed, residual });
    };
    if l0.dg.norm() <= 10.0 * cfg.corrector_tol {
        return Err(Error::SeedNotOnCurve { seed, residual: level_residual(kind, l0.f) });
    }
    let fwd = trace_direction(h, s0, &l0, 1.0, kind, cfg, cfg.max_points - 1)?;
    let mut exits = Vec::new();
    let mut nodes = Vec::new();
    let mut closed = false;
    let mut points;
    let mut values;
    let note = |stop: &Stop, exits: &mut Vec<Edge>, nodes: &mut Vec<Complex64>| match stop {
        Stop::Exit(e) => exits.push(*e),
        Stop::Node(z) => nodes.push(*z),
        _ => {}
    };
    if matches!(fwd.stop, Stop::Closed) {
        closed = true;
        points = vec![s0];
        values = vec![l0.f];
        points.extend(fwd.points);
        values.extend(fwd.values);
    } else {
        let remaining = cfg.max_points.saturating_sub(1 + fwd.points.len());
        let bwd = trace_direction(h, s0, &l0, -1.0, kind, cfg, remaining)?;
        note(&bwd.stop, &mut exits, &mut nodes);
        note(&fwd.stop, &mut exits, &mut nodes);
        points = bwd.points.into_iter().rev().collect();
        values = bwd.values.into_iter().rev().collect();
        points.push(s0);
        values.push(l0.f);
        points.extend(fwd.points);
        values.extend(fwd.values);
        // right exit last, so Re f increases toward it on gamma_k0
        if exits.first() == Some(&Edge::Right) && exits.get(1) != Some(&Edge::Right) {
            points.reverse();
            values.reverse();
            exits.reverse();
        }
    }
    let f_range = match kind {
        CurveKind::RealPreimage => Some(values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| (lo.min(f.re), hi.max(f.re)))),
        CurveKind::UnitCirclePreimage => None,
    };
    let mut c = CurveComponent { points, values, kind, classification: Classification::Unclassified, f_range, exits, closed, nodes };
    c.classification = classify_component(&c);
    Ok(c)
}

pub fn classify_component(c: &CurveComponent) -> Classification {
    if c.closed {
        return Classification::ClosedLoop;
    }
    if c.kind != CurveKind::RealPreimage {
        return Classification::Unclassified;
    }
    let max_re = c.f_range.map_or(f64::INFINITY, |r| r.1);
    if c.exits_right() {
        if max_re < 1.0 {
            Classification::GammaK0
        } else {
            Classification::Unclassified
        }
    } else {
        Classification::GammaKj
    }
}

/// Spatial buckets of traced points, used to skip seeds on curves already traced.
struct Coverage {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<(CurveKind, Complex64)>>,
}

impl Coverage {
    fn new(cell: f64) -> Self {
        Coverage { cell, buckets: HashMap::new() }
    }

    fn key(&self, z: Complex64) -> (i64, i64) {
        ((z.re / self.cell).floor() as i64, (z.im / self.cell).floor() as i64)
    }

    fn insert(&mut self, c: &CurveComponent) {
        for &p in &c.points {
            let k = self.key(p);
            self.buckets.entry(k).or_default().push((c.kind, p));
        }
    }

    fn covers(&self, kind: CurveKind, z: Complex64, radius: f64) -> bool {
        let (kx, ky) = self.key(z);
        (kx - 1..=kx + 1).any(|x| {
            (ky - 1..=ky + 1).any(|y| {
                self.buckets
                    .get(&(x, y))
                    .is_some_and(|v| v.iter().any(|(k, p)| *k == kind && (*p - z).norm() <= radius))
            })
        })
    }
}

/// Traces every seed not already lying on a traced component, in seed order.
pub fn trace_all(h: &FunctionHandle, seeds: &[Seed], cfg: &TraceConfig) -> Result<Vec<CurveComponent>> {
    let mut coverage = Coverage::new(cfg.arc_step);
    let mut out: Vec<CurveComponent> = Vec::new();
    for seed in seeds {
        if coverage.covers(seed.kind, seed.point, cfg.arc_step) {
            continue;
        }
        let c = match trace_component(h, seed.point, seed.kind, cfg) {
            Ok(c) => c,
            Err(Error::SeedNotOnCurve { .. }) => continue,
            Err(e) => return Err(e),
        };
        coverage.insert(&c);
        out.push(c);
    }
    Ok(out)
}

/// Seeds plus tracing over the configured window.
pub fn xray(h: &FunctionHandle, cfg: &TraceConfig) -> Result<Vec<CurveComponent>> {
    let seeds = find_seeds(h, cfg)?;
    trace_all(h, &seeds, cfg)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StripReport {
    pub sigma_ref: f64,
    pub intercepts: Vec<f64>,
    pub spacings: Vec<f64>,
    /// Zeros in the window between consecutive intercepts.
    pub zero_counts: Vec<usize>,
    /// Components or strips that could not be measured.
    pub gaps: Vec<String>,
}

impl StripReport {
    pub fn mean_spacing(&self) -> Option<f64> {
        (!self.spacings.is_empty()).then(|| self.spacings.iter().sum::<f64>() / self.spacings.len() as f64)
    }

    /// Least-squares slope of zero count against `ln t` at strip midpoints.
    pub fn count_trend(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .zero_counts
            .iter()
            .enumerate()
            .filter_map(|(i, &n)| {
                let mid = 0.5 * (self.intercepts[i] + self.intercepts[i + 1]);
                (mid > 0.0).then(|| (mid.ln(), n as f64))
            })
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("sigma_ref={}\nstrip,t_lower,t_upper,spacing,zero_count\n", fmt_num(self.sigma_ref));
        for (i, sp) in self.spacings.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                i + 1,
                fmt_num(self.intercepts[i]),
                fmt_num(self.intercepts[i + 1]),
                fmt_num(*sp),
                self.zero_counts.get(i).map(|n| n.to_string()).unwrap_or_default()
            );
        }
        let _ = writeln!(out, "intercepts={}", self.intercepts.len());
        let _ = writeln!(out, "mean_spacing={}", self.mean_spacing().map(fmt_num).unwrap_or_default());
        let _ = writeln!(out, "count_trend_vs_ln_t={}", self.count_trend().map(fmt_num).unwrap_or_default());
        for g in &self.gaps {
            let _ = writeln!(out, "gap: {g}");
        }
        out
    }
}

/// Where the polyline first crosses `sigma = sigma_ref`, walking from the right end.
fn crossing_from_right(c: &CurveComponent, sigma_ref: f64) -> Option<f64> {
    c.points.windows(2).rev().find_map(|w| {
        let (a, b) = (w[0], w[1]);
        if (a.re - sigma_ref) * (b.re - sigma_ref) <= 0.0 && a.re != b.re {
            let u = (sigma_ref - a.re) / (b.re - a.re);
            Some(a.im + u * (b.im - a.im))
        } else {
            None
        }
    })
}

/// Seeds for `gamma_k0` curves: sign changes of `Im f` on the right edge
/// where `Re f < 1`.
fn right_edge_seeds(h: &FunctionHandle, cfg: &TraceConfig) -> Result<Vec<Seed>> {
    let w = cfg.window;
    let n = (w.height() / cfg.grid_step).ceil().max(1.0) as usize;
    let pts: Vec<Complex64> = (0..=n).map(|k| Complex64::new(w.sigma_max, w.t_min + w.height() * k as f64 / n as f64)).collect();
    let vals: Vec<Complex64> = pts.par_iter().map(|&z| h.value(z)).collect::<Result<_>>()?;
    let mut seeds = Vec::new();
    for k in 0..n {
        if vals[k].im * vals[k + 1].im < 0.0 {
            if let Some(p) = bisect_seed(h, pts[k], pts[k + 1], vals[k].im, CurveKind::RealPreimage, cfg)? {
                if h.value(p)?.re < 1.0 {
                    seeds.push(Seed { point: p, kind: CurveKind::RealPreimage });
                }
            }
        }
    }
    Ok(seeds)
}

/// `gamma_k0` intercepts with `sigma = sigma_ref` for `t` in `[t_min, t_max]`,
/// the spacings between them, and the zero count of each strip.
pub fn strip_report(h: &FunctionHandle, t_min: f64, t_max: f64, sigma_ref: f64, cfg: &TraceConfig) -> Result<StripReport> {
    let mut report = StripReport { sigma_ref, ..Default::default() };
    if !(t_min < t_max) {
        return Ok(report);
    }
    let window = SearchRegion::new(cfg.window.sigma_min, cfg.window.sigma_max, t_min, t_max)?;
    if !(window.sigma_min < sigma_ref && sigma_ref < window.sigma_max) {
        return Err(Error::InvalidArgument(format!("sigma_ref {sigma_ref} outside window {window}")));
    }
    let cfg = TraceConfig { window, ..*cfg };
    let seeds = right_edge_seeds(h, &cfg)?;
    let components = trace_all(h, &seeds, &cfg)?;
    for c in &components {
        if c.classification != Classification::GammaK0 {
            report.gaps.push(format!("component from right edge near t={} classified {}", fmt_num(c.points.last().map_or(f64::NAN, |p| p.im)), c.classification.as_str()));
            continue;
        }
        match crossing_from_right(c, sigma_ref) {
            Some(t) => report.intercepts.push(t),
            None => report.gaps.push(format!("gamma_k0 ending near t={} does not reach sigma_ref", fmt_num(c.points.last().map_or(f64::NAN, |p| p.im)))),
        }
    }
    report.intercepts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    report.intercepts.dedup_by(|a, b| (*a - *b).abs() < cfg.arc_step);
    report.spacings = report.intercepts.windows(2).map(|w| w[1] - w[0]).collect();
    let zcfg = ZeroFinderConfig::default();
    let counts: Vec<Result<usize>> = report
        .intercepts
        .par_windows(2)
        .map(|w| {
            let r = SearchRegion::new(window.sigma_min, window.sigma_max, w[0], w[1])?;
            Ok(count_zeros_in(h, &r, &zcfg)?.0)
        })
        .collect();
    for (i, c) in counts.into_iter().enumerate() {
        match c {
            Ok(n) => report.zero_counts.push(n),
            Err(e) => {
                report.zero_counts.push(0);
                report.gaps.push(format!("strip {}: {e}", i + 1));
            }
        }
    }
    Ok(report)
}

/// Number of unit-disk components leaving the right edge between `t0` and `t1`
/// (sign changes of `ln|f|` along the edge, halved).
pub fn unit_disk_right_exits(h: &FunctionHandle, cfg: &TraceConfig, t0: f64, t1: f64) -> Result<usize> {
    let n = ((t1 - t0) / (0.25 * cfg.grid_step)).ceil().max(1.0) as usize;
    let vals: Vec<f64> = (0..=n)
        .into_par_iter()
        .map(|k| Ok(h.value(Complex64::new(cfg.window.sigma_max, t0 + (t1 - t0) * k as f64 / n as f64))?.norm().ln()))
        .collect::<Result<_>>()?;
    let changes = vals.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    Ok(changes.div_ceil(2))
}

fn point_in_polygon(z: Complex64, poly: &[Complex64]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.im > z.im) != (b.im > z.im) {
            let x = a.re + (z.im - a.im) / (b.im - a.im) * (b.re - a.re);
            if z.re < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// `(embracer, embraced)` index pairs: a `gamma_kj` or closed component,
/// closed by the chord between its ends, containing every vertex of another.
pub fn detect_embracing(components: &[CurveComponent]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, c) in components.iter().enumerate() {
        if !matches!(c.classification, Classification::GammaKj | Classification::ClosedLoop) || c.points.len() < 3 {
            continue;
        }
        for (j, d) in components.iter().enumerate() {
            if i != j && !d.points.is_empty() && d.points.iter().all(|p| point_in_polygon(*p, &c.points)) {
                out.push((i, j));
            }
        }
    }
    out
}

/// True when no embraced component is `gamma_k0`.
pub fn embracing_respects_gamma_k0(components: &[CurveComponent], pairs: &[(usize, usize)]) -> bool {
    pairs.iter().all(|&(_, j)| components[j].classification != Classification::GammaK0)
}

pub const XRAY_CSV_HEADER: &str = "component_id,kind,classification,idx,sigma,t,re_f,im_f";

pub fn xray_csv(components: &[CurveComponent]) -> String {
    let mut out = String::from(XRAY_CSV_HEADER);
    out.push('\n');
    for (id, c) in components.iter().enumerate() {
        for (idx, (p, f)) in c.points.iter().zip(&c.values).enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                id + 1,
                c.kind.as_str(),
                c.classification.as_str(),
                idx,
                fmt_num(p.re),
                fmt_num(p.im),
                fmt_num(f.re),
                fmt_num(f.im)
            );
        }
    }
    out
}

pub fn export_csv(components: &[CurveComponent], out_path: &Path) -> Result<()> {
    fs::write(out_path, xray_csv(components))?;
    Ok(())
}

const PX_PER_UNIT: f64 = 100.0;
const MARGIN: f64 = 40.0;

fn stroke(c: &CurveComponent) -> &'static str {
    match (c.kind, c.classification) {
        (CurveKind::UnitCirclePreimage, _) => r##"stroke="#b0413e" stroke-width="1" stroke-dasharray="4 3""##,
        (_, Classification::GammaK0) => r##"stroke="#1b1b1b" stroke-width="1.5""##,
        (_, Classification::GammaKj) => r##"stroke="#9a9a9a" stroke-width="1.5""##,
        _ => r##"stroke="#4a6fa5" stroke-width="1""##,
    }
}

/// SVG with `sigma` to the right and `t` upward, 100 px per unit.
pub fn svg_string(window: &SearchRegion, components: &[CurveComponent], zeros: &[ZeroRecord]) -> String {
    let w = window.width() * PX_PER_UNIT + 2.0 * MARGIN;
    let h = window.height() * PX_PER_UNIT + 2.0 * MARGIN;
    let x = |s: f64| MARGIN + (s - window.sigma_min) * PX_PER_UNIT;
    let y = |t: f64| MARGIN + (window.t_max - t) * PX_PER_UNIT;
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#);
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{w:.2}" height="{h:.2}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black" stroke-width="1"/>"#,
        MARGIN,
        MARGIN,
        window.width() * PX_PER_UNIT,
        window.height() * PX_PER_UNIT
    );
    if window.sigma_min < 0.0 && 0.0 < window.sigma_max {
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="0.5"/>"#, x(0.0), y(window.t_min), x(0.0), y(window.t_max));
    }
    if window.t_min < 0.0 && 0.0 < window.t_max {
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="0.5"/>"#, x(window.sigma_min), y(0.0), x(window.sigma_max), y(0.0));
    }
    let label = |v: f64| format!("{v}");
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="10" font-family="monospace" text-anchor="middle">{}</text>"#, x(window.sigma_min), h - MARGIN / 3.0, label(window.sigma_min));
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="10" font-family="monospace" text-anchor="middle">{}</text>"#, x(window.sigma_max), h - MARGIN / 3.0, label(window.sigma_max));
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="10" font-family="monospace" text-anchor="end">{}</text>"#, MARGIN - 4.0, y(window.t_min), label(window.t_min));
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="10" font-family="monospace" text-anchor="end">{}</text>"#, MARGIN - 4.0, y(window.t_max), label(window.t_max));
    for c in components {
        let pts: Vec<String> = c.points.iter().map(|p| format!("{:.2},{:.2}", x(p.re), y(p.im))).collect();
        let _ = writeln!(out, r#"<polyline class="{}" fill="none" {} points="{}"/>"#, c.classification.as_str(), stroke(c), pts.join(" "));
    }
    for z in zeros {
        let _ = writeln!(out, r##"<circle class="zero" cx="{:.2}" cy="{:.2}" r="3" fill="#d62728"/>"##, x(z.location.re), y(z.location.im));
    }
    out.push_str("</svg>\n");
    out
}

pub fn render_svg(window: &SearchRegion, components: &[CurveComponent], zeros: &[ZeroRecord], out_path: &Path) -> Result<()> {
    fs::write(out_path, svg_string(window, components, zeros))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comp(points: Vec<Complex64>, class: Classification) -> CurveComponent {
        CurveComponent {
            values: vec![Complex64::new(0.0, 0.0); points.len()],
            points,
            kind: CurveKind::RealPreimage,
            classification: class,
            f_range: None,
            exits: vec![],
            closed: false,
            nodes: vec![],
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn config_invariants() {
        let w = SearchRegion::new(0.0, 1.0, 0.0, 1.0).unwrap();
        assert!(TraceConfig::new(w).validate().is_ok());
        assert!(TraceConfig { arc_step: 0.5, ..TraceConfig::new(w) }.validate().is_err());
        assert!(TraceConfig { corrector_tol: 0.01, ..TraceConfig::new(w) }.validate().is_err());
    }

    #[test]
    fn classification_rules() {
        let mut a = comp(vec![c(-1.0, 0.0), c(1.0, 0.0)], Classification::Unclassified);
        a.exits = vec![Edge::Left, Edge::Right];
        a.f_range = Some((-5.0, 0.999));
        assert_eq!(classify_component(&a), Classification::GammaK0);
        let mut b = a.clone();
        b.exits = vec![Edge::Left, Edge::Left];
        b.f_range = Some((-5.0, 1.5));
        assert_eq!(classify_component(&b), Classification::GammaKj);
        let mut d = a.clone();
        d.closed = true;
        assert_eq!(classify_component(&d), Classification::ClosedLoop);
        let mut e = a.clone();
        e.f_range = Some((0.0, 1.2));
        assert_eq!(classify_component(&e), Classification::Unclassified);
    }

    #[test]
    fn embracing_square_around_segment() {
        let square = comp(vec![c(0.0, 0.0), c(4.0, 0.0), c(4.0, 4.0), c(0.0, 4.0)], Classification::GammaKj);
        let inner = comp(vec![c(1.0, 2.0), c(3.0, 2.0)], Classification::GammaKj);
        assert_eq!(detect_embracing(&[square.clone(), inner]), vec![(0, 1)]);
        let beside = comp(vec![c(5.0, 2.0), c(7.0, 2.0)], Classification::GammaKj);
        assert!(detect_embracing(&[square, beside]).is_empty());
    }

    #[test]
    fn svg_axes_only_and_polyline_counts() {
        let w = SearchRegion::new(-1.0, 1.0, 0.0, 2.0).unwrap();
        let empty = svg_string(&w, &[], &[]);
        assert!(empty.starts_with("<svg") && empty.trim_end().ends_with("</svg>"));
        assert!(!empty.contains("<polyline"));
        let pts: Vec<Complex64> = (0..100).map(|k| c(-1.0 + 0.02 * k as f64, 1.0)).collect();
        let svg = svg_string(&w, &[comp(pts, Classification::GammaK0)], &[]);
        let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        let coords = line.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
        assert_eq!(coords.split(' ').count(), 100);
    }

    #[test]
    fn constant_function_has_no_seeds() {
        let spec = crate::series::SeriesSpec::zeta();
        let h = FunctionHandle::new(crate::evaluator::TruncatedGeneral::new(spec, 1).unwrap());
        let cfg = TraceConfig::new(SearchRegion::new(0.0, 2.0, 1.0, 3.0).unwrap());
        assert!(find_seeds(&h, &cfg).unwrap().is_empty());
    }

    #[test]
    fn zeta_seed_near_first_zero_and_trace_passes_it() {
        let h = FunctionHandle::zeta();
        let cfg = TraceConfig::new(SearchRegion::new(-2.0, 3.0, 10.0, 16.0).unwrap());
        let seeds = find_seeds(&h, &cfg).unwrap();
        let z0 = c(0.5, 14.134725141734693);
        let near = seeds
            .iter()
            .filter(|s| s.kind == CurveKind::RealPreimage)
            .min_by(|a, b| (a.point - z0).norm().partial_cmp(&(b.point - z0).norm()).unwrap())
            .unwrap();
        assert!((near.point - z0).norm() < 0.5, "{:?}", near.point);
        let comp = trace_component(&h, near.point, CurveKind::RealPreimage, &cfg).unwrap();
        assert!(comp.distance_to(z0) < cfg.arc_step, "{}", comp.distance_to(z0));
        assert!(comp.max_residual() <= cfg.corrector_tol);
    }

    #[test]
    fn seeds_are_on_curve() {
        let h = FunctionHandle::zeta();
        let cfg = TraceConfig::new(SearchRegion::new(2.0, 3.0, 1.0, 2.0).unwrap());
        for s in find_seeds(&h, &cfg).unwrap() {
            assert!(level_residual(s.kind, h.value(s.point).unwrap()) <= cfg.corrector_tol);
        }
    }

    #[test]
    fn unit_circle_trace_stays_on_circle() {
        let h = FunctionHandle::zeta();
        let cfg = TraceConfig::new(SearchRegion::new(-1.0, 3.0, 10.0, 16.0).unwrap());
        let seed = find_seeds(&h, &cfg).unwrap().into_iter().find(|s| s.kind == CurveKind::UnitCirclePreimage).unwrap();
        let comp = trace_component(&h, seed.point, seed.kind, &cfg).unwrap();
        assert!(comp.points.len() > 10);
        assert!(comp.max_residual() <= cfg.corrector_tol);
        assert!(comp.closed || !comp.exits.is_empty() || !comp.nodes.is_empty());
    }

    #[test]
    fn step_halving_is_stable() {
        let h = FunctionHandle::zeta();
        let cfg = TraceConfig::new(SearchRegion::new(-1.0, 3.0, 12.0, 16.0).unwrap());
        let seed = c(0.5, 14.134725141734693);
        let a = trace_component(&h, seed, CurveKind::RealPreimage, &cfg).unwrap();
        let half = TraceConfig { arc_step: cfg.arc_step / 2.0, ..cfg };
        let b = trace_component(&h, seed, CurveKind::RealPreimage, &half).unwrap();
        let worst = a.points.iter().map(|p| b.distance_to(*p)).fold(0.0, f64::max);
        let worst_back = b.points.iter().map(|p| a.distance_to(*p)).fold(0.0, f64::max);
        assert!(worst.max(worst_back) < cfg.arc_step, "{worst} {worst_back}");
    }
}
