//! Zero counting by the argument principle, localisation by recursive
//! subdivision and Newton refinement, and pairing under `s -> 1 - conj(s)`.

use std::f64::consts::PI;
use std::fmt;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluator::{reflection, FunctionHandle};
use crate::format::fmt_num;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchRegion {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl fmt::Display for SearchRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}] x [{}, {}]", self.sigma_min, self.sigma_max, self.t_min, self.t_max)
    }
}

impl SearchRegion {
    pub fn new(sigma_min: f64, sigma_max: f64, t_min: f64, t_max: f64) -> Result<Self> {
        let r = SearchRegion { sigma_min, sigma_max, t_min, t_max };
        if !(sigma_min < sigma_max && t_min < t_max) || [sigma_min, sigma_max, t_min, t_max].iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidRegion(r.to_string()));
        }
        Ok(r)
    }

    /// A region that may be empty (`t_min == t_max` etc.).
    pub fn is_empty(&self) -> bool {
        !(self.sigma_min < self.sigma_max && self.t_min < self.t_max)
    }

    pub fn width(&self) -> f64 {
        self.sigma_max - self.sigma_min
    }

    pub fn height(&self) -> f64 {
        self.t_max - self.t_min
    }

    pub fn size(&self) -> f64 {
        self.width().max(self.height())
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.sigma_min + self.sigma_max), 0.5 * (self.t_min + self.t_max))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.sigma_min && z.re <= self.sigma_max && z.im >= self.t_min && z.im <= self.t_max
    }

    pub fn expanded(&self, by: f64) -> SearchRegion {
        SearchRegion {
            sigma_min: self.sigma_min - by,
            sigma_max: self.sigma_max + by,
            t_min: self.t_min - by,
            t_max: self.t_max + by,
        }
    }

    /// Counter-clockwise corners starting at the bottom-left.
    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.sigma_min, self.t_min),
            Complex64::new(self.sigma_max, self.t_min),
            Complex64::new(self.sigma_max, self.t_max),
            Complex64::new(self.sigma_min, self.t_max),
        ]
    }

    fn perturb_edge(&self, edge: usize, by: f64) -> SearchRegion {
        let mut r = *self;
        match edge {
            0 => r.t_min -= by,
            1 => r.sigma_max += by,
            2 => r.t_max += by,
            _ => r.sigma_min -= by,
        }
        r
    }

    /// Two or four children; the long side alone is cut when the aspect ratio exceeds 2.
    fn split(&self, frac: f64) -> Vec<SearchRegion> {
        let sm = self.sigma_min + frac * self.width();
        let tm = self.t_min + frac * self.height();
        let (w, h) = (self.width(), self.height());
        if h > 2.0 * w {
            vec![SearchRegion { t_max: tm, ..*self }, SearchRegion { t_min: tm, ..*self }]
        } else if w > 2.0 * h {
            vec![SearchRegion { sigma_max: sm, ..*self }, SearchRegion { sigma_min: sm, ..*self }]
        } else {
            vec![
                SearchRegion { sigma_max: sm, t_max: tm, ..*self },
                SearchRegion { sigma_min: sm, t_max: tm, ..*self },
                SearchRegion { sigma_max: sm, t_min: tm, ..*self },
                SearchRegion { sigma_min: sm, t_min: tm, ..*self },
            ]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroFinderConfig {
    /// Newton stops once the step is below this; also sets the multiplicity disk (10x).
    pub refine_tol: f64,
    pub line_tol: f64,
    pub pair_tol: f64,
    /// Largest cell edge handed to Newton.
    pub max_newton_cell: f64,
    /// Target phase increment between boundary samples.
    pub phase_step: f64,
    /// Upper bound on the boundary sample spacing.
    pub max_spacing: f64,
    /// Relative distance (to the region size) at which a zero counts as on the boundary.
    pub boundary_tol: f64,
    pub max_perturbations: usize,
    pub newton_max_iter: usize,
    /// `|M(s)|` below this marks a trivial zero.
    pub trivial_tol: f64,
}

impl Default for ZeroFinderConfig {
    fn default() -> Self {
        ZeroFinderConfig {
            refine_tol: 1e-10,
            line_tol: 1e-6,
            pair_tol: 1e-6,
            max_newton_cell: 0.5,
            phase_step: PI / 8.0,
            max_spacing: 0.1,
            boundary_tol: 1e-7,
            max_perturbations: 3,
            newton_max_iter: 60,
            trivial_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroRecord {
    pub location: Complex64,
    pub multiplicity: u32,
    /// `|f|` at `location`.
    pub residual: f64,
    pub newton_iters: usize,
    pub on_critical_line: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroPair {
    /// Member with `sigma >= 1/2`.
    pub right: ZeroRecord,
    pub left: ZeroRecord,
    /// `|right - reflection(left)|`.
    pub pair_gap: f64,
}

impl ZeroPair {
    pub fn is_degenerate(&self) -> bool {
        self.right.location == self.left.location
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroClass {
    OnLine,
    OffLine,
}

pub fn classify_zero(z: &ZeroRecord, line_tol: f64) -> ZeroClass {
    if (z.location.re - 0.5).abs() <= line_tol {
        ZeroClass::OnLine
    } else {
        ZeroClass::OffLine
    }
}

/// Boundary walk failure: a zero sits (numerically) on the given edge.
struct OnBoundary {
    edge: usize,
}

/// Sum of phase increments of `f` along the segment `a -> b`.
fn edge_phase(h: &FunctionHandle, a: Complex64, b: Complex64, cfg: &ZeroFinderConfig, scale: f64) -> Result<std::result::Result<f64, ()>> {
    let len = (b - a).norm();
    let dir = (b - a) / len;
    let min_step = cfg.boundary_tol * scale * 1e-2;
    let dist_tol = cfg.boundary_tol * scale;
    let (mut fa, mut da) = h.value_and_derivative(a)?;
    let mut pos = 0.0;
    let mut total = 0.0;
    while pos < len {
        if fa.norm() == 0.0 || (fa / da).norm() < dist_tol {
            return Ok(Err(()));
        }
        let rate = (da / fa * dir).im.abs().max((da / fa).norm() * 0.25);
        let mut step = (cfg.phase_step / rate).min(cfg.max_spacing).min(len - pos);
        loop {
            let z = if pos + step >= len { b } else { a + dir * (pos + step) };
            let (fb, db) = h.value_and_derivative(z)?;
            let dphi = (fb / fa).arg();
            if dphi.abs() < PI / 2.0 || step <= min_step {
                if dphi.abs() >= PI / 2.0 {
                    return Ok(Err(()));
                }
                total += dphi;
                pos = if pos + step >= len { len } else { pos + step };
                fa = fb;
                da = db;
                break;
            }
            step *= 0.5;
        }
    }
    if fa.norm() == 0.0 || (fa / da).norm() < dist_tol {
        return Ok(Err(()));
    }
    Ok(Ok(total))
}

fn winding(h: &FunctionHandle, r: &SearchRegion, cfg: &ZeroFinderConfig) -> Result<std::result::Result<i64, OnBoundary>> {
    let c = r.corners();
    let scale = r.size().max(1e-3);
    let mut total = 0.0;
    for edge in 0..4 {
        match edge_phase(h, c[edge], c[(edge + 1) % 4], cfg, scale)? {
            Ok(phi) => total += phi,
            Err(()) => return Ok(Err(OnBoundary { edge })),
        }
    }
    let turns = total / (2.0 * PI);
    let n = turns.round();
    if (turns - n).abs() > 0.1 {
        return Err(Error::InvalidArgument(format!("non-integral winding {turns} on {r}")));
    }
    Ok(Ok(n as i64))
}

/// Keeps registered poles out of the region: a pole within 1e-2 of an edge
/// moves that edge inward past it; a pole further inside is an error.
pub fn exclude_poles(h: &FunctionHandle, r: &SearchRegion) -> Result<SearchRegion> {
    let margin = 1e-2;
    let mut out = *r;
    for &p in h.poles() {
        if !out.expanded(1e-3).contains(p) {
            continue;
        }
        let gaps = [p.im - out.t_min, out.sigma_max - p.re, out.t_max - p.im, p.re - out.sigma_min];
        let (edge, gap) = gaps
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, g)| (i, *g))
            .unwrap();
        if gap > margin {
            return Err(Error::PoleInRegion { region: *r, pole: p });
        }
        match edge {
            0 => out.t_min = p.im + margin,
            1 => out.sigma_max = p.re - margin,
            2 => out.t_max = p.im - margin,
            _ => out.sigma_min = p.re + margin,
        }
        if out.is_empty() {
            return Err(Error::PoleInRegion { region: *r, pole: p });
        }
    }
    Ok(out)
}

/// Winding number with the outward-perturbation rule for boundary zeros.
/// Returns the count and the region actually integrated over.
pub fn count_zeros_in(h: &FunctionHandle, r: &SearchRegion, cfg: &ZeroFinderConfig) -> Result<(usize, SearchRegion)> {
    let mut region = exclude_poles(h, r)?;
    for _ in 0..=cfg.max_perturbations {
        match winding(h, &region, cfg)? {
            Ok(n) => {
                if n < 0 {
                    return Err(Error::InvalidArgument(format!("negative winding {n} on {region}")));
                }
                return Ok((n as usize, region));
            }
            Err(OnBoundary { edge }) => region = region.perturb_edge(edge, 1e-4 * r.size()),
        }
    }
    Err(Error::BoundaryZero { region: *r, attempts: cfg.max_perturbations })
}

pub fn count_zeros(h: &FunctionHandle, r: &SearchRegion) -> Result<usize> {
    Ok(count_zeros_in(h, r, &ZeroFinderConfig::default())?.0)
}

/// Winding number of `f` around a circle; `None` if the circle passes too
/// close to a zero to resolve.
pub fn disk_multiplicity(h: &FunctionHandle, center: Complex64, radius: f64) -> Result<Option<u32>> {
    for nodes in [16usize, 64, 256] {
        let vals: Vec<Complex64> = (0..=nodes)
            .map(|k| h.value(center + Complex64::from_polar(radius, 2.0 * PI * k as f64 / nodes as f64)))
            .collect::<Result<_>>()?;
        let steps: Vec<f64> = vals.windows(2).map(|w| (w[1] / w[0]).arg()).collect();
        if steps.iter().all(|d| d.abs() < PI / 2.0) {
            let turns = steps.iter().sum::<f64>() / (2.0 * PI);
            return Ok(Some(turns.round().max(0.0) as u32));
        }
    }
    Ok(None)
}

/// Newton from `start`, stepping by `m f/f'`; returns the point and iteration count.
fn newton(h: &FunctionHandle, start: Complex64, multiplicity: u32, tol: f64, cfg: &ZeroFinderConfig) -> Result<Option<(Complex64, usize)>> {
    let mut s = start;
    let mut fs = h.value(s)?.norm();
    for it in 1..=cfg.newton_max_iter {
        let (f, d) = h.value_and_derivative(s)?;
        if d.norm() == 0.0 || !d.norm().is_finite() {
            return Ok(None);
        }
        let full = f / d * multiplicity as f64;
        // damped: halve until |f| does not grow by more than a factor 2
        let mut lambda = 1.0;
        let mut next = s - full * lambda;
        let mut fn_ = h.value(next)?.norm();
        while fn_ > 2.0 * fs.max(tol) && lambda > 1e-3 {
            lambda *= 0.5;
            next = s - full * lambda;
            fn_ = h.value(next)?.norm();
        }
        let moved = (next - s).norm();
        s = next;
        fs = fn_;
        if moved <= cfg.refine_tol && fs <= tol {
            return Ok(Some((s, it)));
        }
        if moved <= 1e-15 * (1.0 + s.norm()) {
            return Ok(if fs <= tol { Some((s, it)) } else { None });
        }
    }
    Ok(if fs <= tol { Some((s, cfg.newton_max_iter)) } else { None })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocateOutcome {
    /// Non-trivial zeros, sorted by `t` then `sigma`.
    pub zeros: Vec<ZeroRecord>,
    /// Located zeros of `M(s)`, excluded from `zeros`.
    pub trivial: Vec<ZeroRecord>,
    /// Argument-principle count over `region`.
    pub count: usize,
    /// Region actually scanned (after pole exclusion / boundary perturbation).
    pub region: SearchRegion,
}

impl LocateOutcome {
    pub fn located_multiplicity(&self) -> usize {
        self.zeros.iter().chain(&self.trivial).map(|z| z.multiplicity as usize).sum()
    }
}

const SPLIT_FRACTIONS: [f64; 4] = [0.4731, 0.5329, 0.4123, 0.5877];

fn locate_in_cell(h: &FunctionHandle, cell: SearchRegion, count: usize, tol: f64, cfg: &ZeroFinderConfig) -> Result<Vec<ZeroRecord>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let tiny = cell.size() < 1e3 * cfg.refine_tol.max(1e-12);
    if (count == 1 && cell.size() <= cfg.max_newton_cell) || tiny {
        if let Some(z) = refine_in_cell(h, &cell, count as u32, tol, cfg)? {
            return Ok(vec![z]);
        }
        if tiny {
            return Err(Error::NewtonDiverged { cell });
        }
    }
    let children = split_counted(h, &cell, count, cfg)?;
    let parts: Vec<Result<Vec<ZeroRecord>>> = children
        .into_par_iter()
        .map(|(child, n)| locate_in_cell(h, child, n, tol, cfg))
        .collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Splits `cell`, retrying other split lines when a child edge meets a zero
/// or the child counts do not add up.
fn split_counted(h: &FunctionHandle, cell: &SearchRegion, count: usize, cfg: &ZeroFinderConfig) -> Result<Vec<(SearchRegion, usize)>> {
    for &frac in &SPLIT_FRACTIONS {
        let children = cell.split(frac);
        let counted: Vec<Result<std::result::Result<i64, OnBoundary>>> =
            children.par_iter().map(|c| winding(h, c, cfg)).collect();
        let mut ok = Vec::with_capacity(children.len());
        let mut boundary_hit = false;
        for (c, w) in children.iter().zip(counted) {
            match w? {
                Ok(n) if n >= 0 => ok.push((*c, n as usize)),
                _ => {
                    boundary_hit = true;
                    break;
                }
            }
        }
        if !boundary_hit && ok.iter().map(|(_, n)| n).sum::<usize>() == count {
            return Ok(ok);
        }
    }
    Err(Error::BoundaryZero { region: *cell, attempts: SPLIT_FRACTIONS.len() })
}

fn refine_in_cell(h: &FunctionHandle, cell: &SearchRegion, mult: u32, tol: f64, cfg: &ZeroFinderConfig) -> Result<Option<ZeroRecord>> {
    let center = cell.center();
    let mut starts = vec![center];
    let r = 0.25 * cell.size();
    starts.extend((0..8).map(|k| center + Complex64::from_polar(r, PI * k as f64 / 4.0)));
    let slack = 1e-9 * (1.0 + cell.size());
    for start in starts {
        if let Some((z, iters)) = newton(h, start, mult, tol, cfg)? {
            if cell.expanded(slack).contains(z) {
                let residual = h.value(z)?.norm();
                let multiplicity = disk_multiplicity(h, z, 10.0 * cfg.refine_tol)?.unwrap_or(mult).max(1);
                return Ok(Some(ZeroRecord {
                    location: z,
                    multiplicity,
                    residual,
                    newton_iters: iters,
                    on_critical_line: (z.re - 0.5).abs() <= cfg.line_tol,
                }));
            }
        }
    }
    Ok(None)
}

/// Finds every zero of `h` in `r` with `|f| <= tol`, separating trivial
/// zeros (zeros of `M`).
pub fn locate_zeros_with(h: &FunctionHandle, r: &SearchRegion, tol: f64, cfg: &ZeroFinderConfig) -> Result<LocateOutcome> {
    let (count, region) = count_zeros_in(h, r, cfg)?;
    let mut all = locate_in_cell(h, region, count, tol, cfg)?;
    all.sort_by(|a, b| {
        a.location
            .im
            .partial_cmp(&b.location.im)
            .unwrap()
            .then(a.location.re.partial_cmp(&b.location.re).unwrap())
    });
    let (trivial, zeros): (Vec<ZeroRecord>, Vec<ZeroRecord>) = all
        .into_iter()
        .partition(|z| h.m_factor(z.location).is_some_and(|m| m.norm() < cfg.trivial_tol));
    Ok(LocateOutcome { zeros, trivial, count, region })
}

pub fn locate_zeros(h: &FunctionHandle, r: &SearchRegion, tol: f64) -> Result<Vec<ZeroRecord>> {
    Ok(locate_zeros_with(h, r, tol, &ZeroFinderConfig::default())?.zeros)
}

/// Greedy matching of off-line zeros to their reflections; on-line zeros
/// pair with themselves. Returns pairs sorted by `t` and the leftovers.
pub fn pair_zeros(zeros: &[ZeroRecord], pair_tol: f64) -> (Vec<ZeroPair>, Vec<ZeroRecord>) {
    let mut pairs = Vec::new();
    let mut unpaired = Vec::new();
    let mut lefts: Vec<Option<ZeroRecord>> = Vec::new();
    let mut rights = Vec::new();
    for z in zeros {
        if z.on_critical_line {
            pairs.push(ZeroPair { right: *z, left: *z, pair_gap: (z.location - reflection(z.location)).norm() });
        } else if z.location.re > 0.5 {
            rights.push(*z);
        } else {
            lefts.push(Some(*z));
        }
    }
    for r in rights {
        let best = lefts
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|l| (i, (r.location - reflection(l.location)).norm())))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        match best {
            Some((i, gap)) => {
                let l = lefts[i].unwrap();
                let ok = (r.location.re + l.location.re - 1.0).abs() <= pair_tol
                    && (r.location.im - l.location.im).abs() <= pair_tol;
                if ok {
                    lefts[i] = None;
                    pairs.push(ZeroPair { right: r, left: l, pair_gap: gap });
                } else {
                    unpaired.push(r);
                }
            }
            None => unpaired.push(r),
        }
    }
    unpaired.extend(lefts.into_iter().flatten());
    pairs.sort_by(|a, b| a.right.location.im.partial_cmp(&b.right.location.im).unwrap());
    unpaired.sort_by(|a, b| a.location.im.partial_cmp(&b.location.im).unwrap());
    (pairs, unpaired)
}

pub const ZEROS_CSV_HEADER: &str = "function,sigma,t,residual,multiplicity,on_line,pair_id";

/// CSV rows in `zeros` order; `pair_id` is the 1-based index into `pairs`.
pub fn zeros_csv(function: &str, zeros: &[ZeroRecord], pairs: &[ZeroPair]) -> String {
    let mut out = String::from(ZEROS_CSV_HEADER);
    out.push('\n');
    for z in zeros {
        let pair_id = pairs
            .iter()
            .position(|p| p.right.location == z.location || p.left.location == z.location)
            .map(|i| (i + 1).to_string())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            function,
            fmt_num(z.location.re),
            fmt_num(z.location.im),
            fmt_num(z.residual),
            z.multiplicity,
            z.on_critical_line,
            pair_id
        );
    }
    out
}
