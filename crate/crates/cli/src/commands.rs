use std::fmt::Write as _;

use dxray_core::format::{fmt_complex, fmt_num, parse_complex};
use dxray_core::series::SeriesSpec;
use dxray_core::theorem_lab::{
    euler_product_residual, factor_identity_residual, nearest_derivative_zero, ratio_product_trace, sieve_step_check, Check, SegmentConfig,
    TheoremReport,
};
use dxray_core::xray::{self, strip_report, svg_string, xray_csv, TraceConfig};
use dxray_core::zeros::{locate_zeros_with, pair_zeros, zeros_csv, SearchRegion, ZeroFinderConfig, ZeroPair, ZEROS_CSV_HEADER};
use dxray_core::{Complex64, Error, FunctionHandle, HandleRegistry};

use crate::config::RunConfig;
use crate::{CliError, Outcome, UsageError};

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command() {
        "eval" => eval(cfg),
        "zeros" => zeros(cfg),
        "xray" => xray_cmd(cfg),
        "strips" => strips(cfg),
        "verify-euler" => verify_euler(cfg),
        "theorem2" => theorem2(cfg),
        "ratio-trace" => ratio_trace(cfg),
        "dh-repro" => dh_repro(cfg),
        other => Err(UsageError(format!("unknown command {other}")).into()),
    }
}

fn handle(cfg: &RunConfig) -> Result<FunctionHandle, UsageError> {
    let desc = cfg.require("handle")?;
    HandleRegistry::default().parse(desc).map_err(|e| UsageError(e.to_string()))
}

fn spec(cfg: &RunConfig) -> Result<SeriesSpec, UsageError> {
    let h = handle(cfg)?;
    h.series().cloned().ok_or_else(|| UsageError(format!("{} has no Euler product series", h.descriptor())))
}

fn complex(cfg: &RunConfig, key: &str) -> Result<Complex64, UsageError> {
    parse_complex(cfg.require(key)?).map_err(|e| UsageError(format!("{key}: {e}")))
}

fn floats(cfg: &RunConfig, key: &str, n: usize) -> Result<Vec<f64>, UsageError> {
    let raw = cfg.require(key)?;
    let v: Vec<f64> = raw
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| UsageError(format!("{key}: expected {n} comma-separated numbers, got {raw:?}")))?;
    if v.len() != n || v.iter().any(|x| !x.is_finite()) {
        return Err(UsageError(format!("{key}: expected {n} comma-separated numbers, got {raw:?}")));
    }
    Ok(v)
}

/// `sigma_min,sigma_max,t_min,t_max`; `None` for a degenerate (empty) box.
fn region(cfg: &RunConfig, key: &str) -> Result<Option<SearchRegion>, UsageError> {
    let v = floats(cfg, key, 4)?;
    if v[0] > v[1] || v[2] > v[3] {
        return Err(UsageError(format!("{key}: min exceeds max")));
    }
    if v[0] == v[1] || v[2] == v[3] {
        return Ok(None);
    }
    Ok(Some(SearchRegion::new(v[0], v[1], v[2], v[3]).map_err(|e| UsageError(e.to_string()))?))
}

fn trace_config(cfg: &RunConfig, window: SearchRegion) -> Result<TraceConfig, UsageError> {
    let tc = TraceConfig {
        grid_step: cfg.parsed("grid_step")?,
        arc_step: cfg.parsed("arc_step")?,
        corrector_tol: cfg.parsed("corrector_tol")?,
        max_points: cfg.parsed("max_points")?,
        ..TraceConfig::new(window)
    };
    tc.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(tc)
}

fn eval(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let h = handle(cfg)?;
    let s = complex(cfg, "s")?;
    let e = h.evaluate(s)?;
    let fe = match h.functional_equation_residual(s) {
        Ok(r) => fmt_num(r),
        Err(Error::NoFunctionalEquation(_)) => "none".into(),
        Err(e) => return Err(e.into()),
    };
    let stdout = format!("value={}\nerror_bound={}\nfe_residual={}\n", fmt_complex(e.value), fmt_num(e.error_bound), fe);
    Ok(Outcome { ok: true, stdout, ..Default::default() })
}

fn pair_summary(pairs: &[ZeroPair], unpaired: usize) -> String {
    let mut out = String::new();
    let off: Vec<&ZeroPair> = pairs.iter().filter(|p| !p.is_degenerate()).collect();
    let _ = writeln!(out, "pairs={} off_line_pairs={} unpaired={}", pairs.len(), off.len(), unpaired);
    for p in off {
        let _ = writeln!(
            out,
            "off_line_pair t={} sigma_right={} sigma_left={} gap={}",
            fmt_num(p.right.location.im),
            fmt_num(p.right.location.re),
            fmt_num(p.left.location.re),
            fmt_num(p.pair_gap)
        );
    }
    out
}

fn zeros(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let h = handle(cfg)?;
    let tol: f64 = cfg.parsed("tol")?;
    let Some(r) = region(cfg, "region")? else {
        return Ok(Outcome { ok: true, stdout: format!("{ZEROS_CSV_HEADER}\n"), ..Default::default() });
    };
    let zcfg = ZeroFinderConfig::default();
    let out = locate_zeros_with(&h, &r, tol, &zcfg)?;
    let (pairs, unpaired) = pair_zeros(&out.zeros, zcfg.pair_tol);
    let stdout = zeros_csv(&h.descriptor(), &out.zeros, &pairs);
    let mut stderr = format!(
        "region={} count={} located={} trivial={}\n",
        out.region,
        out.count,
        out.zeros.len(),
        out.trivial.len()
    );
    stderr.push_str(&pair_summary(&pairs, unpaired.len()));
    Ok(Outcome { ok: out.located_multiplicity() == out.count, stdout, stderr, artifacts: vec![] })
}

fn xray_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let h = handle(cfg)?;
    let window = region(cfg, "window")?.ok_or_else(|| UsageError("window must have positive width and height".into()))?;
    let tc = trace_config(cfg, window)?;
    let components = xray::xray(&h, &tc)?;
    let mut stderr = String::new();
    let zeros = match locate_zeros_with(&h, &window, 1e-10, &ZeroFinderConfig::default()) {
        Ok(o) => o.zeros,
        Err(e) => {
            let _ = writeln!(stderr, "zero markers skipped: {e}");
            vec![]
        }
    };
    let mut stdout = format!("components={}\n", components.len());
    for class in ["gamma_k0", "gamma_kj", "closed_loop", "unclassified"] {
        let n = components.iter().filter(|c| c.classification.as_str() == class && c.kind == xray::CurveKind::RealPreimage).count();
        let _ = writeln!(stdout, "real_preimage_{class}={n}");
    }
    let unit = components.iter().filter(|c| c.kind == xray::CurveKind::UnitCirclePreimage).count();
    let _ = writeln!(stdout, "unit_circle_preimage={unit}");
    let _ = writeln!(stdout, "zeros={}", zeros.len());
    for z in &zeros {
        let _ = writeln!(stdout, "zero {}", fmt_complex(z.location));
    }
    let artifacts = vec![
        ("xray.svg".to_string(), svg_string(&window, &components, &zeros).into_bytes()),
        ("xray.csv".to_string(), xray_csv(&components).into_bytes()),
    ];
    Ok(Outcome { ok: true, stdout, stderr, artifacts })
}

fn strips(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let h = handle(cfg)?;
    let t = floats(cfg, "t", 2)?;
    let sr = floats(cfg, "sigma_range", 2)?;
    let sigma_ref: f64 = cfg.parsed("sigma_ref")?;
    let t_lo = t[0].max(if h.has_real_coefficients() { 0.1 } else { t[0] });
    let window = SearchRegion::new(sr[0], sr[1], t_lo, t[1].max(t_lo + 1.0)).map_err(|e| UsageError(e.to_string()))?;
    let tc = trace_config(cfg, window)?;
    let report = strip_report(&h, t_lo, t[1], sigma_ref, &tc)?;
    let text = report.to_text();
    let artifacts = if cfg.get("out_dir").is_some() { vec![("strips.txt".to_string(), text.clone().into_bytes())] } else { vec![] };
    Ok(Outcome { ok: true, stdout: text, stderr: String::new(), artifacts })
}

fn verify_euler_report(spec: &SeriesSpec, desc: &str, s: Complex64, primes: u64, tol: f64) -> Result<TheoremReport, Error> {
    let r = euler_product_residual(spec, s, primes)?;
    let mut rep = TheoremReport::new("verify-euler").input("handle", desc).input("s", fmt_complex(s)).input("primes", primes.to_string());
    rep.checks.push(Check::less_than("euler_product_residual", r.residual, tol));
    let n = primes.saturating_mul(primes).min(10_000);
    for k in 1..=3 {
        let st = sieve_step_check(spec, s, k, n)?;
        rep.checks.push(Check::at_most(format!("sieve_step_excess_k{k}_n{n}"), st.excess, 0.0));
    }
    rep.notes.push(("partial_sum_terms".into(), r.n_terms.to_string()));
    rep.notes.push(("tail_estimate".into(), r.tail_estimate.map(fmt_num).unwrap_or_else(|| "none".into())));
    rep.notes.push(("product".into(), fmt_complex(r.product)));
    rep.notes.push(("sum".into(), fmt_complex(r.sum)));
    Ok(rep)
}

fn verify_euler(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = spec(cfg)?;
    let s = complex(cfg, "s")?;
    let primes: u64 = cfg.parsed("primes")?;
    let tol: f64 = cfg.parsed("tol")?;
    let rep = verify_euler_report(&spec, cfg.require("handle")?, s, primes, tol)?;
    Ok(Outcome { ok: rep.passed(), stdout: rep.lines(), ..Default::default() })
}

enum PairSelector {
    Index(usize),
    Height(f64),
}

fn pair_selector(raw: &str) -> Result<PairSelector, UsageError> {
    if let Some(t) = raw.strip_prefix("t=") {
        return t.parse().map(PairSelector::Height).map_err(|_| UsageError(format!("bad pair height {t:?}")));
    }
    match raw.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(PairSelector::Index(n)),
        _ => Err(UsageError(format!("pair must be a 1-based index or t=<height>, got {raw:?}"))),
    }
}

fn select_pair(pairs: &[ZeroPair], sel: &PairSelector) -> Option<ZeroPair> {
    let off: Vec<&ZeroPair> = pairs.iter().filter(|p| !p.is_degenerate()).collect();
    match sel {
        PairSelector::Index(n) => off.get(n - 1).map(|p| **p),
        PairSelector::Height(t) => off
            .into_iter()
            .min_by(|a, b| (a.right.location.im - t).abs().partial_cmp(&(b.right.location.im - t).abs()).unwrap())
            .copied(),
    }
}

struct Theorem2Params {
    deriv_tol: f64,
    seg_tol: f64,
    expect: Option<(f64, f64)>,
}

fn theorem2_report(h: &FunctionHandle, pair: &ZeroPair, p: &Theorem2Params) -> Result<TheoremReport, Error> {
    let seg = SegmentConfig { seg_tol: p.seg_tol, ..SegmentConfig::default() };
    let e = nearest_derivative_zero(h, pair, &seg)?;
    let mut rep = TheoremReport::new("theorem2")
        .input("handle", h.descriptor())
        .input("t", fmt_num(pair.right.location.im))
        .input("sigma_right", fmt_num(pair.right.location.re))
        .input("sigma_left", fmt_num(pair.left.location.re));
    rep.checks.push(Check::at_most("abs_fprime", e.abs_derivative, p.deriv_tol));
    rep.checks.push(Check::at_most("distance_to_segment", e.distance_to_segment, p.seg_tol));
    rep.checks.push(Check::at_most("im_offset", e.im_offset, 1e-3));
    rep.checks.push(Check::less_than("re_s_tau0", e.point.re, 0.5));
    if let Some((target, tol)) = p.expect {
        rep.checks.push(Check::at_most(format!("re_s_tau0_minus_{target}"), (e.point.re - target).abs(), tol));
    }
    rep.notes.push(("s_tau0".into(), fmt_complex(e.point)));
    rep.notes.push(("tau0".into(), fmt_num(e.tau0)));
    rep.notes.push(("min_abs_fprime_on_segment".into(), fmt_num(e.min_on_segment)));
    rep.notes.push(("re_f_at_s_tau0".into(), fmt_num(e.value.re)));
    rep.csv = format!(
        "t,sigma_right,sigma_left,tau0,re_s_tau0,im_s_tau0,abs_fprime,distance_to_segment,min_abs_fprime_on_segment,re_f\n{},{},{},{},{},{},{},{},{},{}\n",
        fmt_num(pair.right.location.im),
        fmt_num(pair.right.location.re),
        fmt_num(pair.left.location.re),
        fmt_num(e.tau0),
        fmt_num(e.point.re),
        fmt_num(e.point.im),
        fmt_num(e.abs_derivative),
        fmt_num(e.distance_to_segment),
        fmt_num(e.min_on_segment),
        fmt_num(e.value.re)
    );
    Ok(rep)
}

fn theorem2(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let h = handle(cfg)?;
    let r = region(cfg, "region")?.ok_or_else(|| UsageError("region must have positive width and height".into()))?;
    let sel = pair_selector(cfg.require("pair")?)?;
    let expect = match cfg.get("expect_re") {
        Some(_) => Some((cfg.parsed("expect_re")?, cfg.parsed("expect_tol")?)),
        None => None,
    };
    let params = Theorem2Params { deriv_tol: cfg.parsed("deriv_tol")?, seg_tol: cfg.parsed("seg_tol")?, expect };
    let zcfg = ZeroFinderConfig::default();
    let located = locate_zeros_with(&h, &r, 1e-10, &zcfg)?;
    let (pairs, _) = pair_zeros(&located.zeros, zcfg.pair_tol);
    let Some(pair) = select_pair(&pairs, &sel) else {
        return Ok(Outcome { ok: false, stderr: format!("no matching off-line pair in {r}\n"), ..Default::default() });
    };
    let rep = theorem2_report(&h, &pair, &params)?;
    let artifacts = if cfg.get("out_dir").is_some() { vec![("theorem2.csv".to_string(), rep.csv.clone().into_bytes())] } else { vec![] };
    Ok(Outcome { ok: rep.passed(), stdout: rep.lines(), stderr: String::new(), artifacts })
}

fn ratio_trace(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = spec(cfg)?;
    let sigma: f64 = cfg.parsed("sigma")?;
    let t: f64 = cfg.parsed("t")?;
    let cutoffs: Vec<u64> = cfg
        .require("cutoffs")?
        .split(',')
        .map(|x| x.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| UsageError("cutoffs: expected comma-separated integers".into()))?;
    let tr = ratio_product_trace(&spec, sigma, t, &cutoffs)?;
    let mut rep = TheoremReport::new("ratio-trace")
        .input("handle", cfg.require("handle")?)
        .input("sigma", fmt_num(sigma))
        .input("t", fmt_num(t));
    let primes = dxray_core::arith::sieve().primes_up_to(100)?;
    let identity = primes
        .iter()
        .map(|&p| factor_identity_residual(spec.coefficients.prime_value(p as u64), spec.exponents.prime_exponent(p as u64), sigma, t))
        .fold(0.0, f64::max);
    rep.checks.push(Check::at_most("factor_identity_p_le_100", identity, 1e-12));
    if sigma == 0.5 {
        let dev = tr.values.iter().map(|v| (v - 1.0).norm()).fold(0.0, f64::max);
        rep.checks.push(Check::at_most("max_abs_p_n_minus_1", dev, 1e-15));
    }
    for ((n, v), env) in tr.prime_cutoffs.iter().zip(&tr.values).zip(&tr.envelope) {
        rep.notes.push((format!("p_{n}"), fmt_complex(*v)));
        rep.notes.push((format!("log_abs_p_minus_envelope_{n}"), fmt_num(v.norm().ln() - env)));
    }
    rep.csv = tr.to_csv();
    let artifacts = if cfg.get("out_dir").is_some() { vec![("ratio_trace.csv".to_string(), rep.csv.clone().into_bytes())] } else { vec![] };
    Ok(Outcome { ok: rep.passed(), stdout: rep.lines(), stderr: String::new(), artifacts })
}

/// Target off-line abscissas `(right, left)` of the DH function, each with
/// the expected abscissa of the derivative zero between the pair.
pub const DH_TARGETS: [(f64, f64, f64); 2] = [(0.86953, 0.13046, 0.31), (0.76822, 0.23177, 0.39)];
/// Height range scanned by `dh-repro`; both target pairs lie below 340.
pub const DH_REPRO_REGION: (f64, f64, f64, f64) = (0.0, 1.0, 60.0, 340.0);

fn dh_repro(_cfg: &RunConfig) -> Result<Outcome, CliError> {
    let h = FunctionHandle::davenport_heilbronn();
    let mut report = format!("# {} dh-repro\n", crate::cache::CODE_VERSION);
    let mut artifacts = Vec::new();
    let mut ok = true;

    // functional equation at fixed probe points
    let mut fe = TheoremReport::new("dh-functional-equation");
    let probes: Vec<Complex64> = (0..20).map(|k| Complex64::new(0.05 + 0.045 * k as f64, 5.0 + 4.7 * k as f64)).collect();
    let worst = probes.iter().map(|&s| h.functional_equation_residual(s)).collect::<Result<Vec<_>, _>>()?.into_iter().fold(0.0, f64::max);
    fe.checks.push(Check::at_most("max_residual_20_probes", worst, 1e-7));
    fe.notes.push(("kappa".into(), fmt_num(dxray_core::evaluator::davenport_heilbronn_kappa())));

    let (a, b, c, d) = DH_REPRO_REGION;
    let region = SearchRegion::new(a, b, c, d)?;
    let zcfg = ZeroFinderConfig::default();
    let located = locate_zeros_with(&h, &region, 1e-10, &zcfg)?;
    let (pairs, unpaired) = pair_zeros(&located.zeros, zcfg.pair_tol);
    artifacts.push(("dh_zeros.csv".to_string(), zeros_csv("dh", &located.zeros, &pairs).into_bytes()));
    let mut scan = TheoremReport::new("dh-zeros").input("region", region.to_string());
    scan.checks.push(Check::at_most("count_minus_located", (located.count as f64 - located.located_multiplicity() as f64).abs(), 0.0));
    let off: Vec<ZeroPair> = pairs.iter().filter(|p| !p.is_degenerate()).copied().collect();
    for p in &off {
        scan.notes.push((
            format!("pair_t_{}", fmt_num(p.right.location.im)),
            format!("{} {}", fmt_num(p.right.location.re), fmt_num(p.left.location.re)),
        ));
    }
    scan.notes.push(("unpaired".into(), unpaired.len().to_string()));

    let mut t2_csv = String::new();
    let mut t2_reports = Vec::new();
    for (i, &(right, left, expect)) in DH_TARGETS.iter().enumerate() {
        let found = off.iter().find(|p| (p.right.location.re - right).abs() < 1e-4 && (p.left.location.re - left).abs() < 1e-4);
        let gap = found.map_or(f64::INFINITY, |p| (p.right.location.re - right).abs().max((p.left.location.re - left).abs()));
        scan.checks.push(Check::less_than(format!("target_pair_{}_abscissa_gap", i + 1), gap, 1e-4));
        if let Some(p) = found {
            let rep = theorem2_report(&h, p, &Theorem2Params { deriv_tol: 1e-6, seg_tol: 1e-4, expect: Some((expect, 0.02)) })?;
            if t2_csv.is_empty() {
                t2_csv.push_str(&rep.csv);
            } else {
                t2_csv.push_str(rep.csv.lines().nth(1).unwrap_or_default());
                t2_csv.push('\n');
            }
            t2_reports.push(rep);

            let t = p.right.location.im;
            let window = SearchRegion::new(0.0, 1.0, t - 2.0, t + 2.0)?;
            let tc = TraceConfig::new(window);
            let comps = xray::xray(&h, &tc)?;
            let zs: Vec<_> = located.zeros.iter().filter(|z| window.contains(z.location)).copied().collect();
            artifacts.push((format!("xray_pair{}.svg", i + 1), svg_string(&window, &comps, &zs).into_bytes()));
            artifacts.push((format!("xray_pair{}.csv", i + 1), xray_csv(&comps).into_bytes()));
        }
    }
    artifacts.push(("theorem2.csv".to_string(), t2_csv.into_bytes()));

    let zeta = FunctionHandle::zeta();
    let strip_window = SearchRegion::new(-1.0, 8.0, 0.1, 500.0)?;
    let strips = strip_report(&zeta, 0.1, 500.0, 0.0, &TraceConfig::new(strip_window))?;
    artifacts.push(("zeta_strips.txt".to_string(), strips.to_text().into_bytes()));
    let mut strip_rep = TheoremReport::new("zeta-strips").input("t", "0.1,500");
    let mean = strips.mean_spacing().unwrap_or(f64::NAN);
    strip_rep.checks.push(Check { name: "mean_spacing_in_6_12".into(), measured: mean, tolerance: 12.0, passed: (6.0..=12.0).contains(&mean) });

    let euler = verify_euler_report(&SeriesSpec::zeta(), "zeta", Complex64::new(3.0, 0.0), 1000, 1e-8)?;

    for rep in [&fe, &scan].into_iter().chain(t2_reports.iter()).chain([&strip_rep, &euler]) {
        report.push_str(&rep.lines());
        ok &= rep.passed();
    }
    artifacts.push(("report.txt".to_string(), report.clone().into_bytes()));
    Ok(Outcome { ok, stdout: report, stderr: String::new(), artifacts })
}
