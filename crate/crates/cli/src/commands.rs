//! Subcommand implementations.

use serde::Serialize;
use serde_json::{json, Value};

use tracelab::distinguish::{success_rate, Method, MAX_KGRAM};
use tracelab::hard_pairs::{
    brute_force_closest_pair, build_family, cube_root, default_a, family_properties_check, l1_pathway_check, pad_and_bound,
    pigeonhole_search, sample_pair_sups,
};
use tracelab::kmer::{dense_density_vector, density_map, map_l1_distance, random_bits};
use tracelab::mle::{amplified_success_curve, lb_verify, map_equals_mle_check, optimality_bound_check, product_trace_family, DistributionFamily};
use tracelab::channel::{sample_traces, trace_distribution};
use tracelab::poly::{generating_polynomial, sup_on_arc, sup_on_circle, ArcSpec, SupResult};
use tracelab::rng::{derive_seed, seeded};
use tracelab::verify::{run_suite, Suite};
use tracelab::{par, BitString, ChannelParams, KmerId};

use crate::record::{timestamp, to_csv, VERSION};
use crate::{require, CliError, CliResult, ExperimentRecord, Outcome, Params};

/// Arc grid used by the hard-pair commands.
pub const ARC_GRID: usize = 4097;
const CIRCLE_GRID: usize = 8192;

pub fn dispatch(command: &str, params: &mut Params) -> CliResult<Outcome> {
    let mut out = Outcome::default();
    match command {
        "simulate" => simulate(params, &mut out)?,
        "density-map" => density(params, &mut out)?,
        "genpoly" => genpoly(params, &mut out)?,
        "hardpair" => hardpair(params, &mut out)?,
        "mle" => mle(params, &mut out)?,
        "distinguish" => distinguish(params, &mut out)?,
        "verify" => verify(params, &mut out)?,
        "report" => report(params, &mut out)?,
        other => return Err(CliError::Usage(format!("unknown subcommand {other}"))),
    }
    Ok(out)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("library types serialize")
}

fn push(out: &mut Outcome, command: &str, params: &Params, seed: Option<u64>, outputs: Value) {
    out.records.push(ExperimentRecord {
        command: command.into(),
        params: params.used(),
        outputs,
        seed,
        timestamp: timestamp(),
        version: VERSION.into(),
    });
}

fn channel(params: &mut Params, default: Option<f64>) -> CliResult<ChannelParams> {
    let p = match params.p()? {
        Some(p) => p,
        None => require(default, "--p")?,
    };
    ChannelParams::new(p).map_err(|e| CliError::Usage(format!("invalid value for --p: {e}")))
}

fn parse_bits(s: &str, flag: &str) -> CliResult<BitString> {
    s.parse().map_err(|e| CliError::Usage(format!("invalid value for {flag}: {e}")))
}

/// `--x` if given, else a random source of length `--n` drawn from the seed.
fn source(params: &mut Params, command: &str) -> CliResult<(BitString, Option<u64>)> {
    if let Some(x) = params.x()? {
        return Ok((parse_bits(&x, "--x")?, params.seed()?));
    }
    let n = params
        .n()?
        .ok_or_else(|| CliError::Usage("missing required flag --x (or --n with --seed for a random source)".into()))?;
    let seed = params.require_seed(command)?;
    Ok((random_bits(n, &mut seeded(derive_seed(seed, 0))), Some(seed)))
}

/// `--y` if given, else `x` with its last bit flipped.
fn partner(params: &mut Params, x: &BitString) -> CliResult<BitString> {
    match params.y()? {
        Some(y) => parse_bits(&y, "--y"),
        None if x.is_empty() => Err(CliError::Usage("missing required flag --y".into())),
        None => {
            let mut bits = x.bits().to_vec();
            *bits.last_mut().expect("non-empty") ^= 1;
            Ok(BitString::from_bits(bits))
        }
    }
}

fn check_mode<'a>(mode: Option<String>, allowed: &[&'a str]) -> CliResult<&'a str> {
    match mode {
        None => Ok(allowed[0]),
        Some(m) => allowed
            .iter()
            .copied()
            .find(|a| *a == m)
            .ok_or_else(|| CliError::Usage(format!("invalid value for --mode: {m:?} (expected one of {})", allowed.join(", ")))),
    }
}

fn distinctness_k(n: usize) -> usize {
    ((2.0 * (n as f64).powf(0.2)).ceil() as usize).clamp(1, n.max(1))
}

fn powers_of_two_up_to(t: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |v| v.checked_mul(2)).take_while(|v| *v <= t).collect()
}

fn simulate(params: &mut Params, out: &mut Outcome) -> CliResult<()> {
    let (x, _) = source(params, "simulate")?;
    let prm = channel(params, None)?;
    let count = params.t()?.unwrap_or(1);
    let seed = params.require_seed("simulate")?;
    let traces = sample_traces(&x, prm, count, seed);
    let mean_len = traces.iter().map(|t| t.len()).sum::<usize>() as f64 / count.max(1) as f64;
    out.summary.push(format!("sampled {count} traces of {x} at p = {}; mean length {mean_len:.3}", prm.p()));
    push(out, "simulate", params, Some(seed), json!({"x": x, "traces": traces, "mean_length": mean_len}));
    Ok(())
}

fn density(params: &mut Params, out: &mut Outcome) -> CliResult<()> {
    let (x, seed) = source(params, "density-map")?;
    let k = require(params.k()?, "--k")?;
    let prm = channel(params, None)?;
    let map = density_map(&x, k, prm)?;
    out.summary.push(format!("density map of {x}: k = {k}, {} occurring k-mers", map.rows.len()));
    push(out, "density-map", params, seed, json!({"x": x, "map": map}));
    Ok(())
}

fn sup_json(s: &SupResult) -> Value {
    json!({"sup": s.value, "theta": s.theta})
}

fn genpoly(params: &mut Params, out: &mut Outcome) -> CliResult<()> {
    let (x, seed) = source(params, "genpoly")?;
    let k = require(params.k()?, "--k")?;
    let prm = channel(params, None)?;
    let block = params.l()?.unwrap_or(x.len());
    let arc = ArcSpec::for_block_length(block.max(1), ARC_GRID)?;
    let y = match params.y()? {
        Some(y) => Some(parse_bits(&y, "--y")?),
        None => None,
    };
    let mut kmers: Vec<KmerId> = Vec::new();
    for s in std::iter::once(&x).chain(y.as_ref()) {
        if k == 0 || k > s.len() {
            return Err(tracelab::Error::InvalidK { k, n: s.len() }.into());
        }
        for j in 0..=s.len() - k {
            kmers.push(KmerId::new(BitString::from_bits(s.window(j, k).to_vec()))?);
        }
    }
    kmers.sort();
    kmers.dedup();

    let mut rows = serde_json::Map::new();
    let (mut worst_arc, mut worst_circle) = (0.0f64, 0.0f64);
    for w in &kmers {
        let fx = generating_polynomial(&x, w, prm)?;
        let row = match &y {
            None => {
                let coeffs: Vec<f64> = fx.coeffs().iter().map(|c| c.re).collect();
                let (a, c) = (sup_on_arc(&fx, arc), sup_on_circle(&fx, 1.0, CIRCLE_GRID));
                json!({"coeffs": coeffs, "arc": sup_json(&a), "circle": sup_json(&c)})
            }
            Some(y) => {
                let d = fx.sub(&generating_polynomial(y, w, prm)?);
                let (a, c) = (sup_on_arc(&d, arc), sup_on_circle(&d, 1.0, CIRCLE_GRID));
                worst_arc = worst_arc.max(a.value);
                worst_circle = worst_circle.max(c.value);
                json!({"arc": sup_json(&a), "circle": sup_json(&c)})
            }
        };
        rows.insert(w.to_string(), row);
    }
    let mut outputs = json!({"x": x, "theta_max": arc.theta_max, "kmers": rows});
    if let Some(y) = &y {
        outputs["y"] = json!(y);
        outputs["max_arc_sup"] = json!(worst_arc);
        outputs["max_circle_sup"] = json!(worst_circle);
        if y.len() == x.len() {
            let l1 = map_l1_distance(&density_map(&x, k, prm)?, &density_map(y, k, prm)?)?;
            let report = l1_pathway_check(&x, y, k, prm)?;
            if !report.pass {
                out.failed_checks.push(report.check.clone());
            }
            outputs["l1_distance"] = json!(l1);
            outputs["l1_pathway"] = to_value(&report);
        }
        out.summary.push(format!("difference polynomials of {x} and {y}: max arc sup {worst_arc:.3e}, max circle sup {worst_circle:.3e}"));
    } else {
        out.summary.push(format!("generating polynomials of {x} for {} k-mers (k = {k})", kmers.len()));
    }
    push(out, "genpoly", params, seed, outputs);
    Ok(())
}

fn hardpair(params: &mut Params, out: &mut Outcome) -> CliResult<()> {
    let mode = check_mode(params.mode()?, &["brute", "sample", "pigeonhole", "properties"])?;
    let l = require(params.l()?, "--L")?;
    let family = build_family(l).map_err(|e| CliError::Usage(format!("invalid value for --L: {e}")))?;
    let root = cube_root(l).expect("validated by build_family");
    let k = params.k()?.unwrap_or(root);
    let prm = channel(params, Some(0.5))?;
    let arc = ArcSpec::for_block_length(l, ARC_GRID)?;
    match mode {
        "brute" => {
            let pair = brute_force_closest_pair(&family, k, prm, arc)?;
            let padded = pad_and_bound(&pair.x, &pair.y, 4 * l, prm, k, arc.theta_max)?;
            let l1 = l1_pathway_check(&padded.x, &padded.y, k, prm)?;
            out.failed_checks.extend(padded.reports.iter().chain([&l1]).filter(|r| !r.pass).map(|r| r.check.clone()));
            out.summary.push(format!(
                "L = {l}, k = {k}: closest pair ({}, {}) with arc sup {:.4e} over {} pairs; padded circle sup {:.4e} <= unpadded {:.4e}",
                pair.i, pair.j, pair.sup, pair.pairs_total, padded.circle_sup, padded.unpadded_circle_sup
            ));
            let seed = params.seed()?;
            push(
                out,
                "hardpair",
                params,
                seed,
                json!({"family_size": family.len(), "theta_max": arc.theta_max, "closest_pair": pair, "padded": padded, "l1_pathway": l1}),
            );
        }
        "sample" => {
            let count = params.trials()?.unwrap_or(1000);
            let seed = params.require_seed("hardpair --mode sample")?;
            let mut sups = sample_pair_sups(&family, k, prm, arc, count, seed)?;
            sups.sort_by(f64::total_cmp);
            let (min, median, max) = (sups[0], sups[sups.len() / 2], sups[sups.len() - 1]);
            out.summary.push(format!("L = {l}: {count} sampled pairs, arc sup min {min:.4e} median {median:.4e} max {max:.4e}"));
            push(out, "hardpair", params, Some(seed), json!({"family_size": family.len(), "samples": count, "min": min, "median": median, "max": max}));
        }
        "pigeonhole" => {
            let (a, clamped) = default_a(l);
            let d = 2 * root;
            let side = params.side()?.unwrap_or(0.5);
            let found = pigeonhole_search(&family, k, a, d, side)?;
            out.summary.push(match &found.collision {
                Some((i, j, _)) => format!("L = {l}: members {i} and {j} share a sub-cube of side {side} in dimension {d}"),
                None => format!("L = {l}: no collision at side {side} in dimension {d}"),
            });
            let seed = params.seed()?;
            push(out, "hardpair", params, seed, json!({"a": a, "a_clamped": clamped, "d": d, "side": side, "outcome": found}));
        }
        _ => {
            let seed = params.require_seed("hardpair --mode properties")?;
            let reports = (1..=root)
                .map(|k| family_properties_check(&family, k, prm, derive_seed(seed, k as u64)))
                .collect::<tracelab::Result<Vec<_>>>()?;
            let failed = reports.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                out.failed_checks.push(format!("set_properties_L{l}"));
            }
            out.summary.push(format!("L = {l}: set properties checked for k = 1..={root}, {failed} failures"));
            push(out, "hardpair", params, Some(seed), json!({"reports": reports}));
        }
    }
    Ok(())
}

fn curve_pool(params: &mut Params, command: &str) -> CliResult<(Vec<BitString>, u64)> {
    let seed = params.require_seed(command)?;
    let pool = match params.x()? {
        Some(x) => vec![parse_bits(&x, "--x")?],
        None => {
            let n = require(params.n()?, "--n")?;
            let mut rng = seeded(derive_seed(seed, 0));
            (0..4).map(|_| random_bits(n, &mut rng)).collect()
        }
    };
    Ok((pool, seed))
}

fn mle(params: &mut Params, out: &mut Outcome) -> CliResult<()> {
    let mode = check_mode(params.mode()?, &["trace", "curve", "lb", "optimality", "map"])?;
    match mode {
        "trace" | "curve" => {
            let (pool, seed) = curve_pool(params, "mle")?;
            let prm = channel(params, None)?;
            let t = require(params.t()?, "--T")?;
            let trials = params.trials()?.unwrap_or(200);
            let grid = if mode == "trace" { vec![t] } else { powers_of_two_up_to(t) };
            let curve = amplified_success_curve(&pool, prm, &grid, trials, seed)?;
            let last = curve.pooled.last().copied().unwrap_or(0.0);
            out.summary.push(format!(
                "trace MLE at n = {}, p = {}: success {last:.3} at T = {} over {} sources",
                pool[0].len(),
                prm.p(),
                grid.last().unwrap_or(&t),
                pool.len()
            ));
            push(out, "mle", params, Some(seed), to_value(&curve));
        }
        "lb" => {
            let n = require(params.n()?, "--n")?;
            let t = require(params.t()?, "--T")?;
            let report = lb_verify(n, t)?;
            if !report.pass {
                out.failed_checks.push("lower_bound_family".into());
            }
            out.summary.push(format!(
                "lower-bound family n = {n}, T = {t}: Pr[MLE = 0] = {}, distinguisher {}..{} (null {})",
                report.pr_mle_zero, report.distinguisher_min, report.distinguisher_max, report.distinguisher_null
            ));
            let seed = params.seed()?;
            push(out, "mle", params, seed, to_value(&report));
        }
        "optimality" => {
            let n = require(params.n()?, "--n")?;
            let t = params.t()?.unwrap_or(1);
            let prm = channel(params, None)?;
            let trials = params.trials()?.unwrap_or(10_000);
            let seed = params.require_seed("mle --mode optimality")?;
            let sources: Vec<BitString> = BitString::all(n).collect();
            let family = product_trace_family(&sources, prm, t)?;
            let report = optimality_bound_check(&family, trials, seed)?;
            if !report.pass {
                out.failed_checks.push("mle_optimality".into());
            }
            out.summary.push(format!(
                "optimality over {{0,1}}^{n}, T = {t}: Pr[MLE = 0] = {:.4} vs bound {:.4} ({})",
                report.pr_mle_zero,
                report.bound,
                if report.exact { "exact" } else { "Monte Carlo" }
            ));
            push(out, "mle", params, Some(seed), to_value(&report));
        }
        _ => {
            let n = require(params.n()?, "--n")?;
            let prm = channel(params, None)?;
            let trials = params.trials()?.unwrap_or(1000);
            let max_batch = params.t()?.unwrap_or(5);
            let seed = params.require_seed("mle --mode map")?;
            let tables = BitString::all(n).map(|x| trace_distribution(&x, prm, false)).collect::<tracelab::Result<Vec<_>>>()?;
            let report = map_equals_mle_check(&DistributionFamily::from_tables(&tables)?, trials, max_batch, seed)?;
            if !report.pass {
                out.failed_checks.push("map_equals_mle".into());
            }
            out.summary.push(format!("MAP under a uniform prior vs MLE: {trials} batches, pass = {}", report.pass));
            push(out, "mle", params, Some(seed), to_value(&report));
        }
    }
    Ok(())
}

fn method(params: &mut Params, n: usize) -> CliResult<Method> {
    match check_mode(params.mode()?, &["mean", "kgram"])? {
        "mean" => Ok(Method::Mean),
        _ => {
            let k = params.k()?.unwrap_or_else(|| distinctness_k(n));
            if k == 0 || k > MAX_KGRAM {
                return Err(CliError::Usage(format!("invalid value for --k: {k} (expected 1..={MAX_KGRAM})")));
            }
            Ok(Method::Kgram(k))
        }
    }
}

fn distinguish(params: &mut Params, out: &mut Outcome) -> CliResult<()> {
    let (x, _) = source(params, "distinguish")?;
    let y = partner(params, &x)?;
    let prm = channel(params, None)?;
    let t = require(params.t()?, "--T")?;
    let trials = params.trials()?.unwrap_or(200);
    let m = method(params, x.len())?;
    let seed = params.require_seed("distinguish")?;
    let rate = success_rate(&x, &y, prm, m, t, trials, seed)?;
    out.summary.push(format!(
        "{m} distinguisher {x} vs {y}, T = {t}: success {:.3} [{:.3}, {:.3}]",
        rate.rate, rate.ci_low, rate.ci_high
    ));
    push(out, "distinguish", params, Some(seed), json!({"x": x, "y": y, "result": rate}));
    Ok(())
}

fn verify(params: &mut Params, out: &mut Outcome) -> CliResult<()> {
    let name = params.suite()?.unwrap_or_else(|| "all".into());
    let suites: Vec<Suite> = if name == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![name
            .parse()
            .map_err(|_| CliError::Usage(format!("invalid value for --suite: {name:?}")))?]
    };
    let seed = params.require_seed("verify")?;
    for suite in suites {
        let checks = run_suite(suite, seed)?;
        let failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| format!("{}.{}", c.suite, c.check)).collect();
        out.summary.push(format!("suite {}: {}/{} checks pass", suite.name(), checks.len() - failed.len(), checks.len()));
        out.failed_checks.extend(failed);
        push(out, "verify", params, Some(seed), json!({"suite": suite.name(), "checks": checks}));
    }
    Ok(())
}

fn report(params: &mut Params, out: &mut Outcome) -> CliResult<()> {
    let mode = check_mode(params.mode()?, &["decay", "distinctness", "curve", "distinguish"])?;
    let (header, rows): (Vec<&str>, Vec<Vec<String>>) = match mode {
        "decay" => {
            let max_l = params.l()?.unwrap_or(64);
            let prm = channel(params, Some(0.5))?;
            let mut rows = Vec::new();
            for l in [8usize, 27, 64].into_iter().filter(|l| *l <= max_l) {
                let family = build_family(l)?;
                let k = cube_root(l).expect("cube");
                let arc = ArcSpec::for_block_length(l, ARC_GRID)?;
                let pair = brute_force_closest_pair(&family, k, prm, arc)?;
                let padded = pad_and_bound(&pair.x, &pair.y, 4 * l, prm, k, arc.theta_max)?;
                out.failed_checks.extend(padded.reports.iter().filter(|r| !r.pass).map(|r| r.check.clone()));
                let cells = json!({
                    "L": l, "k": k, "family_size": family.len(), "pairs_total": pair.pairs_total,
                    "pairs_refined": pair.pairs_refined, "arc_sup": pair.sup, "theta": pair.theta,
                    "padded_circle_sup": padded.circle_sup, "unpadded_circle_sup": padded.unpadded_circle_sup,
                    "x": pair.x, "y": pair.y,
                });
                rows.push(vec![
                    l.to_string(),
                    k.to_string(),
                    family.len().to_string(),
                    pair.pairs_total.to_string(),
                    pair.pairs_refined.to_string(),
                    format!("{:e}", pair.sup),
                    format!("{:e}", padded.circle_sup),
                    format!("{:e}", padded.unpadded_circle_sup),
                    pair.x.to_string(),
                    pair.y.to_string(),
                ]);
                push(out, "report", params, None, cells);
            }
            let sups: Vec<f64> = out.records.iter().map(|r| r.outputs["arc_sup"].as_f64().unwrap_or(f64::NAN)).collect();
            let decreasing = sups.windows(2).all(|w| w[1] < w[0]);
            if !decreasing {
                out.failed_checks.push("decay_trend".into());
            }
            out.summary.push(format!("hard-pair decay over L <= {max_l}: arc sups {sups:?}, strictly decreasing = {decreasing}"));
            (
                vec!["L", "k", "family_size", "pairs_total", "pairs_refined", "arc_sup", "padded_circle_sup", "unpadded_circle_sup", "x", "y"],
                rows,
            )
        }
        "distinctness" => {
            let max_n = params.n()?.unwrap_or(12);
            if max_n > 14 {
                return Err(CliError::Usage(format!("invalid value for --n: {max_n} (distinctness sweeps enumerate all pairs; at most 14)")));
            }
            let prm = channel(params, Some(0.5))?;
            let mut rows = Vec::new();
            for n in 1..=max_n {
                let k = distinctness_k(n);
                let vectors: Vec<Vec<f64>> = BitString::all(n).map(|x| dense_density_vector(&x, k, prm)).collect::<tracelab::Result<_>>()?;
                let per_row = par::map_range(vectors.len(), |i| {
                    (i + 1..vectors.len())
                        .map(|j| (vectors[i].iter().zip(&vectors[j]).map(|(a, b)| (a - b).abs()).sum::<f64>(), j))
                        .fold((f64::INFINITY, usize::MAX), |a, b| if b.0 < a.0 { b } else { a })
                });
                let (best, i, j) = per_row
                    .iter()
                    .enumerate()
                    .fold((f64::INFINITY, 0, 0), |acc, (i, &(d, j))| if d < acc.0 { (d, i, j) } else { acc });
                if best.is_finite() && best <= 0.0 {
                    out.failed_checks.push(format!("distinctness_n{n}"));
                }
                let (x, y) = (BitString::from_u64(i as u64, n), BitString::from_u64(j as u64, n));
                let shown = if best.is_finite() { format!("{best:e}") } else { "inf".into() };
                rows.push(vec![n.to_string(), k.to_string(), shown, x.to_string(), y.to_string()]);
                push(out, "report", params, None, json!({"n": n, "k": k, "min_l1": best.is_finite().then_some(best), "x": x, "y": y}));
            }
            out.summary.push(format!("distinctness minima for n = 1..={max_n} at p = {}", prm.p()));
            (vec!["n", "k", "min_l1", "x", "y"], rows)
        }
        "curve" => {
            if params.n()?.is_none() && params.x()?.is_none() {
                return Err(CliError::Usage("missing required flag --n".into()));
            }
            let (pool, seed) = curve_pool(params, "report --mode curve")?;
            let prm = channel(params, Some(0.2))?;
            let grid = powers_of_two_up_to(params.t()?.unwrap_or(32));
            let trials = params.trials()?.unwrap_or(200);
            let curve = amplified_success_curve(&pool, prm, &grid, trials, seed)?;
            let rows = curve
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.p.to_string(),
                        r.traces.to_string(),
                        r.source.to_string(),
                        r.successes.to_string(),
                        r.trials.to_string(),
                        r.success_rate.to_string(),
                        r.smoothed.to_string(),
                    ]
                })
                .collect();
            for r in &curve.rows {
                push(out, "report", params, Some(seed), to_value(r));
            }
            if !curve.trend_ok {
                out.failed_checks.push("success_trend".into());
            }
            out.summary.push(format!("MLE success curve: pooled {:?}, trend ok = {}", curve.pooled, curve.trend_ok));
            (vec!["n", "p", "T", "source", "successes", "trials", "success_rate", "smoothed"], rows)
        }
        _ => {
            let (x, _) = source(params, "report --mode distinguish")?;
            let y = partner(params, &x)?;
            let prm = channel(params, None)?;
            let grid = powers_of_two_up_to(params.t()?.unwrap_or(256));
            let trials = params.trials()?.unwrap_or(200);
            let k = params.k()?.unwrap_or_else(|| distinctness_k(x.len()));
            let seed = params.require_seed("report --mode distinguish")?;
            let mut rows = Vec::new();
            for (mi, m) in [Method::Mean, Method::Kgram(k)].into_iter().enumerate() {
                for (c, &t) in grid.iter().enumerate() {
                    let cell_seed = derive_seed(seed, (mi * grid.len() + c) as u64);
                    let r = success_rate(&x, &y, prm, m, t, trials, cell_seed)?;
                    rows.push(vec![
                        m.to_string(),
                        x.len().to_string(),
                        prm.p().to_string(),
                        t.to_string(),
                        r.rate.to_string(),
                        r.ci_low.to_string(),
                        r.ci_high.to_string(),
                        cell_seed.to_string(),
                    ]);
                    push(out, "report", params, Some(seed), json!({"x": x, "y": y, "result": r}));
                }
            }
            out.summary.push(format!("distinguisher sweep {x} vs {y} over T = {grid:?}"));
            (vec!["method", "n", "p", "T", "rate", "ci_low", "ci_high", "seed"], rows)
        }
    };
    out.csv = Some(to_csv(&header, &rows));
    Ok(())
}
