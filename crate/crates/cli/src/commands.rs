use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use cat0_core::ann::{ann_margin_indices, ann_sample, AnnCertificate};
use cat0_core::boxtimes::{check_boxtimes, embed5_decide, normalized_margin};
use cat0_core::euclid::{proof_trace, EuclideanConfig};
use cat0_core::graph::{
    cycl_check, feasibility, o3_check, verify_gram, ComparisonGraph, Feasibility, FeasibilityOptions,
};
use cat0_core::lebedeva::{
    boxtimes_safe_fraction, d_epsilon, default_epsilon, equality_config, fit_shape,
    max_metric_epsilon, predicted_margin, Shape,
};
use cat0_core::sixpoint::{
    all_labelings, sixpoint_min_over_labelings, sixpoint_search_with, SearchOptions,
    SixPointParams, SIX_ROLES,
};
use cat0_core::witness::{ViolationWitness, WitnessDocument};
use cat0_core::{FiniteMetricSpace, TOL_MARGIN};

use crate::report::{InputInfo, Report, EXIT_OK, EXIT_UNKNOWN, EXIT_VIOLATED};
use crate::{Cli, Command, Family, ShapeMode};

pub fn run(cli: &Cli, report: &mut Report) -> Result<()> {
    match &cli.command {
        Command::Validate { path, .. } => validate(path, report),
        Command::Check {
            path,
            family,
            params,
            labeling,
            grid,
            samples,
            m,
            n,
            assignments,
            ..
        } => {
            let space = read_space(path, report)?;
            match family {
                Family::Boxtimes => check_box(&space, report),
                Family::Sixpoint => check_six(&space, params.as_deref(), labeling.as_deref(), *grid, report),
                Family::Ann => {
                    let n = n.unwrap_or(space.len().min(6));
                    check_ann(&space, *samples, *m, n, *assignments, cli.seed, report)
                }
            }
        }
        Command::Lebedeva {
            params,
            epsilon,
            shape,
            angle,
            span,
            height,
            out,
            ..
        } => lebedeva(params, epsilon, *shape, [*angle, *span, *height], out, report),
        Command::Graph {
            path,
            graph,
            map,
            max_iter,
            ..
        } => graph_cmd(path, graph, map.as_deref(), *max_iter, report),
        Command::Trace { path, params, .. } => trace(path, params.as_deref(), report),
    }
}

fn parse_params(text: &str) -> Result<SixPointParams> {
    let v: Vec<f64> = text
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("cannot parse parameters `{text}`"))?;
    if v.len() != 5 {
        bail!("expected five parameters a,b,c,s,t, got {}", v.len());
    }
    Ok(SixPointParams::new(v[0], v[1], v[2], v[3], v[4])?)
}

fn split_labels(text: &str) -> Vec<String> {
    text.split(',').map(|s| s.trim().to_string()).collect()
}

fn read_space(path: &Path, report: &mut Report) -> Result<FiniteMetricSpace> {
    let mut info = InputInfo::of(path).with_context(|| format!("cannot read {}", path.display()))?;
    let space = FiniteMetricSpace::read(path).with_context(|| format!("invalid space {}", path.display()))?;
    info.space_checksum = Some(space.checksum());
    report.input = Some(info);
    Ok(space)
}

fn witness_json(space: &FiniteMetricSpace, w: &ViolationWitness) -> Value {
    json!({
        "margin": w.margin,
        "normalized_margin": normalized_margin(space, w.margin),
        "witness": WitnessDocument::new(space, w.clone()),
    })
}

fn validate(path: &Path, report: &mut Report) -> Result<()> {
    report.input = Some(InputInfo::of(path).with_context(|| format!("cannot read {}", path.display()))?);
    let text = std::fs::read_to_string(path)?;
    let doc: cat0_core::metric::MetricDocument =
        serde_json::from_str(&text).with_context(|| format!("malformed space file {}", path.display()))?;
    let n = doc.labels.len();
    if doc.dist.len() != n || doc.dist.iter().any(|r| r.len() != n) {
        bail!("distance matrix is not {n} x {n}");
    }
    let flat: Vec<f64> = doc.dist.iter().flatten().copied().collect();
    let vr = cat0_core::metric::validate_matrix(n, &flat);
    let named: Vec<Value> = vr
        .violations
        .iter()
        .map(|v| {
            json!({
                "kind": v.kind,
                "labels": v.indices.iter().map(|&i| doc.labels[i].clone()).collect::<Vec<_>>(),
                "slack": v.slack,
            })
        })
        .collect();
    if vr.ok {
        eprintln!("valid metric space on {n} points");
        report.finish("valid", EXIT_OK, json!({ "n": n, "ok": true, "violations": named }));
    } else {
        eprintln!("not a metric: {}", vr.summary());
        report.finish("invalid", EXIT_VIOLATED, json!({ "n": n, "ok": false, "violations": named }));
    }
    Ok(())
}

fn check_box(space: &FiniteMetricSpace, report: &mut Report) -> Result<()> {
    let outcome = report.time("boxtimes", || check_boxtimes(space));
    let mut result = witness_json(space, outcome.worst());
    if space.len() <= 5 {
        let verdict = embed5_decide(space)?;
        result["embeddable"] = json!(verdict.embeddable);
    }
    let (verdict, code) = if outcome.is_satisfied() {
        ("satisfied", EXIT_OK)
    } else {
        ("violated", EXIT_VIOLATED)
    };
    eprintln!(
        "boxtimes {verdict}: worst normalized margin {:e}{}",
        normalized_margin(space, outcome.worst().margin),
        match result.get("embeddable") {
            Some(Value::Bool(true)) => " (embeddable)",
            Some(Value::Bool(false)) => " (not embeddable)",
            _ => "",
        }
    );
    report.finish(verdict, code, result);
    Ok(())
}

fn check_six(
    space: &FiniteMetricSpace,
    params: Option<&str>,
    labeling: Option<&str>,
    grid: usize,
    report: &mut Report,
) -> Result<()> {
    let labeling = labeling.map(split_labels);
    if let Some(l) = &labeling {
        if l.len() != 6 {
            bail!("labeling needs six labels, got {}", l.len());
        }
        space.indices_of(l)?;
    }
    let (witness, mode) = match params.map(parse_params).transpose()? {
        Some(p) => {
            let canonical: Option<Vec<String>> = labeling.clone().or_else(|| {
                SIX_ROLES
                    .iter()
                    .all(|r| space.index_of(r).is_ok())
                    .then(|| SIX_ROLES.iter().map(|s| s.to_string()).collect())
            });
            match canonical {
                Some(l) => {
                    let idx = space.indices_of(&l)?;
                    let lab: [usize; 6] = std::array::from_fn(|k| idx[k]);
                    (sixpoint_min_over_labelings(space, &[lab], p)?, "fixed")
                }
                None => (
                    report.time("labelings", || sixpoint_min_over_labelings(space, &all_labelings(space.len()), p))?,
                    "min_over_labelings",
                ),
            }
        }
        None => {
            let labelings = match &labeling {
                Some(l) => {
                    let idx = space.indices_of(l)?;
                    vec![std::array::from_fn(|k| idx[k])]
                }
                None => all_labelings(space.len()),
            };
            let opts = SearchOptions {
                grid_points: grid,
                ..SearchOptions::default()
            };
            (report.time("search", || sixpoint_search_with(space, &labelings, opts)), "search")
        }
    };
    let nm = normalized_margin(space, witness.margin);
    let (verdict, code) = if nm >= -TOL_MARGIN {
        ("satisfied", EXIT_OK)
    } else {
        ("violated", EXIT_VIOLATED)
    };
    eprintln!("sixpoint {verdict} ({mode}): margin {:e}, normalized {nm:e}", witness.margin);
    let mut result = witness_json(space, &witness);
    result["mode"] = json!(mode);
    report.finish(verdict, code, result);
    Ok(())
}

/// Point assignments for an `n`-point certificate: all of them when there
/// are at most `cap`, otherwise `cap` seeded random ones. Injective when
/// the space has at least `n` points.
fn assignments(len: usize, n: usize, cap: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let injective = len >= n;
    let total = if injective {
        (len - n + 1..=len).try_fold(1usize, |acc, k| acc.checked_mul(k))
    } else {
        len.checked_pow(n as u32)
    };
    if matches!(total, Some(t) if t <= cap) {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(n);
        enumerate(len, n, injective, &mut cur, &mut out);
        return out;
    }
    let all: Vec<usize> = (0..len).collect();
    (0..cap)
        .map(|_| {
            if injective {
                let mut v = all.clone();
                v.shuffle(rng);
                v.truncate(n);
                v
            } else {
                (0..n).map(|_| rng.random_range(0..len)).collect()
            }
        })
        .collect()
}

fn enumerate(len: usize, n: usize, injective: bool, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == n {
        out.push(cur.clone());
        return;
    }
    for i in 0..len {
        if injective && cur.contains(&i) {
            continue;
        }
        cur.push(i);
        enumerate(len, n, injective, cur, out);
        cur.pop();
    }
}

fn check_ann(
    space: &FiniteMetricSpace,
    samples: usize,
    max_m: usize,
    n: usize,
    cap: usize,
    seed: u64,
    report: &mut Report,
) -> Result<()> {
    if space.is_empty() || n == 0 || max_m == 0 {
        bail!("ANN sweep needs a nonempty space and n, m >= 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plan: Vec<(u64, usize, Vec<Vec<usize>>)> = (0..samples)
        .map(|k| {
            let cert_seed = rng.random::<u64>();
            (cert_seed, 1 + k % max_m, assignments(space.len(), n, cap, &mut rng))
        })
        .collect();
    let results: Vec<(f64, u64, usize, Vec<usize>)> = report.time("ann", || {
        plan.par_iter()
            .map(|(cert_seed, m, assigns)| {
                let cert = ann_sample(n, *m, *cert_seed);
                let mut best = (f64::INFINITY, Vec::new());
                for a in assigns {
                    let v = ann_margin_indices(space, &cert, a).expect("sampled certificates are valid");
                    if v < best.0 {
                        best = (v, a.clone());
                    }
                }
                (best.0, *cert_seed, *m, best.1)
            })
            .collect()
    });
    let worst = results
        .iter()
        .enumerate()
        .min_by(|x, y| x.1 .0.total_cmp(&y.1 .0).then(x.0.cmp(&y.0)));
    let Some((k, (margin, cert_seed, m, assign))) = worst else {
        bail!("no certificates sampled");
    };
    let nm = normalized_margin(space, *margin);
    let (verdict, code) = if nm >= -TOL_MARGIN {
        ("satisfied", EXIT_OK)
    } else {
        ("violated", EXIT_VIOLATED)
    };
    let cert: AnnCertificate = ann_sample(n, *m, *cert_seed);
    eprintln!("ann {verdict}: {samples} certificates, worst normalized margin {nm:e}");
    report.finish(
        verdict,
        code,
        json!({
            "samples": samples,
            "n": n,
            "margin": margin,
            "normalized_margin": nm,
            "worst": {
                "sample": k,
                "certificate_seed": cert_seed,
                "m": m,
                "assignment": assign.iter().map(|&i| space.labels()[i].clone()).collect::<Vec<_>>(),
                "certificate": cert,
            },
        }),
    );
    Ok(())
}

fn lebedeva(
    params: &str,
    epsilon: &str,
    mode: ShapeMode,
    manual: [Option<f64>; 3],
    out: &Path,
    report: &mut Report,
) -> Result<()> {
    let p = parse_params(params)?;
    enum Eps {
        Auto,
        Fraction(f64),
        Absolute(f64),
    }
    let eps = match epsilon.trim() {
        "auto" => Eps::Auto,
        e if e.ends_with('x') => Eps::Fraction(e[..e.len() - 1].parse().context("bad epsilon fraction")?),
        e => Eps::Absolute(e.parse().context("bad epsilon")?),
    };
    let mut shape = match mode {
        ShapeMode::Default => Shape::default(),
        ShapeMode::Fit => {
            let fraction = match eps {
                Eps::Fraction(f) => f,
                _ => 0.1,
            };
            report.time("fit_shape", || fit_shape(p, fraction))?
        }
    };
    if let Some(a) = manual[0] {
        shape.angle_deg = a;
    }
    if let Some(s) = manual[1] {
        shape.y_span = s;
    }
    if let Some(h) = manual[2] {
        shape.height = h;
    }
    let base = equality_config(p, shape)?;
    let max = max_metric_epsilon(&base);
    let value = match eps {
        Eps::Auto => default_epsilon(&base),
        Eps::Fraction(f) => f * max,
        Eps::Absolute(v) => v,
    };
    let config = base.with_epsilon(value)?;
    let space = d_epsilon(&config)?;

    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let config_path = out.join("config.json");
    let metric_path = out.join("metric.json");
    std::fs::write(&config_path, config.to_json())?;
    space.write(&metric_path)?;

    let d = config.z_length();
    let predicted = predicted_margin(p, d, value);
    let safe = boxtimes_safe_fraction(&config);
    eprintln!("max_metric_epsilon {max:e}; epsilon {value:e}; predicted six-point margin {predicted:e}");
    eprintln!("wrote {} and {}", config_path.display(), metric_path.display());
    report.finish(
        "written",
        EXIT_OK,
        json!({
            "params": p,
            "shape": shape,
            "epsilon": value,
            "max_metric_epsilon": max,
            "z_length": d,
            "predicted_margin": predicted,
            "boxtimes_safe_fraction": safe,
            "config": config_path,
            "metric": metric_path,
            "space_checksum": space.checksum(),
        }),
    );
    Ok(())
}

fn graph_cmd(path: &Path, spec: &str, map: Option<&str>, max_iter: usize, report: &mut Report) -> Result<()> {
    let space = read_space(path, report)?;
    let default_map = |k: usize| -> Result<Vec<String>> {
        if k == 6 && SIX_ROLES.iter().all(|r| space.index_of(r).is_ok()) {
            return Ok(SIX_ROLES.iter().map(|s| s.to_string()).collect());
        }
        if space.len() < k {
            bail!("graph has {k} vertices but the space only {} points", space.len());
        }
        Ok(space.labels()[..k].to_vec())
    };
    let (graph, map, verdict) = if let Some(n) = spec.strip_prefix("cycle:") {
        let n: usize = n.parse().with_context(|| format!("bad cycle length `{n}`"))?;
        let map = map.map(split_labels).map_or_else(|| default_map(n), Ok)?;
        let v = report.time("feasibility", || cycl_check(&space, n, &map, max_iter))?;
        (cat0_core::graph::graph_cycle(n)?, map, v)
    } else if spec == "o3" {
        let map = map.map(split_labels).map_or_else(|| default_map(6), Ok)?;
        let v = report.time("feasibility", || o3_check(&space, &map, max_iter))?;
        (cat0_core::graph::graph_octahedron(), map, v)
    } else {
        let graph = ComparisonGraph::read(spec).with_context(|| format!("cannot read graph `{spec}`"))?;
        let map = map.map(split_labels).map_or_else(|| default_map(graph.n()), Ok)?;
        let opts = FeasibilityOptions {
            max_iter,
            ..FeasibilityOptions::default()
        };
        let v = report.time("feasibility", || feasibility(&space, &graph, &map, &opts))?;
        (graph, map, v)
    };
    let code = match &verdict {
        Feasibility::Feasible { .. } => EXIT_OK,
        Feasibility::CertifiedInfeasible { .. } => EXIT_VIOLATED,
        Feasibility::Unknown { .. } => EXIT_UNKNOWN,
    };
    let mut result = json!({
        "graph": graph,
        "map": map,
        "outcome": verdict,
    });
    match &verdict {
        Feasibility::Feasible { solution, iterations } => {
            let ok = verify_gram(solution, &space, &graph, &map, cat0_core::graph::TOL_FEAS)?;
            result["gram_verified"] = json!(ok);
            eprintln!("feasible after {iterations} iterations (Gram check {ok})");
        }
        Feasibility::CertifiedInfeasible { check, .. } => {
            eprintln!(
                "certified infeasible: normalized value {:e}, min eigenvalue {:e}",
                check.normalized_value, check.normalized_min_eigenvalue
            );
        }
        Feasibility::Unknown { iterations, residual } => {
            eprintln!("unknown after {iterations} iterations (residual {residual:e})");
        }
    }
    report.finish(verdict.name(), code, result);
    Ok(())
}

fn trace(path: &Path, params: Option<&str>, report: &mut Report) -> Result<()> {
    report.input = Some(InputInfo::of(path).with_context(|| format!("cannot read {}", path.display()))?);
    let config = EuclideanConfig::read(path).with_context(|| format!("invalid configuration {}", path.display()))?;
    let p = match params {
        Some(text) => parse_params(text)?,
        None => {
            let raw: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            let stored = raw.get("params").filter(|v| !v.is_null()).ok_or_else(|| {
                anyhow!("no --params given and the configuration stores none")
            })?;
            serde_json::from_value(stored.clone())?
        }
    };
    let tr = report.time("trace", || proof_trace(&config, p))?;
    let diam = config.to_metric()?.diameter();
    let scale = if diam > 0.0 { diam * diam } else { 1.0 };
    let min = tr.min_residual() / scale;
    let (verdict, code) = if min >= -TOL_MARGIN {
        ("consistent", EXIT_OK)
    } else {
        ("inconsistent", EXIT_VIOLATED)
    };
    eprintln!(
        "trace {verdict}: min normalized residual {min:e}{}",
        if tr.is_reduced() { " (reduced chain)" } else { "" }
    );
    report.finish(
        verdict,
        code,
        json!({
            "params": p,
            "reduced": tr.is_reduced(),
            "min_normalized_residual": min,
            "max_abs_normalized_residual": tr.max_abs_residual() / scale,
            "steps": tr,
        }),
    );
    Ok(())
}
