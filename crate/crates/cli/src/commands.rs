use std::collections::BTreeSet;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use dunkl_core::config::{CheckName, KernelKind, RunConfig, SymbolSource};
use dunkl_core::kernels::KernelEvaluator;
use dunkl_core::measure::{Ball, OrbitBall, WeightedMeasure};
use dunkl_core::reflection::GroupElement;
use dunkl_core::spaces::{vmo_profile, BallFamily, Bucket, Grid, GridFunction, OscillationReport};
use dunkl_core::verify::{self, box_points, SweepReport, VerifyError};

use crate::output::{column, coord_names, num, nums, read_table, write_csv, write_json, write_sweep};
use crate::RunContext;

fn measure_of(cfg: &RunConfig) -> Result<Arc<WeightedMeasure>> {
    let spec = cfg.group.spec()?;
    Ok(Arc::new(WeightedMeasure::with_config(&spec, cfg.quadrature.measure)?))
}

fn evaluator(cfg: &RunConfig) -> Result<KernelEvaluator> {
    Ok(KernelEvaluator::new(measure_of(cfg)?, cfg.quadrature.kernel)?)
}

fn element_order(g: &GroupElement) -> usize {
    let id = GroupElement::identity(g.dim());
    let mut p = g.clone();
    let mut k = 1;
    while p.max_abs_diff(&id) > 1e-9 && k < 10_000 {
        p = p.compose(g);
        k += 1;
    }
    k
}

pub fn group(cfg: &RunConfig, ctx: &RunContext) -> Result<bool> {
    let measure = measure_of(cfg)?;
    let g = measure.group();
    let n = g.dim();
    let mut header = vec!["element".to_string(), "order".into(), "trace".into()];
    for i in 0..n {
        for j in 0..n {
            header.push(format!("m{i}{j}"));
        }
    }
    let rows = g.elements().iter().enumerate().map(|(k, e)| {
        let trace: f64 = (0..n).map(|i| e.entry(i, i)).sum();
        let mut r = vec![k.to_string(), element_order(e).to_string(), num(trace)];
        r.extend(nums(e.as_slice()));
        r
    });
    write_csv(&ctx.out.join("group.csv"), &header, rows)?;

    let mut header = vec!["point".to_string(), "image".into()];
    header.extend(coord_names("y", n));
    header.push("distance".into());
    let mut rows = Vec::new();
    for (p, x) in cfg.orbits.points.iter().enumerate() {
        for (k, y) in g.orbit(x).iter().enumerate() {
            let mut r = vec![p.to_string(), k.to_string()];
            r.extend(nums(y));
            r.push(num(dunkl_core::reflection::dist(x, y)));
            rows.push(r);
        }
    }
    write_csv(&ctx.out.join("orbits.csv"), &header, rows)?;

    let defect = g
        .elements()
        .iter()
        .map(|e| e.orthogonality_defect())
        .fold(0.0, f64::max);
    let spec = measure.spec();
    let roots: Vec<Value> = spec
        .positive_roots()
        .map(|(a, k)| json!({ "root": a, "kappa": k }))
        .collect();
    write_json(
        &ctx.out.join("group.json"),
        &json!({
            "config": cfg.snapshot(),
            "dim": n,
            "order": g.order(),
            "positive_roots": roots,
            "gamma_kappa": spec.gamma_kappa(),
            "homogeneous_dim": spec.homogeneous_dim(),
            "closed_under_composition": g.multiplication_table().is_some(),
            "orthogonality_defect": defect,
        }),
    )?;
    println!(
        "group of order {} on R^{n}; artifacts in {}",
        g.order(),
        ctx.out.display()
    );
    Ok(true)
}

pub fn measure(cfg: &RunConfig, ctx: &RunContext) -> Result<bool> {
    let m = measure_of(cfg)?;
    let s = &cfg.measure;
    let n = m.dim();
    let mut centers = s.centers.clone();
    centers.extend(box_points(s.seed, s.random_centers, n, s.box_half));
    let mut tasks = Vec::new();
    for c in &centers {
        for &r in &s.radii {
            tasks.push((c.clone(), r, false));
            if s.orbit {
                tasks.push((c.clone(), r, true));
            }
        }
    }
    let results: Vec<(Option<f64>, Option<f64>, String)> = tasks
        .par_iter()
        .map(|(c, r, orbit)| {
            let ball = match Ball::new(c.clone(), *r) {
                Ok(b) => b,
                Err(e) => return (None, None, e.to_string()),
            };
            let est = if *orbit {
                m.orbit_ball_measure(&OrbitBall::new(ball), s.tol)
            } else {
                m.ball_measure(&ball, s.tol)
            };
            match est {
                Ok(e) => (Some(e.value), Some(e.error), String::new()),
                Err(err) => {
                    let best = err.best_estimate();
                    (best.map(|b| b.value), best.map(|b| b.error), err.to_string())
                }
            }
        })
        .collect();
    let seed = cfg.quadrature.measure.seed;
    let mut header = coord_names("c", n);
    header.extend(["radius", "region", "value", "stderr", "seed", "note"].map(String::from));
    let failures = results.iter().filter(|r| !r.2.is_empty()).count();
    let rows = tasks.iter().zip(&results).map(|((c, r, orbit), (v, e, note))| {
        let mut row: Vec<String> = nums(c).collect();
        row.push(num(*r));
        row.push(if *orbit { "orbit" } else { "ball" }.into());
        row.push(v.map(num).unwrap_or_default());
        row.push(e.map(num).unwrap_or_default());
        row.push(seed.to_string());
        row.push(note.clone());
        row
    });
    write_csv(&ctx.out.join("measure.csv"), &header, rows)?;
    write_json(
        &ctx.out.join("measure.json"),
        &json!({
            "config": cfg.snapshot(),
            "regions": tasks.len(),
            "failures": failures,
            "seed": seed,
            "homogeneous_dim": m.homogeneous_dim(),
        }),
    )?;
    println!(
        "{} regions, {failures} failures; artifacts in {}",
        tasks.len(),
        ctx.out.display()
    );
    Ok(failures == 0 || !ctx.strict)
}

struct KernelTask {
    x: Vec<f64>,
    y: Vec<f64>,
    t: Option<f64>,
}

pub fn kernel(cfg: &RunConfig, ctx: &RunContext) -> Result<bool> {
    let ke = evaluator(cfg)?;
    let n = ke.dim();
    let s = &cfg.kernel;
    let mut tasks = Vec::new();
    match &s.points {
        Some(p) => {
            let path = ctx.base.join(p);
            let (header, rows) = read_table(&path)?;
            let xs: Vec<usize> = (0..n)
                .map(|i| column(&header, &format!("x{i}"), &path))
                .collect::<Result<_>>()?;
            let ys: Vec<usize> = (0..n)
                .map(|i| column(&header, &format!("y{i}"), &path))
                .collect::<Result<_>>()?;
            let tc = header.iter().position(|h| h == "t");
            for r in rows {
                let x: Vec<f64> = xs.iter().map(|&k| r[k]).collect();
                let y: Vec<f64> = ys.iter().map(|&k| r[k]).collect();
                match (s.kind, tc) {
                    (KernelKind::Heat, Some(k)) => tasks.push(KernelTask { x, y, t: Some(r[k]) }),
                    (KernelKind::Heat, None) => {
                        for &t in &s.times {
                            tasks.push(KernelTask {
                                x: x.clone(),
                                y: y.clone(),
                                t: Some(t),
                            });
                        }
                    }
                    (KernelKind::Riesz, _) => tasks.push(KernelTask { x, y, t: None }),
                }
            }
        }
        None => {
            for (x, y) in s.pairs.sample(ke.measure().group()) {
                match s.kind {
                    KernelKind::Heat => {
                        for &t in &s.times {
                            tasks.push(KernelTask {
                                x: x.clone(),
                                y: y.clone(),
                                t: Some(t),
                            });
                        }
                    }
                    KernelKind::Riesz => tasks.push(KernelTask { x, y, t: None }),
                }
            }
        }
    }
    if s.kind == KernelKind::Heat {
        if let Some(bad) = tasks.iter().find(|t| !(t.t.unwrap_or(0.0) > 0.0)) {
            bail!("heat kernel times must be positive, got {:?}", bad.t);
        }
    }
    let methods = match s.kind {
        KernelKind::Heat => vec![None],
        KernelKind::Riesz => s.methods.iter().copied().map(Some).collect(),
    };
    let jobs: Vec<(usize, Option<dunkl_core::kernels::RieszMethod>)> = (0..tasks.len())
        .flat_map(|i| methods.iter().map(move |&m| (i, m)))
        .collect();
    let results: Vec<Vec<String>> = jobs
        .par_iter()
        .map(|&(i, method)| {
            let t = &tasks[i];
            let (param, name, out) = match method {
                None => (
                    t.t.unwrap_or_default(),
                    "heat",
                    ke.heat_kernel(t.t.unwrap_or_default(), &t.x, &t.y)
                        .map(|v| (v, None, false)),
                ),
                Some(m) => (
                    s.j as f64,
                    m.name(),
                    ke.riesz_kernel(m, s.j, &t.x, &t.y)
                        .map(|v| (v.value, Some(v.est_error), v.near_hyperplane)),
                ),
            };
            let mut row: Vec<String> = nums(&t.x).chain(nums(&t.y)).collect();
            row.push(if method.is_none() { num(param) } else { s.j.to_string() });
            match out {
                Ok((v, e, near)) => {
                    row.extend([num(v), name.into(), e.map(num).unwrap_or_default()]);
                    row.push(if near { "near-hyperplane".into() } else { String::new() });
                }
                Err(err) => row.extend([String::new(), name.into(), String::new(), err.to_string()]),
            }
            row
        })
        .collect();
    let failures = results.iter().filter(|r| r[2 * n + 1].is_empty()).count();
    let mut header = coord_names("x", n);
    header.extend(coord_names("y", n));
    header.push(if s.kind == KernelKind::Heat { "t" } else { "j" }.into());
    header.extend(["value", "method", "est_error", "note"].map(String::from));
    write_csv(&ctx.out.join("kernel.csv"), &header, results)?;
    write_json(
        &ctx.out.join("kernel.json"),
        &json!({ "config": cfg.snapshot(), "evaluations": jobs.len(), "failures": failures }),
    )?;
    println!(
        "{} evaluations, {failures} failures; artifacts in {}",
        jobs.len(),
        ctx.out.display()
    );
    Ok(failures == 0 || !ctx.strict)
}

fn symbol_on(cfg: &RunConfig, ctx: &RunContext, grid: Arc<Grid>) -> Result<(String, GridFunction)> {
    match &cfg.bmo.symbol {
        SymbolSource::Preset(p) => Ok((p.name().to_string(), p.sample(grid))),
        SymbolSource::Samples { samples } => {
            let path = ctx.base.join(samples);
            let (header, rows) = read_table(&path)?;
            let n = grid.dim();
            let xs: Vec<usize> = (0..n)
                .map(|i| column(&header, &format!("x{i}"), &path))
                .collect::<Result<_>>()?;
            let bc = column(&header, "b", &path)?;
            if rows.len() != grid.len() {
                bail!(
                    "{}: {} rows, but the grid has {} sites",
                    path.display(),
                    rows.len(),
                    grid.len()
                );
            }
            for (i, r) in rows.iter().enumerate() {
                let p = grid.point(i);
                if xs
                    .iter()
                    .enumerate()
                    .any(|(k, &c)| (r[c] - p[k]).abs() > 1e-9 * (1.0 + p[k].abs()))
                {
                    bail!("{}: row {} is not at grid site {:?}", path.display(), i + 1, p);
                }
            }
            let values = rows.iter().map(|r| r[bc]).collect();
            Ok(("samples".into(), GridFunction::from_values(grid, values)?))
        }
    }
}

fn buckets_json(b: &[Bucket]) -> Value {
    Value::Array(
        b.iter()
            .map(|k| json!({ "lo": k.lo, "hi": if k.hi.is_finite() { json!(k.hi) } else { json!("inf") }, "sup": k.sup, "count": k.count }))
            .collect(),
    )
}

pub fn bmo(cfg: &RunConfig, ctx: &RunContext) -> Result<bool> {
    let m = measure_of(cfg)?;
    let s = &cfg.bmo;
    let n = m.dim();
    let grid = Arc::new(Grid::symmetric(m, s.grid.half_width, s.grid.cells)?);
    let (name, b) = symbol_on(cfg, ctx, grid.clone())?;
    let family = s.family.family(n)?;
    let radii = BallFamily::dyadic_radii(s.family.r_min, s.family.r_max);
    let by_radius: Vec<Bucket> = radii.iter().rev().map(|&r| Bucket::new(r, r * (1.0 + 1e-9))).collect();
    let mut edges = s.distance_edges.clone();
    edges.push(f64::INFINITY);
    let by_distance: Vec<Bucket> = edges.windows(2).map(|w| Bucket::new(w[0], w[1])).collect();
    let mut modes = Vec::new();
    for &mode in &s.modes {
        let rep: OscillationReport = vmo_profile(&b, mode, &family, &by_radius, &by_distance);
        let mut header = coord_names("c", n);
        header.extend(["radius", "average", "oscillation", "sites"].map(String::from));
        let rows = rep.rows.iter().map(|r| {
            let mut v: Vec<String> = nums(&r.center).collect();
            v.extend([num(r.radius), num(r.average), num(r.oscillation), r.sites.to_string()]);
            v
        });
        write_csv(&ctx.out.join(format!("bmo_{}.csv", mode.name())), &header, rows)?;
        println!(
            "{} sup {} over {} balls ({} unresolved)",
            mode.name(),
            num(rep.sup),
            rep.rows.len(),
            rep.unresolved
        );
        modes.push(json!({
            "mode": mode.name(),
            "sup": rep.sup,
            "balls": rep.rows.len(),
            "unresolved": rep.unresolved,
            "by_radius": buckets_json(&rep.by_radius),
            "by_distance": buckets_json(&rep.by_distance),
        }));
    }
    write_json(
        &ctx.out.join("bmo.json"),
        &json!({ "config": cfg.snapshot(), "symbol": name, "sites": grid.len(), "modes": modes }),
    )?;
    Ok(true)
}

pub fn commutator(cfg: &RunConfig, ctx: &RunContext) -> Result<bool> {
    let rep = verify::check_commutator_bounds(measure_of(cfg)?, cfg.quadrature.kernel, &cfg.commutator)?;
    write_sweep(&ctx.out.join("commutator.csv"), &rep)?;
    let results: Vec<Value> = rep
        .rows
        .iter()
        .map(|r| {
            let v = &r.values;
            json!({
                "preset": cfg.commutator.presets[v[0] as usize].name(),
                "cells": v[1] as usize,
                "op_norm_lower": v[2],
                "bmo_euclidean": v[3],
                "bmo_orbit": v[4],
                "ratios": { "op_over_bmo_orbit": v[5], "bmo_euclidean_over_op": v[6] },
            })
        })
        .collect();
    write_json(
        &ctx.out.join("commutator.json"),
        &json!({
            "config": cfg.snapshot(),
            "results": results,
            "fitted": rep.fitted,
            "passed": rep.passed,
            "notes": rep.notes,
        }),
    )?;
    for r in &rep.rows {
        println!(
            "{:<15} cells {:>5}  op {:<10.4} bmo_euclidean {:<8.4} bmo_orbit {:<8.4}",
            r.note, r.values[1], r.values[2], r.values[3], r.values[4]
        );
    }
    println!("{}", if rep.passed { "PASS" } else { "FAIL" });
    Ok(rep.passed || !ctx.strict)
}

fn run_check(cfg: &RunConfig, ke: &KernelEvaluator, check: CheckName) -> std::result::Result<SweepReport, VerifyError> {
    let v = &cfg.verify;
    match check {
        CheckName::Size => verify::check_size(ke, &v.size),
        CheckName::SmoothnessX => verify::check_smoothness(ke, &v.smoothness_x),
        CheckName::SmoothnessY => verify::check_smoothness(ke, &v.smoothness_y),
        CheckName::LowerBound => verify::check_lower_bound(ke, &v.lower_bound),
        CheckName::Hormander => verify::check_hormander(ke, &v.hormander),
        CheckName::Heat => verify::check_heat_bounds(ke, &v.heat),
        CheckName::Commutator => {
            verify::check_commutator_bounds(ke.measure().clone(), cfg.quadrature.kernel, &cfg.commutator)
        }
    }
}

pub fn verify_all(cfg: &RunConfig, ctx: &RunContext) -> Result<bool> {
    let ke = evaluator(cfg)?;
    let mut seen = BTreeSet::new();
    let mut all = true;
    let mut checks = Vec::new();
    for &check in &cfg.verify.checks {
        if !seen.insert(check) {
            continue;
        }
        let name = check.name();
        let entry = match run_check(cfg, &ke, check) {
            Ok(rep) => {
                write_sweep(&ctx.out.join(format!("verify_{}.csv", name.replace('-', "_"))), &rep)
                    .with_context(|| format!("writing {name}"))?;
                let status = if rep.passed { "PASS" } else { "FAIL" };
                all &= rep.passed;
                println!(
                    "{status} {name}: sup {} inf {} samples {} violations {} failed {}",
                    num(rep.sup),
                    num(rep.inf),
                    rep.samples(),
                    rep.violations,
                    rep.failed
                );
                json!({
                    "check": name,
                    "status": status,
                    "samples": rep.samples(),
                    "sup": rep.sup,
                    "inf": rep.inf,
                    "violations": rep.violations,
                    "rejected": rep.rejected,
                    "failed": rep.failed,
                    "fitted": rep.fitted,
                    "threshold": rep.threshold,
                    "notes": rep.notes,
                })
            }
            Err(VerifyError::NotImplemented(why)) => {
                all &= !ctx.strict;
                println!("SKIPPED {name}: {why}");
                json!({ "check": name, "status": "SKIPPED", "reason": why })
            }
            Err(e) => {
                all = false;
                println!("ERROR {name}: {e}");
                json!({ "check": name, "status": "ERROR", "reason": e.to_string() })
            }
        };
        checks.push(entry);
    }
    write_json(
        &ctx.out.join("verdict.json"),
        &json!({ "config": cfg.snapshot(), "all_passed": all, "checks": checks }),
    )?;
    println!("{}", if all { "ALL PASS" } else { "NOT ALL PASS" });
    Ok(all)
}
