use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{
    ApproxTask, ExperimentConfig, APPROX_STREAM, ESP_STREAM, FMP_STREAM, LYAPUNOV_STREAM,
};
use super::output::{fmt_f64, fmt_opt, write_csv, write_json, Meta};
use super::{Outcome, EXIT_NEGATIVE, EXIT_OK};
use crate::capacity::{capacity_spectrum, ipc as ipc_report, CapacityEstimator, CapacityOptions};
use crate::certification::{
    certify_contraction, default_washout, empirical_esp_test, Certificate, EspTestConfig,
};
use crate::error::{Error, Result};
use crate::fmp::{empirical_fmp_check, pullback_convergence, PullbackConfig};
use crate::lyapunov::{kaplan_yorke, ks_entropy, lyapunov_spectrum_scalar, LyapunovConfig};
use crate::reservoir::Reservoir;
use crate::rng::derive_seed;
use crate::signals::{delayed_target, generate, narma_series, product_target, Aligned, SignalSpec};

const NARMA_ATTEMPTS: usize = 20;

fn meta(cfg: &ExperimentConfig, command: &str) -> Meta {
    Meta::new(command, cfg.hash(), cfg.seed)
}

fn column(u: &[f64]) -> Vec<Vec<f64>> {
    u.iter().map(|v| vec![*v]).collect()
}

fn exit_if(ok: bool) -> i32 {
    if ok {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    }
}

#[derive(Serialize)]
struct CertifyBody<'a> {
    n: usize,
    activation: &'static str,
    leak_rate: f64,
    certificate: &'a Certificate,
    /// Only meaningful when the certificate passes.
    suggested_washout: usize,
    radius_rule_only: bool,
}

pub(super) fn certify(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let res = cfg.design().build()?;
    let cert = certify_contraction(&res)?;
    let body = CertifyBody {
        n: res.n(),
        activation: res.activation().name(),
        leak_rate: res.leak_rate(),
        certificate: &cert,
        suggested_washout: default_washout(&cert),
        radius_rule_only: cert.radius_rule_only(),
    };
    let path = write_json(dir, "certificate.json", &meta(cfg, "certify"), &body)?;
    Ok(Outcome {
        exit_code: exit_if(cert.passes),
        files: vec![path],
        summary: format!(
            "contraction factor {} ({})",
            fmt_f64(cert.contraction_factor),
            if cert.passes {
                "certified"
            } else {
                "not certified"
            }
        ),
    })
}

pub(super) fn drive(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let res = cfg.design().build()?;
    let u = generate(&cfg.signal_spec()?)?;
    let washout = cfg.drive.washout;
    if washout >= u.len() {
        return Err(Error::Config(format!(
            "drive washout {washout} leaves nothing of {} steps",
            u.len()
        )));
    }
    let traj = res.drive_scalar(&vec![0.0; res.n()], &u, washout)?;
    let n = res.n();
    let mut header = vec!["t".to_owned(), "u".to_owned()];
    header.extend((0..n).map(|i| format!("x{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = traj
        .harvested()
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let t = washout + k;
            let mut r = Vec::with_capacity(n + 2);
            r.push(t.to_string());
            r.push(fmt_f64(u[t]));
            r.extend(x.iter().map(|v| fmt_f64(*v)));
            r
        })
        .collect();
    let m = meta(cfg, "drive");
    let a = write_csv(dir, "trajectory.csv", &m, &header, &rows)?;
    #[derive(Serialize)]
    struct Body<'a> {
        reservoir: &'a Reservoir,
    }
    let b = write_json(dir, "reservoir.json", &m, &Body { reservoir: &res })?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        files: vec![a, b],
        summary: format!("{} states of dimension {n}", rows.len()),
    })
}

#[derive(Serialize)]
struct EspBody<'a> {
    certificate: &'a Certificate,
    converged: bool,
    final_distance: f64,
    fitted_rate: Option<f64>,
    pairs: usize,
    horizon: usize,
    tol: f64,
}

pub(super) fn esp_test(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let res = cfg.design().build()?;
    let cert = certify_contraction(&res)?;
    let u = generate(&cfg.signal_spec()?)?;
    let e = &cfg.esp_test;
    let report = empirical_esp_test(
        &res,
        &column(&u),
        &EspTestConfig {
            pairs: e.pairs,
            seed: derive_seed(cfg.seed, ESP_STREAM),
            horizon: e.horizon,
            tol: e.tol,
        },
    )?;
    let m = meta(cfg, "esp-test");
    let body = EspBody {
        certificate: &cert,
        converged: report.converged,
        final_distance: report.final_distance,
        fitted_rate: report.fitted_rate,
        pairs: report.trials,
        horizon: report.horizon,
        tol: e.tol,
    };
    let a = write_json(dir, "esp_report.json", &m, &body)?;
    let rows: Vec<Vec<String>> = report
        .max_distances
        .iter()
        .enumerate()
        .map(|(t, d)| vec![t.to_string(), fmt_f64(*d)])
        .collect();
    let b = write_csv(dir, "esp_distances.csv", &m, &["t", "max_distance"], &rows)?;
    Ok(Outcome {
        exit_code: exit_if(report.converged),
        files: vec![a, b],
        summary: format!(
            "final distance {} ({})",
            fmt_f64(report.final_distance),
            if report.converged {
                "converged"
            } else {
                "not converged"
            }
        ),
    })
}

#[derive(Serialize)]
struct FmpBody {
    certified: bool,
    contraction_factor: f64,
    lambda: f64,
    horizon: usize,
    /// `None` when the reservoir is not certified.
    lipschitz_constant: Option<f64>,
    pairs_checked: usize,
    all_hold: Option<bool>,
    /// Largest `lhs / rhs` over the pairs.
    worst_ratio: Option<f64>,
    pullback_final_diameter: f64,
    pullback_singleton: bool,
    pullback_exact_pairs: bool,
    ensemble_size: usize,
}

pub(super) fn fmp_test(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let res = cfg.design().build()?;
    let cert = certify_contraction(&res)?;
    let f = &cfg.fmp_test;
    let base = cfg.signal_spec()?;
    let stream = derive_seed(cfg.seed, FMP_STREAM);
    let m = meta(cfg, "fmp-test");
    let mut files = Vec::new();

    let mut pair_rows = Vec::new();
    let mut lipschitz = None;
    if cert.passes {
        let draw = |k: u64| -> Result<Vec<Vec<f64>>> {
            let spec = SignalSpec {
                length: f.horizon,
                seed: derive_seed(stream, k),
                ..base
            };
            Ok(column(&generate(&spec)?))
        };
        let reports = (0..f.pairs as u64)
            .into_par_iter()
            .map(|i| {
                let u = draw(2 * i)?;
                let v = draw(2 * i + 1)?;
                empirical_fmp_check(&res, &u, &v, f.lambda, f.horizon)
            })
            .collect::<Result<Vec<_>>>()?;
        lipschitz = reports.first().map(|r| r.lipschitz_constant);
        pair_rows = reports;
    }
    let all_hold = cert.passes.then(|| pair_rows.iter().all(|r| r.holds));
    let worst_ratio = pair_rows
        .iter()
        .filter(|r| r.rhs > 0.0)
        .map(|r| r.lhs / r.rhs)
        .reduce(f64::max);

    let u = generate(&base)?;
    let pull = pullback_convergence(
        &res,
        &column(&u),
        &PullbackConfig {
            ensemble_size: f.ensemble_size,
            init_box_radius: f.init_box_radius,
            seed: derive_seed(stream, u64::MAX),
            tol: f.tol,
        },
    )?;

    let body = FmpBody {
        certified: cert.passes,
        contraction_factor: cert.contraction_factor,
        lambda: f.lambda,
        horizon: f.horizon,
        lipschitz_constant: lipschitz,
        pairs_checked: pair_rows.len(),
        all_hold,
        worst_ratio,
        pullback_final_diameter: *pull.diameters.last().expect("nonempty"),
        pullback_singleton: pull.singleton,
        pullback_exact_pairs: pull.exact_pairs,
        ensemble_size: f.ensemble_size,
    };
    files.push(write_json(dir, "fmp_report.json", &m, &body)?);
    if cert.passes {
        let rows: Vec<Vec<String>> = pair_rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                vec![
                    i.to_string(),
                    fmt_f64(r.lhs),
                    fmt_f64(r.rhs),
                    fmt_f64(r.anchored_rhs),
                    r.holds.to_string(),
                ]
            })
            .collect();
        files.push(write_csv(
            dir,
            "fmp_pairs.csv",
            &m,
            &["pair", "lhs", "rhs", "anchored_rhs", "holds"],
            &rows,
        )?);
    }
    let rows: Vec<Vec<String>> = pull
        .diameters
        .iter()
        .enumerate()
        .map(|(t, d)| vec![t.to_string(), fmt_f64(*d)])
        .collect();
    files.push(write_csv(
        dir,
        "pullback_diameter.csv",
        &m,
        &["t", "diameter"],
        &rows,
    )?);

    let ok = cert.passes && all_hold == Some(true) && pull.singleton;
    let summary = if cert.passes {
        format!(
            "{} of {} pairs within the bound; pullback diameter {}",
            pair_rows.iter().filter(|r| r.holds).count(),
            pair_rows.len(),
            fmt_f64(body.pullback_final_diameter)
        )
    } else {
        format!(
            "not certified (contraction factor {}); bound not checked; pullback diameter {}",
            fmt_f64(cert.contraction_factor),
            fmt_f64(body.pullback_final_diameter)
        )
    };
    Ok(Outcome {
        exit_code: exit_if(ok),
        files,
        summary,
    })
}

#[derive(Serialize)]
struct CapacityBody {
    total: f64,
    bound: usize,
    within_bound: bool,
    threshold: f64,
    tau_max: usize,
    test_len: usize,
    options: CapacityOptions,
}

pub(super) fn capacity(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let res = cfg.design().build()?;
    let u = generate(&cfg.signal_spec()?)?;
    let opts = cfg.capacity.options();
    let spec = capacity_spectrum(&res, &u, cfg.capacity.tau_max, &opts)?;
    let m = meta(cfg, "capacity");
    let rows: Vec<Vec<String>> = spec
        .capacities
        .iter()
        .enumerate()
        .map(|(i, c)| vec![(i + 1).to_string(), fmt_f64(*c)])
        .collect();
    let a = write_csv(dir, "capacity.csv", &m, &["tau", "capacity"], &rows)?;
    let body = CapacityBody {
        total: spec.total,
        bound: spec.n,
        within_bound: spec.within_bound(),
        threshold: spec.threshold,
        tau_max: spec.tau_max,
        test_len: spec.test_len,
        options: opts,
    };
    let b = write_json(dir, "capacity_summary.json", &m, &body)?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        files: vec![a, b],
        summary: format!(
            "total memory capacity {} (n = {})",
            fmt_f64(spec.total),
            spec.n
        ),
    })
}

#[derive(Serialize)]
struct IpcBody {
    total_ipc: f64,
    total_by_degree: Vec<f64>,
    bound: usize,
    within_bound: bool,
    max_degree: usize,
    max_delay: usize,
    functionals: usize,
    truncated: bool,
    threshold: f64,
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

pub(super) fn ipc(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let res = cfg.design().build()?;
    let s = &cfg.ipc;
    let rep = ipc_report(
        &res,
        &cfg.signal_spec()?,
        s.max_degree,
        s.max_delay,
        &s.options(),
    )?;
    let m = meta(cfg, "ipc");
    let rows: Vec<Vec<String>> = rep
        .entries
        .iter()
        .map(|e| {
            vec![
                join(&e.functional.delays),
                join(&e.functional.degrees),
                fmt_f64(e.capacity),
            ]
        })
        .collect();
    let a = write_csv(
        dir,
        "ipc.csv",
        &m,
        &["delays", "degrees", "capacity"],
        &rows,
    )?;
    let body = IpcBody {
        total_ipc: rep.total_ipc,
        total_by_degree: rep.total_by_degree.clone(),
        bound: rep.n,
        within_bound: rep.within_bound(),
        max_degree: rep.max_degree,
        max_delay: rep.max_delay,
        functionals: rep.entries.len(),
        truncated: rep.truncated,
        threshold: rep.threshold,
    };
    let b = write_json(dir, "ipc_summary.json", &m, &body)?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        files: vec![a, b],
        summary: format!(
            "total IPC {} over {} functionals{}",
            fmt_f64(rep.total_ipc),
            rep.entries.len(),
            if rep.truncated { " (truncated)" } else { "" }
        ),
    })
}

#[derive(Serialize)]
struct LyapunovBody {
    lambda_max: f64,
    d_ky: Option<f64>,
    h_ks: f64,
    steps: usize,
    reorth_interval: usize,
    subdifferential: bool,
    certified: bool,
    /// `ln` of the contraction factor; an upper bound on every exponent.
    log_contraction_factor: f64,
}

pub(super) fn lyapunov(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let res = cfg.design().build()?;
    let cert = certify_contraction(&res)?;
    let u = generate(&cfg.signal_spec()?)?;
    let l = &cfg.lyapunov;
    let spec = lyapunov_spectrum_scalar(
        &res,
        &u,
        &LyapunovConfig {
            k: l.k,
            reorth_interval: l.reorth_interval,
            washout: l.washout,
            seed: derive_seed(cfg.seed, LYAPUNOV_STREAM),
        },
    )?;
    let m = meta(cfg, "lyapunov");
    let rows: Vec<Vec<String>> = spec
        .exponents
        .iter()
        .zip(&spec.degenerate)
        .enumerate()
        .map(|(i, (e, d))| vec![(i + 1).to_string(), fmt_f64(*e), d.to_string()])
        .collect();
    let a = write_csv(
        dir,
        "lyapunov.csv",
        &m,
        &["index", "exponent", "degenerate"],
        &rows,
    )?;
    let body = LyapunovBody {
        lambda_max: spec.max_exponent(),
        d_ky: kaplan_yorke(&spec),
        h_ks: ks_entropy(&spec),
        steps: spec.steps,
        reorth_interval: spec.reorth_interval,
        subdifferential: spec.subdifferential,
        certified: cert.passes,
        log_contraction_factor: cert.contraction_factor.ln(),
    };
    let b = write_json(dir, "lyapunov_summary.json", &m, &body)?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        files: vec![a, b],
        summary: format!(
            "largest exponent {}, Kaplan-Yorke dimension {}",
            fmt_f64(body.lambda_max),
            body.d_ky.map_or("undefined".into(), fmt_f64)
        ),
    })
}

fn task_name(t: ApproxTask) -> &'static str {
    match t {
        ApproxTask::Narma => "narma",
        ApproxTask::Delay => "delay",
        ApproxTask::Product => "product",
    }
}

/// One held-out fit of the approximation study.
#[derive(Debug, Clone, PartialEq)]
struct ApproxRow {
    task: ApproxTask,
    n: usize,
    replicate: usize,
    nmse: Option<f64>,
}

fn padded(len: usize, a: Aligned) -> Vec<f64> {
    let mut t = vec![0.0; len];
    t[a.offset..].copy_from_slice(&a.values);
    t
}

fn approx_one(
    cfg: &ExperimentConfig,
    task: ApproxTask,
    n: usize,
    replicate: usize,
) -> Result<Option<f64>> {
    let a = &cfg.approx;
    let stream = derive_seed(cfg.seed, APPROX_STREAM);
    let mut section = cfg.reservoir;
    section.n = n;
    let res = section
        .design(derive_seed(stream, replicate as u64))
        .build()?;
    let input_seed = derive_seed(stream, 1_000_000 + replicate as u64);
    let opts = CapacityOptions {
        washout: a.washout,
        ..CapacityOptions::default()
    };
    let (input, target, max_delay) = match task {
        ApproxTask::Narma => {
            let s = narma_series(a.length, a.narma_order, input_seed, NARMA_ATTEMPTS)?;
            (s.input, s.target, 0)
        }
        ApproxTask::Delay => {
            let u = generate(&SignalSpec::uniform(-1.0, 1.0, a.length, input_seed))?;
            let t = padded(u.len(), delayed_target(&u, a.delay)?);
            (u, t, a.delay)
        }
        ApproxTask::Product => {
            let u = generate(&SignalSpec::uniform(-1.0, 1.0, a.length, input_seed))?;
            let aligned = product_target(&u, &a.product_delays)?;
            let max = aligned.offset;
            (u, padded(a.length, aligned), max)
        }
    };
    let est = CapacityEstimator::new(&res, &input, max_delay, &opts)?;
    let start = est.start();
    est.heldout_nmse(&target[start..start + est.usable_len()])
}

#[derive(Serialize)]
struct ApproxCurve {
    task: &'static str,
    sizes: Vec<usize>,
    median_nmse: Vec<Option<f64>>,
    nonincreasing: bool,
}

#[derive(Serialize)]
struct ApproxBody {
    curves: Vec<ApproxCurve>,
    seeds: usize,
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    Some(if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    })
}

pub(super) fn approx(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let a = &cfg.approx;
    if a.sizes.is_empty() || a.tasks.is_empty() || a.seeds == 0 {
        return Err(Error::Config("approx needs sizes, tasks and seeds".into()));
    }
    if a.tasks.contains(&ApproxTask::Product) && a.product_delays.is_empty() {
        return Err(Error::Config(
            "approx product task needs product_delays".into(),
        ));
    }
    let jobs: Vec<(ApproxTask, usize, usize)> = a
        .tasks
        .iter()
        .flat_map(|t| {
            a.sizes
                .iter()
                .flat_map(move |n| (0..a.seeds).map(move |j| (*t, *n, j)))
        })
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(task, n, replicate)| {
            Ok(ApproxRow {
                task,
                n,
                replicate,
                nmse: approx_one(cfg, task, n, replicate)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let m = meta(cfg, "approx");
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                task_name(r.task).to_owned(),
                r.n.to_string(),
                r.replicate.to_string(),
                fmt_opt(r.nmse),
            ]
        })
        .collect();
    let f1 = write_csv(
        dir,
        "approx.csv",
        &m,
        &["task", "n", "seed", "nmse"],
        &csv_rows,
    )?;

    let curves: Vec<ApproxCurve> = a
        .tasks
        .iter()
        .map(|&task| {
            let median_nmse: Vec<Option<f64>> = a
                .sizes
                .iter()
                .map(|&n| {
                    let mut v: Vec<f64> = rows
                        .iter()
                        .filter(|r| r.task == task && r.n == n)
                        .filter_map(|r| r.nmse)
                        .collect();
                    median(&mut v)
                })
                .collect();
            let nonincreasing = median_nmse
                .windows(2)
                .all(|w| matches!((w[0], w[1]), (Some(x), Some(y)) if y <= x));
            ApproxCurve {
                task: task_name(task),
                sizes: a.sizes.clone(),
                median_nmse,
                nonincreasing,
            }
        })
        .collect();
    let summary = curves
        .iter()
        .map(|c| {
            format!(
                "{}: [{}]",
                c.task,
                c.median_nmse
                    .iter()
                    .map(|v| fmt_opt(*v))
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    let f2 = write_json(
        dir,
        "approx_summary.json",
        &m,
        &ApproxBody {
            curves,
            seeds: a.seeds,
        },
    )?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        files: vec![f1, f2],
        summary: format!("median held-out NMSE by size, {summary}"),
    })
}
