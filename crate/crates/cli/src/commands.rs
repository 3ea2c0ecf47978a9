use std::fmt::Write as _;
use std::path::Path;

use optpop_core::experiments::{
    learning_curve, run_trajectories, select, stationary_distribution, write_curve_csv, write_endpoints_csv,
    write_histogram_csv, ModelRecord, PopulationConfig, SelectionCriterion, StationaryRunConfig,
};
use optpop_core::gradcheck::{check_mlp, check_surface, GradCheckReport, DEFAULT_H};
use optpop_core::landscapes::{refine_registry, registry_to_json, LandscapeCatalog, RefineOptions};
use optpop_core::optimizers::{default_rho, OptimizerConfig, Trajectory};
use optpop_core::seeding::{derive_seed, stream};
use optpop_core::stats::{mann_whitney_u, summarize, t_test};
use optpop_core::toytask::{make_dataset, MetricKind, Mlp};
use optpop_core::Task;

use crate::config::{ExperimentConfig, Target};
use crate::report::{CellFormat, ReportTable};
use crate::{write_file, CliError, Context, Outcome};

/// Stream index used to subsample exported endpoints.
const EXPORT_STREAM: u64 = 0xE5;
const MLP_CHECK_POINTS: usize = 20;
const MLP_CHECK_BATCH: usize = 32;

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn csv_file(dir: &Path, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> optpop_core::Result<()>) -> Result<(), CliError> {
    let mut buf = Vec::new();
    fill(&mut buf).map_err(CliError::from_core)?;
    write_file(&dir.join(name), &buf)
}

fn core<T>(r: optpop_core::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::from_core)
}

pub fn stationary(ctx: &Context, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let landscape = cfg.build_landscape(&ctx.catalog)?;
    if landscape.dim() != 2 {
        return Err(CliError::Config("stationary runs need a 2-D landscape".into()));
    }
    let opts = cfg.resolve_optimizers(default_rho(landscape.domain().diagonal()), 1)?;
    if cfg.restarts == 0 {
        return Err(CliError::Config("restarts must be at least 1".into()));
    }
    if !(cfg.radius > 0.0) {
        return Err(CliError::Config("radius must be positive".into()));
    }
    let name = landscape.name().to_string();
    let columns: Vec<String> = landscape.basin_labels().iter().map(|l| l.to_string()).collect();
    let title = cfg
        .title
        .clone()
        .unwrap_or_else(|| format!("Stationary distribution (%) on {name}"));
    let mut table = ReportTable::new(title, columns, CellFormat::Percent);
    let dir = &cfg.out_dir;
    for (label, oc) in &opts {
        let run = StationaryRunConfig {
            optimizer: oc.clone(),
            restarts: cfg.restarts,
            radius: cfg.radius,
            master_seed: cfg.seed,
        };
        let hist = core(stationary_distribution(&landscape, &run, &ctx.registry))?;
        table.push(label.clone(), core(hist.percentages())?.into_iter().map(|(_, p)| p).collect());
        if hist.diverged > 0 {
            eprintln!("note: {label}: {} of {} trajectories diverged (counted under Else)", hist.diverged, hist.total);
        }
        let k = cfg.export_k.min(hist.total);
        let sample = core(hist.export_endpoints(k, &mut stream(derive_seed(cfg.seed, EXPORT_STREAM))))?;
        let stem = format!("{}_{}", slug(&name), slug(label));
        csv_file(dir, &format!("endpoints_{stem}.csv"), |w| write_endpoints_csv(w, &sample, label))?;
        csv_file(dir, &format!("histogram_{stem}.csv"), |w| write_histogram_csv(w, &hist))?;
    }
    table.write(dir, &format!("stationary_{}", slug(&name)), cfg.format)?;
    Ok(Outcome {
        tables: vec![table],
        failed: false,
    })
}

fn task_of(target: &Target) -> &dyn Task {
    match target {
        Target::Landscape(l) => l,
        Target::Toy(t) => t,
    }
}

fn metric_name(target: &Target) -> &'static str {
    match target {
        Target::Landscape(_) => "negative loss",
        Target::Toy(t) => match t.metric {
            MetricKind::Accuracy => "test accuracy",
            MetricKind::MacroF1 => "test macro-F1",
        },
    }
}

fn trajectories_for(
    ctx: &Context,
    cfg: &ExperimentConfig,
    target: &Target,
    oc: &OptimizerConfig,
    trajectories: usize,
    record_every: usize,
) -> Result<Vec<Trajectory>, CliError> {
    if record_every == 0 {
        return Err(CliError::Config("record_every must be at least 1".into()));
    }
    let pop = PopulationConfig {
        trajectories,
        per_trajectory: cfg.per_trajectory.max(1),
        criterion: SelectionCriterion::LowestLoss,
        record_every,
    };
    let trajs = core(run_trajectories(task_of(target), oc, &pop, cfg.seed, &ctx.registry))?;
    for (i, t) in trajs.iter().enumerate() {
        if t.diverged {
            eprintln!("note: trajectory {i} diverged after {} gradient evaluations", t.total_grad_evals);
        }
    }
    Ok(trajs)
}

fn metrics(records: &[ModelRecord]) -> Vec<f64> {
    records.iter().filter_map(|r| r.metric).collect()
}

fn losses(records: &[ModelRecord]) -> Vec<f64> {
    records.iter().map(|r| r.loss).collect()
}

fn check_population_size(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if cfg.trajectories == 0 || cfg.per_trajectory == 0 {
        return Err(CliError::Config("trajectories and per_trajectory must be at least 1".into()));
    }
    Ok(())
}

pub fn population(ctx: &Context, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let target = cfg.build_target(&ctx.catalog)?;
    let opts = cfg.resolve_optimizers(target.default_rho(), 1)?;
    check_population_size(cfg)?;
    let record_every = cfg.record_every.unwrap_or(20);
    let metric = metric_name(&target);
    let title = cfg.title.clone().unwrap_or_else(|| target.name());
    let p_cols = vec!["MWU".to_string(), "t-test".to_string()];
    let mut metric_table = ReportTable::new(
        format!("{title}: SetA vs SetB on {metric} (p-values)"),
        p_cols.clone(),
        CellFormat::PValue,
    );
    let mut loss_table =
        ReportTable::new(format!("{title}: SetA vs SetB on training loss (p-values)"), p_cols, CellFormat::PValue);
    let mut summary = ReportTable::new(
        format!("{title}: {metric} (median, std)"),
        ["SetA median", "SetA std", "SetB median", "SetB std"].map(String::from).to_vec(),
        CellFormat::Number,
    );
    for (label, oc) in &opts {
        let trajs = trajectories_for(ctx, cfg, &target, oc, cfg.trajectories, record_every)?;
        let set_a = core(select(&trajs, cfg.per_trajectory, SelectionCriterion::LowestLoss))?;
        let set_b = core(select(&trajs, cfg.per_trajectory, SelectionCriterion::HighestMetric))?;
        let (ma, mb) = (metrics(&set_a), metrics(&set_b));
        let (la, lb) = (losses(&set_a), losses(&set_b));
        metric_table.push(
            label.clone(),
            vec![
                core(mann_whitney_u(&ma, &mb, cfg.mwu_mode))?.p_value,
                core(t_test(&ma, &mb, cfg.equal_variance))?.p_value,
            ],
        );
        loss_table.push(
            label.clone(),
            vec![
                core(mann_whitney_u(&la, &lb, cfg.mwu_mode))?.p_value,
                core(t_test(&la, &lb, cfg.equal_variance))?.p_value,
            ],
        );
        let (sa, sb) = (core(summarize(&ma))?, core(summarize(&mb))?);
        summary.push(label.clone(), vec![sa.median, sa.std, sb.median, sb.std]);

        let mut body = String::from("set,trajectory,grad_evals,loss,metric\n");
        for (set, records) in [("A", &set_a), ("B", &set_b)] {
            for r in records.iter() {
                let m = r.metric.map(|m| m.to_string()).unwrap_or_default();
                let _ = writeln!(body, "{set},{},{},{},{m}", r.trajectory, r.grad_evals, r.loss);
            }
        }
        write_file(&cfg.out_dir.join(format!("population_{}.csv", slug(label))), body.as_bytes())?;
    }
    metric_table.write(&cfg.out_dir, "population_metric_p", cfg.format)?;
    loss_table.write(&cfg.out_dir, "population_loss_p", cfg.format)?;
    summary.write(&cfg.out_dir, "population_summary", cfg.format)?;
    Ok(Outcome {
        tables: vec![metric_table, loss_table, summary],
        failed: false,
    })
}

pub fn compare(ctx: &Context, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let target = cfg.build_target(&ctx.catalog)?;
    let opts = cfg.resolve_optimizers(target.default_rho(), 2)?;
    check_population_size(cfg)?;
    let record_every = cfg.record_every.unwrap_or(20);
    let labels: Vec<&str> = opts.iter().map(|(l, _)| l.as_str()).collect();
    let pairs: Vec<(String, String)> = if cfg.pairs.is_empty() {
        let mut all = Vec::new();
        for i in 0..labels.len() {
            for j in i + 1..labels.len() {
                all.push((labels[i].to_string(), labels[j].to_string()));
            }
        }
        all
    } else {
        for (a, b) in &cfg.pairs {
            for l in [a, b] {
                if !labels.contains(&l.as_str()) {
                    return Err(CliError::Config(format!("pair names unknown optimizer `{l}`")));
                }
            }
            if a == b {
                return Err(CliError::Config(format!("pair compares `{a}` with itself")));
            }
        }
        cfg.pairs.clone()
    };
    let mut set_a = Vec::with_capacity(opts.len());
    for (_, oc) in &opts {
        let trajs = trajectories_for(ctx, cfg, &target, oc, cfg.trajectories, record_every)?;
        set_a.push(metrics(&core(select(&trajs, cfg.per_trajectory, SelectionCriterion::LowestLoss))?));
    }
    let pop = |l: &str| &set_a[labels.iter().position(|x| *x == l).expect("validated")];
    let metric = metric_name(&target);
    let title = cfg.title.clone().unwrap_or_else(|| target.name());
    let columns: Vec<String> = pairs.iter().map(|(a, b)| format!("{a} vs {b}")).collect();
    let mut table = ReportTable::new(format!("{title}: SetA {metric} (p-values)"), columns, CellFormat::PValue);
    let mut mwu = Vec::new();
    let mut tt = Vec::new();
    for (a, b) in &pairs {
        mwu.push(core(mann_whitney_u(pop(a), pop(b), cfg.mwu_mode))?.p_value);
        tt.push(core(t_test(pop(a), pop(b), cfg.equal_variance))?.p_value);
    }
    table.push("MWU", mwu);
    table.push("t-test", tt);
    table.write(&cfg.out_dir, "compare", cfg.format)?;
    Ok(Outcome {
        tables: vec![table],
        failed: false,
    })
}

pub fn curves(ctx: &Context, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let target = cfg.build_target(&ctx.catalog)?;
    let opts = cfg.resolve_optimizers(target.default_rho(), 1)?;
    if cfg.window == 0 {
        return Err(CliError::Config("window must be at least 1".into()));
    }
    let record_every = cfg.record_every.unwrap_or(1);
    let title = cfg.title.clone().unwrap_or_else(|| target.name());
    let mut table = ReportTable::with_formats(
        format!("{title}: learning curves (window {})", cfg.window),
        ["updates", "grad evals", "points", "final smoothed loss"].map(String::from).to_vec(),
        vec![CellFormat::Count, CellFormat::Count, CellFormat::Count, CellFormat::Number],
    );
    for (label, oc) in &opts {
        let t = trajectories_for(ctx, cfg, &target, oc, 1, record_every)?.remove(0);
        let curve = core(learning_curve(&t, cfg.window))?;
        let last = curve.last().map_or(f64::NAN, |p| p.smoothed_loss);
        table.push(
            label.clone(),
            vec![t.updates as f64, t.total_grad_evals as f64, curve.len() as f64, last],
        );
        csv_file(&cfg.out_dir, &format!("curve_{}.csv", slug(label)), |w| write_curve_csv(w, &curve))?;
    }
    table.write(&cfg.out_dir, "curves", cfg.format)?;
    Ok(Outcome {
        tables: vec![table],
        failed: false,
    })
}

pub fn gradcheck(ctx: &Context, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    gradcheck_with(&ctx.catalog, cfg)
}

/// Gradient checks over every landscape in `catalog` plus the MLP.
pub fn gradcheck_with(catalog: &LandscapeCatalog, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    if cfg.gradcheck_points == 0 {
        return Err(CliError::Config("gradcheck_points must be at least 1".into()));
    }
    let mut reports: Vec<GradCheckReport> = Vec::new();
    for (i, name) in catalog.names().into_iter().enumerate() {
        let l = core(catalog.build(name))?;
        reports.push(check_surface(
            l.surface(),
            l.domain(),
            cfg.gradcheck_points,
            derive_seed(cfg.seed, i as u64),
            DEFAULT_H,
        ));
    }
    let spec = cfg.task.as_ref().map(|t| t.dataset.clone()).unwrap_or_default();
    let ds = make_dataset(&spec).map_err(|e| CliError::Config(format!("task.dataset: {e}")))?;
    let model = core(Mlp::new(vec![2, 8, 8, ds.classes]))?;
    let batch: Vec<_> = ds.train.iter().take(MLP_CHECK_BATCH).cloned().collect();
    reports.push(check_mlp(&model, &batch, MLP_CHECK_POINTS, derive_seed(cfg.seed, u64::MAX), DEFAULT_H));

    let mut table = ReportTable::with_formats(
        "Gradient check (max relative error)",
        ["points", "failures", "max error", "tolerance"].map(String::from).to_vec(),
        vec![CellFormat::Count, CellFormat::Count, CellFormat::Number, CellFormat::Number],
    );
    let mut failed = false;
    for r in &reports {
        table.push(
            r.subject.clone(),
            vec![r.checks as f64, r.failures.len() as f64, r.max_error, r.tolerance],
        );
        if let Some(worst) = r.failures.iter().max_by(|a, b| a.rel_error.total_cmp(&b.rel_error)) {
            failed = true;
            let c = worst.worst_coord;
            eprintln!(
                "FAIL {}: {} of {} points; worst at {:?}, coordinate {c}: analytic {} vs numeric {} (relative error {:e})",
                r.subject,
                r.failures.len(),
                r.checks,
                worst.point,
                worst.analytic[c],
                worst.numeric[c],
                worst.rel_error
            );
        }
    }
    // Text output shows errors in scientific notation; the table keeps raw values.
    table.write(&cfg.out_dir, "gradcheck", cfg.format)?;
    Ok(Outcome {
        tables: vec![table],
        failed,
    })
}

pub fn refine_minima(ctx: &Context, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let landscape = cfg.build_landscape(&ctx.catalog)?;
    if cfg.grid_n < 50 {
        return Err(CliError::Config("grid_n must be at least 50".into()));
    }
    let refined = core(refine_registry(&landscape, cfg.grid_n, &RefineOptions::default()))?;
    let name = landscape.name().to_string();
    let d = landscape.dim();
    let mut columns: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    columns.extend(["value", "sharpness"].map(String::from));
    let mut table = ReportTable::new(format!("Refined minima of {name}"), columns, CellFormat::Number);
    for m in &refined {
        let mut row: Vec<f64> = m.location.to_vec();
        row.push(m.value);
        row.push(m.sharpness.unwrap_or(f64::NAN));
        table.push(m.label.clone(), row);
    }
    let json = core(registry_to_json(&refined))?;
    write_file(&cfg.out_dir.join(format!("registry_{}.json", slug(&name))), (json + "\n").as_bytes())?;
    table.write(&cfg.out_dir, &format!("refined_{}", slug(&name)), cfg.format)?;
    let mut tables = vec![table];

    let published = landscape.published();
    if !published.is_empty() {
        let mut disc = ReportTable::new(
            format!("Published minima of {name} checked against the refined set"),
            ["nearest refined", "published value", "f at point", "|grad| at point"].map(String::from).to_vec(),
            CellFormat::Number,
        );
        let surface = landscape.surface();
        for p in published {
            let nearest = refined
                .iter()
                .map(|m| dist(&m.location, &p.location))
                .fold(f64::INFINITY, f64::min);
            let grad = surface.gradient(&p.location);
            let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            let f = surface.value(&p.location);
            if nearest > 1e-2 || (f - p.value).abs() > 1e-2 {
                eprintln!(
                    "discrepancy: {name} {} at {:?}: nearest refined minimum {nearest:.4} away, f = {f:.6} (listed {}), |grad| = {gnorm:.4}",
                    p.label, p.location.as_slice(), p.value
                );
            }
            disc.push(p.label.clone(), vec![nearest, p.value, f, gnorm]);
        }
        disc.write(&cfg.out_dir, &format!("published_{}", slug(&name)), cfg.format)?;
        tables.push(disc);
    }
    Ok(Outcome { tables, failed: false })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
