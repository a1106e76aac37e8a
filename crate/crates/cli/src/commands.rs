use std::io::Write;
use std::path::PathBuf;

use bicm_core::{
    build_curve, classify_labeling, loss_db, mc_rate, rate_at, CurveSource, Error as CoreError,
    LValueKind, RateKind, Snr,
};
use log::{info, warn};
use rayon::prelude::*;

use crate::config::{parse_grid, parse_kinds, parse_targets, LossArgs, RatesArgs, SetupArgs};
use crate::error::{CliError, CliResult};
use crate::svg::{line_plot, Series};

/// Rows with a Monte Carlo disagreement beyond this many standard errors
/// fail the run; beyond 3 they only warn.
const MC_FAIL_Z: f64 = 5.0;

fn output(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn fmt_s(s: &[f64]) -> String {
    s.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

struct Job {
    snr_db: f64,
    kind: RateKind,
    label: String,
    source: CurveSource,
}

pub fn rates(args: &RatesArgs) -> CliResult<()> {
    let setup = args.setup.resolve()?;
    let kinds = parse_kinds(&args.kinds)?;
    let grid = parse_grid(&args.snr)?;
    let cfg = args.quad.config()?;
    let c = &setup.constellation;

    let mut jobs = Vec::new();
    for &snr_db in &grid {
        for &kind in &kinds {
            if kind.is_bit_level() {
                for (j, p) in setup.labeling.rows().iter().enumerate() {
                    jobs.push(Job {
                        snr_db,
                        kind,
                        label: (j + 1).to_string(),
                        source: CurveSource::Pattern(p.clone()),
                    });
                }
            } else {
                jobs.push(Job {
                    snr_db,
                    kind,
                    label: setup.labeling_name.clone(),
                    source: CurveSource::Labeling(setup.labeling.clone()),
                });
            }
        }
    }
    info!("evaluating {} rates", jobs.len());
    let values = jobs
        .par_iter()
        .map(|job| rate_at(c, &job.source, job.kind, Snr::from_db(job.snr_db)?, &cfg))
        .collect::<Result<Vec<_>, _>>()?;

    let mut w = csv::Writer::from_writer(output(&args.out)?);
    w.write_record(["snr_db", "kind", "bit_or_label", "value", "s_star"])?;
    for (job, v) in jobs.iter().zip(&values) {
        w.write_record([
            job.snr_db.to_string(),
            job.kind.name(),
            job.label.clone(),
            v.value.to_string(),
            fmt_s(&v.s_star),
        ])?;
    }
    w.flush()?;

    if let Some(samples) = args.mc_check {
        let mut worst: f64 = 0.0;
        let mut failed = 0;
        for (job, v) in jobs.iter().zip(&values) {
            let est = mc_rate(
                c,
                &job.source,
                Snr::from_db(job.snr_db)?,
                job.kind,
                &v.s_star,
                samples,
                args.seed,
            )?;
            let z = est.z_score(v.value);
            worst = worst.max(z);
            if z > 3.0 {
                warn!(
                    "{} {} at {} dB: quadrature {} vs Monte Carlo {} +- {} (z = {z:.2})",
                    job.kind, job.label, job.snr_db, v.value, est.mean, est.std_error
                );
            }
            if z > MC_FAIL_Z {
                failed += 1;
            }
        }
        eprintln!(
            "mc-check: {} rows, {samples} samples each, max z = {worst:.2}",
            jobs.len()
        );
        if failed > 0 {
            return Err(CliError::Numerical(format!(
                "{failed} rows disagree with Monte Carlo by more than {MC_FAIL_Z} standard errors"
            )));
        }
    }
    Ok(())
}

pub fn loss(args: &LossArgs) -> CliResult<()> {
    let setup = args.setup.resolve()?;
    let degraded = match parse_kinds(&args.kinds)?.as_slice() {
        [k] => *k,
        _ => {
            return Err(CliError::Config(
                "loss takes exactly one degraded kind".into(),
            ))
        }
    };
    let reference = match &args.reference {
        Some(name) => name.parse()?,
        None if degraded.is_bit_level() => RateKind::BitMi(LValueKind::Exact),
        None => RateKind::BicmMi(LValueKind::Exact),
    };
    if reference.is_bit_level() != degraded.is_bit_level() {
        return Err(CliError::Config(format!(
            "{reference} and {degraded} have different rate ranges and cannot be compared"
        )));
    }
    let targets = parse_targets(&args.targets)?;
    let grid = parse_grid(&args.snr)?;
    let cfg = args.quad.config()?;
    let source = if degraded.is_bit_level() {
        let rows = setup.labeling.rows();
        if args.row == 0 || args.row > rows.len() {
            return Err(CliError::Config(format!(
                "--row must be in 1..={}",
                rows.len()
            )));
        }
        CurveSource::Pattern(rows[args.row - 1].clone())
    } else {
        CurveSource::Labeling(setup.labeling.clone())
    };
    let c = &setup.constellation;
    let ref_curve = build_curve(c, &source, reference, &grid, &cfg)?;
    let deg_curve = if degraded == reference {
        ref_curve.clone()
    } else {
        build_curve(c, &source, degraded, &grid, &cfg)?
    };

    let mut losses = Vec::with_capacity(targets.len());
    for &r in &targets {
        match loss_db(&ref_curve, &deg_curve, r) {
            Ok(l) => losses.push(l),
            Err(CoreError::TargetOutOfRange { lo, hi, .. }) => {
                warn!("target rate {r} is outside the curve range ({lo}, {hi}); writing NaN");
                losses.push(f64::NAN);
            }
            Err(e) => return Err(e.into()),
        }
    }

    let mut w = csv::Writer::from_writer(output(&args.out)?);
    w.write_record(["target_rate", "loss_db"])?;
    for (r, l) in targets.iter().zip(&losses) {
        w.write_record([r.to_string(), l.to_string()])?;
    }
    w.flush()?;

    let svg_path = args
        .svg
        .clone()
        .or_else(|| args.out.as_ref().map(|p| p.with_extension("svg")));
    if let Some(path) = svg_path {
        let title = format!(
            "{}-PAM {}: {degraded} vs {reference}",
            c.size(),
            setup.labeling_name
        );
        let series = Series {
            name: degraded.name(),
            points: targets
                .iter()
                .copied()
                .zip(losses.iter().copied())
                .collect(),
        };
        let svg = line_plot(&title, "rate [bit/channel use]", "loss [dB]", &[series]);
        std::fs::write(&path, svg)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        info!("plot written to {}", path.display());
    }
    Ok(())
}

pub fn classify(args: &SetupArgs) -> CliResult<()> {
    let setup = args.resolve()?;
    let c = &setup.constellation;
    let report = classify_labeling(c, &setup.labeling)?;
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{}-PAM ({}), labeling {}",
        c.size(),
        if c.is_symmetric() {
            "symmetric"
        } else {
            "asymmetric"
        },
        setup.labeling_name
    )?;
    for (j, (p, v)) in setup.labeling.rows().iter().zip(&report.rows).enumerate() {
        writeln!(out, "row {} {p}: {v}", j + 1)?;
    }
    let lossy = report.lossy_rows();
    if lossy.is_empty() {
        writeln!(out, "all bit positions lossless")?;
    } else {
        let rows: Vec<String> = lossy.iter().map(usize::to_string).collect();
        let classes: Vec<&str> = lossy
            .iter()
            .map(|&r| report.rows[r - 1].class.label())
            .collect();
        let noun = if lossy.len() == 1 { "row" } else { "rows" };
        writeln!(
            out,
            "{noun} {} lossy ({})",
            rows.join(","),
            classes.join(", ")
        )?;
    }
    Ok(())
}
