//! Sweep planning, parallel dispatch and ordered artifact writing.

use crate::config::{ConfigError, Engine, ModelParams, Parameter, RunConfig};
use crate::engines::{check, evaluate, primary_column, Measurement};
use crate::svg;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("sweep point {index}: {source}")]
    Engine { index: usize, source: spinmi_core::Error },
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl RunError {
    /// Validation failures exit with 2, everything else with 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Svg,
    Both,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub format: Format,
    pub jobs: usize,
}

/// One sweep point, row-major over the axes (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub index: usize,
    pub coordinates: Vec<(Parameter, f64)>,
    pub params: ModelParams,
    pub seed: u64,
}

/// Per-point seed: stream `index` of the run seed.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng.next_u64()
}

/// Expands the axes and validates every point before anything runs.
pub fn plan(config: &RunConfig) -> Result<Vec<Point>, ConfigError> {
    config.validate()?;
    let grids: Vec<Vec<f64>> = config.axes.iter().map(|a| a.values()).collect();
    let total: usize = grids.iter().map(Vec::len).product();
    let observable = config.observable();
    let mut points = Vec::with_capacity(total);
    for index in 0..total {
        let mut coordinates = vec![(Parameter::Coupling, 0.0); grids.len()];
        let mut rest = index;
        for (slot, grid) in grids.iter().enumerate().rev() {
            coordinates[slot] = (config.axes[slot].parameter, grid[rest % grid.len()]);
            rest /= grid.len();
        }
        let mut params = config.model.clone();
        for &(parameter, value) in &coordinates {
            params.set(parameter, value);
        }
        check(config.engine, observable, &params)
            .map_err(|e| ConfigError::Invalid(format!("sweep point {index}: {e}")))?;
        points.push(Point { index, coordinates, params, seed: point_seed(config.seed, index) });
    }
    Ok(points)
}

/// Evaluates every point on a pool of `jobs` workers. Workers send
/// `(index, result)` over a channel; the single consumer hands results to
/// `sink` in index order.
pub fn execute(
    config: &RunConfig,
    points: &[Point],
    jobs: usize,
    mut sink: impl FnMut(&Point, &Measurement) -> Result<(), RunError>,
) -> Result<Vec<Measurement>, RunError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool construction");
    let (sender, receiver) = mpsc::channel::<(usize, spinmi_core::Result<Measurement>)>();
    let observable = config.observable();
    std::thread::scope(|scope| {
        scope.spawn(move || {
            pool.install(|| {
                use rayon::prelude::*;
                points.par_iter().for_each_with(sender, |tx, p| {
                    let result = evaluate(config.engine, observable, &p.params, &config.schedule, p.seed);
                    // The consumer only stops listening after an error.
                    let _ = tx.send((p.index, result));
                });
            });
        });
        let mut pending = BTreeMap::new();
        let mut next = 0;
        let mut out = Vec::with_capacity(points.len());
        for (index, result) in receiver.iter() {
            pending.insert(index, result);
            while let Some(result) = pending.remove(&next) {
                let m = result.map_err(|source| RunError::Engine { index: next, source })?;
                sink(&points[next], &m)?;
                out.push(m);
                next += 1;
            }
        }
        Ok(out)
    })
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_owned(), source }
}

/// Runs a configuration and writes its artifacts; returns the written paths.
pub fn run(config: &RunConfig, options: &RunOptions) -> Result<Vec<PathBuf>, RunError> {
    let points = plan(config)?;
    std::fs::create_dir_all(&options.out_dir).map_err(io_error(&options.out_dir))?;
    let stem = config.stem();
    let csv_path = options.out_dir.join(format!("{stem}.csv"));
    let want_csv = options.format != Format::Svg;
    let mut writer = if want_csv { Some(csv::Writer::from_path(&csv_path)?) } else { None };
    let mut header_written = false;
    let measurements = execute(config, &points, options.jobs, |point, m| {
        if let Some(w) = writer.as_mut() {
            if !header_written {
                w.write_record(header(point, m))?;
                header_written = true;
            }
            w.write_record(record(config.engine, point, m))?;
        }
        Ok(())
    })?;
    let mut written = Vec::new();
    if let Some(mut w) = writer {
        w.flush().map_err(io_error(&csv_path))?;
        written.push(csv_path);
    }
    if want_csv && config.output.spectrum {
        let path = options.out_dir.join(format!("{stem}_spectrum.csv"));
        write_spectrum(&path, &points, &measurements)?;
        written.push(path);
    }
    if want_csv && config.output.phase_boundary {
        let path = options.out_dir.join(format!("{stem}_boundary.csv"));
        write_boundary(&path, &points, &measurements)?;
        written.push(path);
    }
    if options.format != Format::Csv {
        let column = config.output.plot.clone().unwrap_or_else(|| primary_column(config.observable()).to_owned());
        let path = options.out_dir.join(format!("{stem}.svg"));
        let document = plot(config, &points, &measurements, &column)?;
        std::fs::write(&path, document).map_err(io_error(&path))?;
        written.push(path);
    }
    Ok(written)
}

pub fn header(point: &Point, m: &Measurement) -> Vec<String> {
    let mut h = vec!["index".to_owned(), "engine".to_owned(), "seed".to_owned()];
    h.extend(point.coordinates.iter().map(|(p, _)| p.name().to_owned()));
    h.extend(m.values.iter().map(|(n, _)| (*n).to_owned()));
    h.push("std_error".to_owned());
    h
}

pub fn record(engine: Engine, point: &Point, m: &Measurement) -> Vec<String> {
    let mut r = vec![point.index.to_string(), engine.name().to_owned(), point.seed.to_string()];
    r.extend(point.coordinates.iter().map(|(_, v)| v.to_string()));
    r.extend(m.values.iter().map(|(_, v)| v.to_string()));
    r.push(m.std_error.to_string());
    r
}

fn write_spectrum(path: &Path, points: &[Point], measurements: &[Measurement]) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "s1", "rank", "eigenvalue", "multiplicity"])?;
    for (p, m) in points.iter().zip(measurements) {
        for row in &m.spectrum {
            w.write_record([
                p.index.to_string(),
                row.s1.to_string(),
                row.rank.to_string(),
                row.eigenvalue.to_string(),
                row.multiplicity.to_string(),
            ])?;
        }
    }
    w.flush().map_err(io_error(path))
}

fn write_boundary(path: &Path, points: &[Point], measurements: &[Measurement]) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path)?;
    let parameter = points[0].coordinates[0].0;
    w.write_record([parameter.name(), "t_c", "jump", "order"])?;
    let mut seen = Vec::new();
    for (p, m) in points.iter().zip(measurements) {
        let x = p.coordinates[0].1;
        if seen.contains(&x.to_bits()) {
            continue;
        }
        seen.push(x.to_bits());
        let b = m.boundary.expect("mean-field rows carry a boundary point");
        let order = match b.order {
            Some(o) => format!("{o:?}"),
            None => "none".to_owned(),
        };
        w.write_record([x.to_string(), b.temperature.unwrap_or(f64::NAN).to_string(), b.jump.to_string(), order])?;
    }
    w.flush().map_err(io_error(path))
}

fn plot(config: &RunConfig, points: &[Point], measurements: &[Measurement], column: &str) -> Result<String, RunError> {
    let values: Vec<f64> = measurements
        .iter()
        .map(|m| m.get(column))
        .collect::<Option<_>>()
        .ok_or_else(|| RunError::Config(ConfigError::Invalid(format!("no column {column} to plot"))))?;
    let title = format!("{} {column}", config.engine.name());
    Ok(if config.axes.len() == 1 {
        let xs: Vec<f64> = points.iter().map(|p| p.coordinates[0].1).collect();
        let errors: Vec<f64> = measurements.iter().map(|m| m.std_error).collect();
        svg::line_plot(&title, config.axes[0].parameter.name(), column, &xs, &values, &errors)
    } else {
        let xs = config.axes[0].values();
        let ys = config.axes[1].values();
        svg::heat_map(&title, config.axes[0].parameter.name(), config.axes[1].parameter.name(), &xs, &ys, &values)
    })
}

/// Writes a CSV of the given rows to any writer; used by tests and the
/// `verify` report.
pub fn write_rows(
    out: impl Write,
    engine: Engine,
    points: &[Point],
    measurements: &[Measurement],
) -> Result<(), RunError> {
    let mut w = csv::Writer::from_writer(out);
    if let (Some(p), Some(m)) = (points.first(), measurements.first()) {
        w.write_record(header(p, m))?;
    }
    for (p, m) in points.iter().zip(measurements) {
        w.write_record(record(engine, p, m))?;
    }
    w.flush().map_err(|source| RunError::Io { path: PathBuf::from("<stream>"), source })
}
