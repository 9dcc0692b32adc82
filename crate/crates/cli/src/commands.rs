use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use log::{info, warn};
use qgraph_core::corpus::mixed_corpus;
use qgraph_core::nodal::{nodal_statistics, NodalRow, NodalStatus};
use qgraph_core::oracle::{discretize, lowest_eigenvalues};
use qgraph_core::secular::SecularSystem;
use qgraph_core::spectral::{generic_search, spectrum, support_at, GenericOptions, SpectrumOptions};
use qgraph_core::surgery::{check_all, uniform_grid, CheckOutcome};
use qgraph_core::{Error, MetricGraph};
use rayon::prelude::*;
use serde::Serialize;

use crate::input::{parse_graph_file, Failure};
use crate::output::{emit, Format, GenericRow, NodalCsvRow, ScanRow, SpectrumRow};
use crate::{Cli, Command, FormatArgs, SpectrumArgs};

pub fn run(cli: &Cli) -> Result<ExitCode, Failure> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let code = match &cli.command {
        Command::Spectrum(args) => spectrum_cmd(cli, args, &mut out)?,
        Command::SecularScan {
            graph,
            omega_max,
            omega_min,
            steps,
            format,
        } => scan_cmd(&graph.graph, *omega_min, *omega_max, *steps, format, &mut out)?,
        Command::SearchGeneric {
            graph,
            count,
            vertex_floor,
            omega_cap,
            nullspace_threshold,
            all,
            format,
        } => {
            let g = parse_graph_file(&graph.graph)?;
            let opts = GenericOptions {
                count: *count,
                vertex_floor: *vertex_floor,
                omega_cap: *omega_cap,
                tol: cli.tol,
                nullspace_threshold: *nullspace_threshold,
            };
            let found = generic_search(&g, &opts)?;
            let chosen = if *all { &found.scanned } else { &found.hits };
            let rows: Vec<GenericRow> = chosen
                .iter()
                .map(|c| GenericRow {
                    n: c.index,
                    omega: c.omega,
                    lambda: c.lambda,
                    multiplicity: c.multiplicity,
                    generic: c.generic,
                    fully_supported: c.fully_supported,
                    min_vertex_ratio: c.min_vertex_ratio,
                    min_edge_ratio: c.min_edge_ratio,
                    limit_distance: c.limit_distance,
                })
                .collect();
            emit(&mut out, Format::from_flags(format.json), &rows, &found.warnings)?;
            ExitCode::SUCCESS
        }
        Command::NodalStats {
            graph,
            omega_max,
            nullspace_threshold,
            format,
        } => {
            let g = parse_graph_file(&graph.graph)?;
            let opts = SpectrumOptions {
                tol: cli.tol,
                nullspace_threshold: *nullspace_threshold,
                ..SpectrumOptions::up_to(*omega_max)
            };
            let s = spectrum(&g, &opts)?;
            let rows: Vec<NodalCsvRow> = nodal_statistics(&g, &s)?.iter().map(|r| nodal_row(&g, r)).collect();
            emit(&mut out, Format::from_flags(format.json), &rows, &s.warnings)?;
            ExitCode::SUCCESS
        }
        Command::CheckIdentities {
            graph,
            random_corpus,
            grid_min,
            grid_max,
            grid_points,
            json,
        } => {
            if !(*grid_min >= 0.0 && grid_max > grid_min && *grid_points > 0) {
                return Err(Failure::usage(
                    "grid needs 0 <= grid-min < grid-max and grid-points > 0",
                ));
            }
            let grid = uniform_grid(*grid_min, *grid_max, *grid_points);
            let graphs: Vec<(String, MetricGraph)> = match (graph, random_corpus) {
                (Some(path), _) => vec![(path.display().to_string(), parse_graph_file(path)?)],
                (None, Some(n)) => mixed_corpus(cli.seed, *n)
                    .into_iter()
                    .enumerate()
                    .map(|(i, g)| (format!("corpus-{i}"), g))
                    .collect(),
                (None, None) => return Err(Failure::usage("need --graph or --random-corpus")),
            };
            check_cmd(&graphs, &grid, *json, &mut out)?
        }
        Command::OracleSpectrum {
            graph,
            count,
            points_per_unit,
            all,
            format,
        } => {
            let g = parse_graph_file(&graph.graph)?;
            let found = lowest_eigenvalues(&discretize(&g, *points_per_unit)?, *count)?;
            let ceiling = g.max_potential().max(0.0);
            let hidden = ceiling + 1e-6 * ceiling.max(1.0);
            let rows: Vec<SpectrumRow> = found
                .clusters
                .iter()
                .filter(|c| *all || c.lambda > hidden)
                .enumerate()
                .map(|(i, c)| SpectrumRow {
                    n: i + 1,
                    omega: (c.lambda >= 0.0).then(|| c.lambda.sqrt()),
                    lambda: c.lambda,
                    multiplicity: c.multiplicity,
                    generic: None,
                    fully_supported: None,
                })
                .collect();
            emit(&mut out, Format::from_flags(format.json), &rows, &[])?;
            ExitCode::SUCCESS
        }
    };
    out.flush()?;
    Ok(code)
}

fn spectrum_cmd(cli: &Cli, args: &SpectrumArgs, out: &mut impl Write) -> Result<ExitCode, Failure> {
    let g = parse_graph_file(&args.graph.graph)?;
    let opts = SpectrumOptions {
        omega_min: args.omega_min,
        omega_max: args.omega_max,
        grid_step: args.grid_step,
        tol: cli.tol,
        nullspace_threshold: args.nullspace_threshold,
    };
    let s = spectrum(&g, &opts)?;
    let rows = s
        .points
        .par_iter()
        .map(|p| {
            let support = support_at(&g, p.omega, &p.representative(), args.vertex_floor)?;
            Ok(SpectrumRow {
                n: p.index,
                omega: Some(p.omega),
                lambda: p.lambda,
                multiplicity: p.multiplicity,
                generic: Some(p.multiplicity == 1 && support.generic),
                fully_supported: Some(support.fully_supported),
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    info!("{} roots below {}", rows.len(), args.omega_max);
    emit(out, Format::from_flags(args.format.json), &rows, &s.warnings)?;
    Ok(ExitCode::SUCCESS)
}

fn scan_cmd(
    path: &Path,
    omega_min: f64,
    omega_max: f64,
    steps: usize,
    format: &FormatArgs,
    out: &mut impl Write,
) -> Result<ExitCode, Failure> {
    if !(omega_min >= 0.0 && omega_max > omega_min && steps > 0) {
        return Err(Failure::usage("scan needs 0 <= omega-min < omega-max and steps > 0"));
    }
    let g = parse_graph_file(path)?;
    let sys = SecularSystem::new(&g)?;
    let rows = uniform_grid(omega_min, omega_max, steps)
        .into_par_iter()
        .map(|w| {
            Ok(ScanRow {
                omega: w,
                det: sys.det(w)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    emit(out, Format::from_flags(format.json), &rows, &[])?;
    Ok(ExitCode::SUCCESS)
}

fn nodal_row(g: &MetricGraph, r: &NodalRow) -> NodalCsvRow {
    let mut flags = vec![match r.status {
        NodalStatus::Ok => "ok",
        NodalStatus::ZeroMode => "zero-mode",
        NodalStatus::Ambiguous => "ambiguous",
    }];
    if r.status == NodalStatus::Ok && r.zero_vertices > g.dirichlet_count() {
        flags.push("vertex-zero");
    }
    if let (Some(n), Some(nu)) = (r.n, r.nu) {
        if nu > n {
            flags.push("courant");
        }
    }
    NodalCsvRow {
        n: r.n,
        omega: r.omega,
        nu: r.nu,
        ratio: r.ratio,
        flags: flags.join("|"),
    }
}

#[derive(Serialize)]
struct GraphReport<'a> {
    name: &'a str,
    passed: bool,
    error: Option<String>,
    checks: Vec<CheckOutcome>,
}

#[derive(Serialize)]
struct CorpusReport<'a> {
    passed: bool,
    graphs: Vec<GraphReport<'a>>,
}

fn check_cmd(
    graphs: &[(String, MetricGraph)],
    grid: &[f64],
    json: bool,
    out: &mut impl Write,
) -> Result<ExitCode, Failure> {
    let reports: Vec<GraphReport> = graphs
        .par_iter()
        .map(|(name, g)| match check_all(g, grid) {
            Ok(r) => GraphReport {
                name,
                passed: r.passed,
                error: None,
                checks: r.checks,
            },
            Err(e) => {
                warn!("{name}: {e}");
                GraphReport {
                    name,
                    passed: false,
                    error: Some(e.to_string()),
                    checks: Vec::new(),
                }
            }
        })
        .collect();
    let passed = reports.iter().all(|r| r.passed);
    if json {
        serde_json::to_writer_pretty(
            &mut *out,
            &CorpusReport {
                passed,
                graphs: reports,
            },
        )?;
        writeln!(out)?;
    } else {
        let mut total = 0;
        let mut failed = 0;
        for (r, (_, g)) in reports.iter().zip(graphs) {
            let verdict = if r.passed { "PASS" } else { "FAIL" };
            writeln!(
                out,
                "{verdict} {} ({} vertices, {} edges, {} checks)",
                r.name,
                g.vertices().len(),
                g.edges().len(),
                r.checks.len()
            )?;
            if let Some(e) = &r.error {
                writeln!(out, "  error: {e}")?;
                failed += 1;
            }
            for c in r.checks.iter().filter(|c| !c.passed) {
                let at = c.target.as_deref().unwrap_or("-");
                writeln!(
                    out,
                    "  FAIL {} at {at}: {} (limit {:e}); {}",
                    c.check, c.value, c.limit, c.detail
                )?;
            }
            total += r.checks.len();
            failed += r.checks.iter().filter(|c| !c.passed).count();
        }
        writeln!(out, "{} graphs, {total} checks, {failed} failed", graphs.len())?;
    }
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
