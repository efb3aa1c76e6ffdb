use std::fs;

use serde::Serialize;
use serde_json::json;
use sparsecity::baselines::{BaselineKind, BaselineMatrix};
use sparsecity::embedding::{
    classification_experiment, distortion_report, gaussian_points, make_projector, SrcSolver, SyntheticClassSet,
};
use sparsecity::manifest::ExperimentManifest;
use sparsecity::recovery::{
    phase_transition, solve, BasisPursuitSettings, Ensemble, IhtSettings, RecoveryProblem, SolverConfig,
};
use sparsecity::report::{dense_to_csv, json_with_manifest, rows_to_csv};
use sparsecity::rip::{
    delta_exact_with_budget, delta_monte_carlo, expectation_scan, tail_estimate, EstimatorConfig, GridPoint,
};
use sparsecity::rng::{derive_seed, sample_subset, sign, stream};
use sparsecity::{DistName, LinearOperator, SparseCityMatrix, ThetaDistribution};

use crate::{
    BaselineArgs, CliError, Dist, EmbedArgs, EmbedMode, Format, GenArgs, Kind, MatrixArgs, OutArgs, PhaseArgs,
    RecoverArgs, RipArgs, RipMode, Solver, SolverArgs, SrcSolverName,
};

fn baseline_kind(kind: Kind) -> Option<BaselineKind> {
    match kind {
        Kind::SparseCity => None,
        Kind::SubsampledFourier => Some(BaselineKind::SubsampledFourier),
        Kind::SubsampledHadamard => Some(BaselineKind::SubsampledHadamard),
        Kind::PartialToeplitz => Some(BaselineKind::PartialToeplitz),
        Kind::PartialCirculant => Some(BaselineKind::PartialCirculant),
        Kind::RandomDemodulator => Some(BaselineKind::RandomDemodulator),
    }
}

fn dist_name(d: Dist) -> DistName {
    match d {
        Dist::FourPoint => DistName::FourPoint,
        Dist::Rademacher => DistName::Rademacher,
    }
}

fn ensemble(a: &MatrixArgs) -> Ensemble {
    match baseline_kind(a.kind) {
        None => Ensemble::SparseCity {
            m: a.m,
            n: a.n,
            b: a.b,
            dist_name: dist_name(a.dist),
            normalized: !a.unnormalized,
        },
        Some(kind) => Ensemble::Baseline { kind, m: a.m, n: a.n },
    }
}

fn theta(a: &MatrixArgs) -> ThetaDistribution {
    ThetaDistribution::named(dist_name(a.dist), !a.unnormalized)
}

fn warn_regime(m: usize, n: usize, b: usize) {
    if m > n * b {
        eprintln!("warning: m = {m} exceeds n*b = {}; outside the regime m <= nb covered by the theory", n * b);
    }
}

fn matrix_manifest(command: &str, a: &MatrixArgs) -> Result<ExperimentManifest, CliError> {
    let m = ExperimentManifest::new(command)
        .param("ensemble", ensemble(a))?
        .param("seed", a.seed)?;
    Ok(m)
}

fn write_file(path: &str, content: &str) -> Result<(), CliError> {
    fs::write(path, content).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })
}

/// Writes `content` to `--out` plus the manifest sidecar, or to stdout.
fn emit(out: &OutArgs, content: &str, manifest: &ExperimentManifest) -> Result<(), CliError> {
    match &out.out {
        Some(path) => {
            write_file(path, content)?;
            write_file(&format!("{path}.manifest.json"), &manifest.to_json()?)
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn solver_config(a: &SolverArgs) -> SolverConfig {
    match a.solver {
        Solver::Omp => SolverConfig::Omp,
        Solver::Iht => SolverConfig::Iht(IhtSettings {
            step: a.step,
            max_iters: a.max_iters.unwrap_or(IhtSettings::default().max_iters),
        }),
        Solver::Bp => SolverConfig::BasisPursuit(BasisPursuitSettings {
            tol_primal: a.tol_primal,
            tol_dual: a.tol_dual,
            max_iters: a.max_iters.unwrap_or(BasisPursuitSettings::default().max_iters),
            gamma: a.gamma,
        }),
    }
}

fn column_norm_stats(op: &dyn LinearOperator) -> Result<serde_json::Value, CliError> {
    let mut norms = Vec::with_capacity(op.ncols());
    for c in 0..op.ncols() {
        norms.push(op.column(c)?.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let max = norms.iter().copied().fold(0.0, f64::max);
    let mean = norms.iter().sum::<f64>() / norms.len().max(1) as f64;
    Ok(json!({ "min": min, "max": max, "mean": mean }))
}

fn dump_dense(path: &Option<String>, op: &dyn LinearOperator, manifest: &ExperimentManifest) -> Result<(), CliError> {
    if let Some(p) = path {
        let dense = op.to_dense()?;
        write_file(p, &dense_to_csv(&dense, &manifest.hash)?)?;
    }
    Ok(())
}

pub fn gen(a: &GenArgs) -> Result<(), CliError> {
    let m = &a.matrix;
    let manifest = matrix_manifest("gen", m)?.seal()?;
    match baseline_kind(m.kind) {
        None => {
            warn_regime(m.m, m.n, m.b);
            let matrix = SparseCityMatrix::construct(m.m, m.n, m.b, m.seed, theta(m))?;
            dump_dense(&a.dense, &matrix, &manifest)?;
            emit(&a.out, &json_with_manifest(&matrix.manifest()?, &manifest)?, &manifest)
        }
        Some(kind) => {
            let matrix = BaselineMatrix::build(kind, m.m, m.n, m.seed)?;
            dump_dense(&a.dense, &matrix, &manifest)?;
            emit(&a.out, &json_with_manifest(&matrix.manifest(), &manifest)?, &manifest)
        }
    }
}

pub fn baseline(a: &BaselineArgs) -> Result<(), CliError> {
    let m = &a.matrix;
    let Some(kind) = baseline_kind(m.kind) else {
        return Err(CliError::Argument("baseline needs --kind other than sparse-city".into()));
    };
    let manifest = matrix_manifest("baseline", m)?.seal()?;
    let matrix = BaselineMatrix::build(kind, m.m, m.n, m.seed)?;
    dump_dense(&a.dense, &matrix, &manifest)?;
    let body = json!({
        "matrix": matrix.manifest(),
        "column_norms": column_norm_stats(&matrix)?,
    });
    emit(&a.out, &json_with_manifest(&body, &manifest)?, &manifest)
}

fn parse_grid(text: &str) -> Result<Vec<GridPoint>, CliError> {
    text.split(',')
        .map(|t| {
            let parts: Vec<&str> = t.trim().split(':').collect();
            let nums: Vec<usize> = parts
                .iter()
                .map(|p| p.parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Argument(format!("bad grid point {t:?}; expected m:n:b")))?;
            match nums[..] {
                [m, n, b] => Ok(GridPoint { m, n, b }),
                _ => Err(CliError::Argument(format!("bad grid point {t:?}; expected m:n:b"))),
            }
        })
        .collect()
}

fn render<T: Serialize + sparsecity::report::CsvRecord>(
    rows: &[T],
    format: Format,
    manifest: &ExperimentManifest,
) -> Result<String, CliError> {
    Ok(match format {
        Format::Csv => rows_to_csv(rows, &manifest.hash)?,
        Format::Json => json_with_manifest(&json!({ "rows": rows }), manifest)?,
    })
}

pub fn rip(a: &RipArgs) -> Result<(), CliError> {
    let m = &a.matrix;
    let mode = match a.mode {
        RipMode::Exact => "exact",
        RipMode::MonteCarlo => "monte_carlo",
        RipMode::Scan => "scan",
        RipMode::Tail => "tail",
    };
    let mut manifest = matrix_manifest("rip", m)?.param("mode", mode)?.param("s", a.s)?;
    let cfg = EstimatorConfig {
        dist: theta(m),
        budget: a.budget,
        mc_trials: a.mc_trials,
    };
    if matches!(a.mode, RipMode::Scan | RipMode::Tail) {
        if m.kind != Kind::SparseCity {
            return Err(CliError::Argument("scan and tail run on the sparse-city ensemble only".into()));
        }
        manifest = manifest
            .param("trials", a.trials)?
            .param("mc_trials", a.mc_trials)?
            .param("budget", a.budget.to_string())?;
    }
    let text = match a.mode {
        RipMode::Exact | RipMode::MonteCarlo => {
            if m.kind == Kind::SparseCity {
                warn_regime(m.m, m.n, m.b);
            }
            let op = ensemble(m).build(m.seed)?;
            let report = if a.mode == RipMode::Exact {
                manifest = manifest.param("budget", a.budget.to_string())?;
                delta_exact_with_budget(&op, a.s, a.budget)?
            } else {
                manifest = manifest.param("trials", a.trials)?;
                delta_monte_carlo(&op, a.s, a.trials, derive_seed(m.seed, &[1]))?
            };
            let manifest = manifest.seal()?;
            let text = render(&[report], a.format, &manifest)?;
            return emit(&a.out, &text, &manifest);
        }
        RipMode::Scan => {
            let grid = match &a.grid {
                Some(g) => parse_grid(g)?,
                None => vec![GridPoint { m: m.m, n: m.n, b: m.b }],
            };
            for p in &grid {
                warn_regime(p.m, p.n, p.b);
            }
            manifest = manifest.param("grid", &grid)?.seal()?;
            let rows = expectation_scan(&grid, a.s, a.trials, m.seed, &cfg)?;
            render(&rows, a.format, &manifest)?
        }
        RipMode::Tail => {
            warn_regime(m.m, m.n, m.b);
            manifest = manifest.param("delta", a.delta)?.seal()?;
            let p = GridPoint { m: m.m, n: m.n, b: m.b };
            let row = tail_estimate(p, a.s, a.delta, a.trials, m.seed, &cfg)?;
            render(&[row], a.format, &manifest)?
        }
    };
    emit(&a.out, &text, &manifest)
}

pub fn recover(a: &RecoverArgs) -> Result<(), CliError> {
    let m = &a.matrix;
    let solver = solver_config(&a.solver);
    let manifest = matrix_manifest("recover", m)?
        .param("s", a.s)?
        .param("signal_seed", a.signal_seed)?
        .param("solver", &solver)?
        .seal()?;
    let op = ensemble(m).build(m.seed)?;
    let n = op.ncols();
    if a.s == 0 || a.s > n {
        return Err(CliError::Argument(format!("--s must lie in 1..={n}")));
    }
    let mut rng = stream(a.signal_seed);
    let mut x = vec![0.0; n];
    for i in sample_subset(&mut rng, n, a.s) {
        x[i] = sign(&mut rng);
    }
    let problem = RecoveryProblem::from_ground_truth(&op, x)?.with_sparsity(a.s);
    let result = solve(&problem, &solver)?;
    emit(&a.out, &json_with_manifest(&result, &manifest)?, &manifest)?;
    if result.success {
        Ok(())
    } else {
        Err(CliError::SolverFailed(format!("{:?}", result.status)))
    }
}

fn parse_list(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Argument(format!("bad list entry {t:?}")))
        })
        .collect()
}

pub fn phase(a: &PhaseArgs) -> Result<(), CliError> {
    let m = &a.matrix;
    let solver = solver_config(&a.solver);
    let grid = parse_list(&a.s_grid)?;
    let manifest = matrix_manifest("phase", m)?
        .param("s_grid", &grid)?
        .param("trials", a.trials)?
        .param("solver", &solver)?
        .seal()?;
    if m.kind == Kind::SparseCity {
        warn_regime(m.m, m.n, m.b);
    }
    let rows = phase_transition(&ensemble(m), &grid, a.trials, &solver, m.seed)?;
    emit(&a.out, &rows_to_csv(&rows, &manifest.hash)?, &manifest)
}

pub fn embed(a: &EmbedArgs) -> Result<(), CliError> {
    let projector = match (a.m, a.n, a.b) {
        (Some(m), Some(n), Some(b)) => {
            if n * b != a.ambient {
                return Err(CliError::Argument(format!("n*b = {} must equal --ambient {}", n * b, a.ambient)));
            }
            warn_regime(m, n, b);
            Some(Ensemble::SparseCity {
                m,
                n,
                b,
                dist_name: DistName::FourPoint,
                normalized: true,
            })
        }
        (None, None, None) => None,
        _ => return Err(CliError::Argument("--m, --n and --b go together".into())),
    };
    let manifest = ExperimentManifest::new("embed")
        .param("projector", &projector)?
        .param("ambient", a.ambient)?
        .param("seed", a.seed)?;
    match a.mode {
        EmbedMode::Distortion => {
            let Some(ens) = projector else {
                return Err(CliError::Argument("distortion needs --m, --n and --b".into()));
            };
            let manifest = manifest.param("points", a.points)?.param("eps", a.eps)?.seal()?;
            let p = make_projector(ens.build(derive_seed(a.seed, &[1]))?, derive_seed(a.seed, &[2]));
            let pts = gaussian_points(a.points, a.ambient, derive_seed(a.seed, &[0]));
            let report = distortion_report(&p, &pts, a.eps)?;
            emit(&a.out, &json_with_manifest(&report, &manifest)?, &manifest)
        }
        EmbedMode::Classify => {
            let solver = match a.solver {
                SrcSolverName::Omp => SrcSolver::Omp {
                    sparsity: a.subspace_dim,
                },
                SrcSolverName::Bp => SrcSolver::BasisPursuit(BasisPursuitSettings::default()),
            };
            let set = SyntheticClassSet {
                classes: a.classes,
                ambient_dim: a.ambient,
                subspace_dim: a.subspace_dim,
                samples_per_class: a.samples_per_class,
                test_per_class: 1,
                noise: a.noise,
                seed: a.seed,
            };
            let manifest = manifest
                .param("class_set", set)?
                .param("trials", a.trials)?
                .param("solver", solver)?
                .param("normalize_columns", !a.no_normalize)?
                .seal()?;
            let report = classification_experiment(&set, a.trials, projector.as_ref(), &solver, !a.no_normalize, a.seed)?;
            emit(&a.out, &json_with_manifest(&report, &manifest)?, &manifest)
        }
    }
}
