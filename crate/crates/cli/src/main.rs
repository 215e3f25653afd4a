use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use softpd::algorithms::{epsilon_curve, ls_spd_with, solve_hard, solve_soft, spd_od, SearchOptions};
use softpd::eval::{evaluate_classifier, gaussian_clusters, random_lsa, random_shape, timing_report};
use softpd::formulations::{build_feasibility_free_sites, build_pspd_fixed, build_soft_fixed, SigmaMatrix, SoftOutcome};
use softpd::free_sites::{local_optimize, FreeVariant, LocalOptions};
use softpd::geometry::{extract_errors, extract_errors_at, Dataset, Separation, SiteSet, Variant, TAU_NUM};
use softpd::io::{self, Format, LabelMap, ModelFile, SvgOptions};
use softpd::lp::{self, write_mps, DenseSimplex, LinearProgram, LpStatus};

#[derive(Parser)]
#[command(name = "softpd", version, about = "Maximum-margin and soft power diagrams for clustered data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Training dataset (LIBSVM or CSV).
    #[arg(long)]
    train: PathBuf,
    /// Input format; inferred from the file extension when omitted.
    #[arg(long)]
    format: Option<Format>,
    /// `means` or a file with one site per line (or a JSON array).
    #[arg(long, default_value = "means")]
    sites: String,
    /// Tolerance for slack sign tests.
    #[arg(long, default_value_t = TAU_NUM)]
    tol: f64,
    /// Print canonical JSON instead of text.
    #[arg(long)]
    json: bool,
    /// Write the linear program solved by this command in fixed MPS format.
    #[arg(long)]
    mps: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Maximum-margin diagram for fixed sites.
    Separate {
        #[command(flatten)]
        common: Common,
        /// Also decide whether any site set admits a separating diagram.
        #[arg(long)]
        free_sites: bool,
        /// Save the diagram as a model file.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Soft-margin diagram allowing at most `t` margin errors.
    Soft {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "mep")]
        variant: Variant,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Outlier detection with a soft-margin diagram.
    Outliers {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "mep")]
        variant: Variant,
        #[arg(long)]
        t: usize,
    },
    /// Smallest error budget giving a nonnegative margin.
    Threshold {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "mep")]
        variant: Variant,
        /// Solve every probe from scratch.
        #[arg(long)]
        cold: bool,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Optimal margin and objective over a range of `t`.
    Curve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "mep")]
        variant: Variant,
        #[arg(long, default_value_t = 0)]
        from: usize,
        /// Defaults to the largest meaningful `t`.
        #[arg(long)]
        to: Option<usize>,
    },
    /// Local optimization with the sites as variables.
    Freesites {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "spd")]
        variant: FreeVariant,
        /// Error budget; defaults to 10% of the largest meaningful value.
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = 500)]
        max_iterations: usize,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Assign points to cells of a saved model.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        format: Option<Format>,
        #[arg(long)]
        json: bool,
    },
    /// Threshold on a training set, misclassification on a test set.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value = "mep")]
        variant: Variant,
    },
    /// SVG of a two-dimensional dataset and diagram.
    Plot {
        #[command(flatten)]
        common: Common,
        /// Draw this model instead of solving for one.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Soft diagram with this error budget instead of the hard margin.
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value = "mep")]
        variant: Variant,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic labeled instance as CSV.
    Generate {
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Standard deviation of the Gaussian clusters.
        #[arg(long, default_value_t = 2.0)]
        spread: f64,
        /// Cluster uniform points by a balanced least-squares assignment (n ≤ 12).
        #[arg(long)]
        lsa: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wall-clock times of repeated soft-margin solves.
    Timing {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "mep")]
        variant: Variant,
        /// Error budgets, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
    },
}

fn infer_format(path: &Path, explicit: Option<Format>) -> Format {
    explicit.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
        _ => Format::Libsvm,
    })
}

struct Loaded {
    data: Dataset,
    labels: Option<LabelMap>,
    sites: SiteSet,
}

fn load(common: &Common) -> Result<Loaded> {
    let format = infer_format(&common.train, common.format);
    let (data, labels) = io::load_dataset(&common.train, format, None, None)
        .with_context(|| format!("reading {}", common.train.display()))?;
    let sites = if common.sites == "means" {
        data.mean_sites()?
    } else {
        let s = io::read_sites(Path::new(&common.sites)).with_context(|| format!("reading sites {}", common.sites))?;
        if s.k() != data.k() || s.d() != data.d() {
            bail!("site file has {} sites of dimension {}, dataset has {} clusters of dimension {}", s.k(), s.d(), data.k(), data.d());
        }
        s
    };
    Ok(Loaded { data, labels, sites })
}

fn export_mps(common: &Common, lp: &LinearProgram, name: &str) -> Result<()> {
    if let Some(path) = &common.mps {
        std::fs::write(path, write_mps(lp, name)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(" ")
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|l| l + 1).collect()
}

fn emit(json_mode: bool, value: Value, text: String) {
    if json_mode {
        println!("{}", io::to_canonical_json(&value));
    } else {
        print!("{text}");
    }
}

fn run(cli: Cli) -> Result<()> {
    let backend = DenseSimplex::default();
    match cli.command {
        Command::Separate { common, free_sites, model } => {
            let Loaded { data, sites, .. } = load(&common)?;
            let lp = build_pspd_fixed(&SigmaMatrix::new(&data, &sites)?);
            export_mps(&common, &lp, "PSPD")?;
            let (diagram, eps) = solve_hard(&backend, &data, &sites)?;
            let verdict = match diagram.verify_separating(&data, common.tol)? {
                Separation::StrictlySeparating => "strictly_separating",
                Separation::Separating => "separating",
                Separation::NotSeparating => "not_separating",
            };
            let feasible = if free_sites {
                Some(lp::solve_feasibility(&build_feasibility_free_sites(&data))?.status == LpStatus::Optimal)
            } else {
                None
            };
            if let Some(path) = model {
                io::write_model(&path, &ModelFile::new(&diagram, eps, None, Some(0)))?;
            }
            let mut text = format!("epsilon {}\ngamma {}\nseparation {verdict}\n", fmt_num(eps), fmt_list(&diagram.gamma));
            if let Some(f) = feasible {
                text += &format!("separable with free sites {f}\n");
            }
            let mut value = json!({
                "epsilon": finite(eps),
                "gamma": diagram.gamma,
                "separation": verdict,
                "sites": diagram.sites.as_slice(),
            });
            if let Some(f) = feasible {
                value["free_sites_feasible"] = json!(f);
            }
            emit(common.json, value, text);
        }
        Command::Soft { common, variant, t, model } => {
            let Loaded { data, sites, .. } = load(&common)?;
            export_mps(&common, &build_soft_fixed(&data, &sites, t, variant)?, "SOFT")?;
            let (outcome, theta, _) = solve_soft(&backend, &data, &sites, t, variant, None)?;
            let SoftOutcome::Optimal(sol) = outcome else {
                return Err(softpd::Error::Unbounded { t }.into());
            };
            let errors = extract_errors(&sol, &data, common.tol)?;
            if let Some(path) = model {
                io::write_model(&path, &ModelFile::new(&sol.diagram, sol.epsilon, Some(variant.to_string()), Some(t)))?;
            }
            let (me, sv) = match variant {
                Variant::Mep => (one_based(&errors.margin_error_points), one_based(&errors.support_vector_points)),
                Variant::Mme => (
                    errors.margin_error_pairs.iter().map(|p| p.0 + 1).collect(),
                    errors.support_vector_pairs.iter().map(|p| p.0 + 1).collect(),
                ),
            };
            let text = format!(
                "epsilon {}\ntheta {}\ngamma {}\nmargin errors {}\nsupport vectors {}\n",
                fmt_num(sol.epsilon),
                fmt_num(theta),
                fmt_list(&sol.diagram.gamma),
                errors.margin_error_count(variant),
                errors.support_vector_count(variant)
            );
            let pairs = |v: &[(usize, usize)]| v.iter().map(|&(l, j)| json!([l + 1, j + 1])).collect::<Vec<_>>();
            let value = json!({
                "variant": variant,
                "t": t,
                "epsilon": sol.epsilon,
                "theta": theta,
                "gamma": sol.diagram.gamma,
                "xi": sol.xi.values(),
                "margin_errors": if variant == Variant::Mep { json!(me) } else { json!(pairs(&errors.margin_error_pairs)) },
                "support_vectors": if variant == Variant::Mep { json!(sv) } else { json!(pairs(&errors.support_vector_pairs)) },
            });
            emit(common.json, value, text);
        }
        Command::Outliers { common, variant, t } => {
            let Loaded { data, sites, .. } = load(&common)?;
            export_mps(&common, &build_soft_fixed(&data, &sites, t, variant)?, "SOFT")?;
            let r = spd_od(&backend, &data, &sites, t, variant)?;
            let mut text = format!("epsilon {}\noutliers {}\n", fmt_num(r.solution.epsilon), r.outliers.len());
            for o in &r.outliers {
                text += &format!("{} {:?} x{}\n", o.point + 1, data.point(o.point), o.multiplicity);
            }
            let value = json!({
                "variant": variant,
                "t": t,
                "epsilon": r.solution.epsilon,
                "outliers": r.outliers.iter().map(|o| o.point + 1).collect::<Vec<_>>(),
                "multiplicities": r.outliers.iter().map(|o| o.multiplicity).collect::<Vec<_>>(),
            });
            emit(common.json, value, text);
        }
        Command::Threshold { common, variant, cold, model } => {
            let Loaded { data, sites, .. } = load(&common)?;
            let r = ls_spd_with(&backend, &data, &sites, variant, SearchOptions { warm_start: !cold })?;
            if common.mps.is_some() {
                let lp = if r.t_min == 0 {
                    build_pspd_fixed(&SigmaMatrix::new(&data, &sites)?)
                } else {
                    build_soft_fixed(&data, &sites, r.t_min, variant)?
                };
                export_mps(&common, &lp, "THRESH")?;
            }
            if let (Some(path), Some(p)) = (model, &r.diagram) {
                io::write_model(&path, &ModelFile::new(p, r.epsilon, Some(variant.to_string()), Some(r.t_min)))?;
            }
            let text = format!(
                "tau {} ({}/{})\nt_min {}\nepsilon {}\nlp solves {}\n",
                fmt_num(r.tau),
                r.t_min,
                r.t_max,
                r.t_min,
                fmt_num(r.epsilon),
                r.lp_solve_count
            );
            let value = json!({
                "tau": r.tau,
                "t_min": r.t_min,
                "t_max": r.t_max,
                "variant": variant,
                "epsilon": finite(r.epsilon),
                "gamma": r.diagram.as_ref().map(|p| p.gamma.clone()),
                "lp_solve_count": r.lp_solve_count,
            });
            emit(common.json, value, text);
        }
        Command::Curve { common, variant, from, to } => {
            let Loaded { data, sites, .. } = load(&common)?;
            let to = to.unwrap_or_else(|| variant.max_t(data.n(), data.k()));
            let ts: Vec<usize> = (from..=to).collect();
            let curve = epsilon_curve(&backend, &data, &sites, variant, &ts, true)?;
            let mut text = String::from("t epsilon theta\n");
            for p in &curve {
                text += &format!("{} {} {}\n", p.t, fmt_num(p.epsilon), fmt_num(p.theta));
            }
            let value = json!({
                "variant": variant,
                "points": curve.iter().map(|p| json!({"t": p.t, "epsilon": finite(p.epsilon), "theta": finite(p.theta)})).collect::<Vec<_>>(),
            });
            emit(common.json, value, text);
        }
        Command::Freesites { common, variant, t, max_iterations, model } => {
            let Loaded { data, .. } = load(&common)?;
            let start = (common.sites != "means").then(|| io::read_sites(Path::new(&common.sites))).transpose()?;
            export_mps(&common, &build_feasibility_free_sites(&data), "FREE")?;
            let t = match variant {
                FreeVariant::Spd => 0,
                FreeVariant::Mep => t.unwrap_or_else(|| (data.n() / 10).max(1)),
                FreeVariant::Mme => t.unwrap_or_else(|| ((data.k() - 1) * data.n() / 10).max(1)),
            };
            let options = LocalOptions { max_iterations, ..LocalOptions::default() };
            let clock = Instant::now();
            let r = local_optimize(&backend, &data, variant, t, start.as_ref(), &options)?;
            let seconds = clock.elapsed().as_secs_f64();
            if let Some(path) = model {
                io::write_model(&path, &ModelFile::new(&r.diagram, r.epsilon, Some(variant.to_string()), Some(t)))?;
            }
            let text = format!(
                "theta {} (start {})\nepsilon {}\niterations {} converged {}\nviolation {:e}\n",
                fmt_num(r.theta),
                fmt_num(r.initial_theta),
                fmt_num(r.epsilon),
                r.iterations,
                r.converged,
                r.violation
            );
            let value = json!({
                "variant": variant,
                "t": t,
                "theta": r.theta,
                "initial_theta": r.initial_theta,
                "epsilon": r.epsilon,
                "iterations": r.iterations,
                "converged": r.converged,
                "violation": r.violation,
                "sites": r.diagram.sites.as_slice(),
                "gamma": r.diagram.gamma,
                "seconds": seconds,
            });
            emit(common.json, value, text);
        }
        Command::Classify { model, input, format, json } => {
            let m = io::read_model(&model).with_context(|| format!("reading {}", model.display()))?;
            let diagram = m.diagram()?;
            let points = io::read_points(&input, infer_format(&input, format), m.d)?;
            let labels = points.iter().map(|x| diagram.classify(x).map(|i| i + 1)).collect::<Result<Vec<_>, _>>()?;
            let text = labels.iter().map(|l| format!("{l}\n")).collect();
            emit(json, json!({ "labels": labels }), text);
        }
        Command::Eval { common, test, variant } => {
            let Loaded { data, labels, sites } = load(&common)?;
            let format = infer_format(&test, common.format);
            let (test_data, _) = io::load_dataset(&test, format, labels.as_ref(), Some(data.d()))
                .with_context(|| format!("reading {}", test.display()))?;
            if test_data.d() != data.d() {
                bail!("test set has dimension {}, training set {}", test_data.d(), data.d());
            }
            let clock = Instant::now();
            let r = ls_spd_with(&backend, &data, &sites, variant, SearchOptions::default())?;
            let seconds = clock.elapsed().as_secs_f64();
            let Some(diagram) = r.diagram.clone() else {
                bail!("the program at t_min = {} is unbounded; no diagram to evaluate", r.t_min);
            };
            let mut report = evaluate_classifier(&diagram, &test_data)?;
            report.threshold = Some(r.clone());
            report.solve_seconds = vec![seconds];
            let text = format!(
                "tau {} ({}/{})\nmisclassified {}/{} ({:.2}%)\n",
                fmt_num(r.tau),
                r.t_min,
                r.t_max,
                report.misclassified,
                report.total,
                100.0 * report.rate
            );
            let value = json!({
                "tau": r.tau,
                "t_min": r.t_min,
                "t_max": r.t_max,
                "variant": variant,
                "diagram_at": "t_min",
                "confusion": report.confusion,
                "misclassified": report.misclassified,
                "total": report.total,
                "rate": report.rate,
                "lp_solve_count": r.lp_solve_count,
                "seconds": seconds,
            });
            emit(common.json, value, text);
        }
        Command::Plot { common, model, t, variant, out } => {
            let Loaded { data, sites, .. } = load(&common)?;
            let (diagram, eps) = match (model, t) {
                (Some(path), _) => {
                    let m = io::read_model(&path)?;
                    let p = m.diagram()?;
                    let eps = m.epsilon.unwrap_or_else(|| p.margin_of(&data).unwrap_or(0.0));
                    (p, eps)
                }
                (None, Some(t)) => {
                    let (outcome, _, _) = solve_soft(&backend, &data, &sites, t, variant, None)?;
                    let SoftOutcome::Optimal(sol) = outcome else {
                        return Err(softpd::Error::Unbounded { t }.into());
                    };
                    (sol.diagram, sol.epsilon)
                }
                (None, None) => solve_hard(&backend, &data, &sites)?,
            };
            let errors = extract_errors_at(&diagram, eps, &data, common.tol)?;
            let options = SvgOptions { support_vectors: errors.support_vector_points, ..SvgOptions::default() };
            let svg = io::emit_svg(&diagram, &data, eps, &options)?;
            match out {
                Some(path) => std::fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{svg}"),
            }
        }
        Command::Generate { n, k, d, spread, lsa, seed, out } => {
            if k < 2 || n < k || d == 0 {
                bail!("need k ≥ 2, n ≥ k and d ≥ 1");
            }
            if !(spread > 0.0 && spread.is_finite()) {
                bail!("spread must be positive");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = if lsa {
                random_lsa(&mut rng, n, k, d).0
            } else {
                let shape = random_shape(&mut rng, n, k);
                gaussian_clusters(&mut rng, &shape, d, spread)
            };
            match out {
                Some(path) => io::write_csv(std::fs::File::create(&path)?, &data)?,
                None => io::write_csv(std::io::stdout().lock(), &data)?,
            }
        }
        Command::Timing { common, variant, t, repeats } => {
            let Loaded { data, sites, .. } = load(&common)?;
            let rows = timing_report(&backend, &data, &sites, variant, &t, repeats)?;
            let mut text = String::from("t rows cols mean_seconds\n");
            for r in &rows {
                text += &format!("{} {} {} {:.6}\n", r.t, r.rows, r.cols, r.mean());
            }
            emit(common.json, json!({ "variant": variant, "timings": rows }), text);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
