use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use geninv::difflab::{parse_field, ScalarField};
use geninv::momentlab::{image_from_csv, PointMassImage};
use geninv::translator::{spec_to_moments, to_derivatives, ExprForm, InvariantExpr};
use geninv::verifier::{
    self, check_linear_relation, explore_conjecture, screen_projective,
    verify_derivative_invariance, verify_moment_invariance, TransformGroup, VerificationReport,
    Verdict, VerifyConfig,
};
use geninv::{catalog, generators, PISpec};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "geninv", version, about = "Moment and differential invariants under affine maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    Moments,
    Derivatives,
}

#[derive(Clone, Copy, ValueEnum)]
enum Group {
    Rotation,
    Similarity,
    Affine,
}

impl From<Group> for TransformGroup {
    fn from(g: Group) -> Self {
        match g {
            Group::Rotation => TransformGroup::Rotation,
            Group::Similarity => TransformGroup::Similarity,
            Group::Affine => TransformGroup::Affine,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate candidate generating-function products
    Generate {
        #[arg(long, default_value_t = 2)]
        dim: u32,
        /// Largest number of distinct points
        #[arg(long, default_value_t = 3)]
        max_points: u32,
        /// Largest per-point frequency (moment order)
        #[arg(long, default_value_t = 2)]
        max_order: u32,
        /// Only products of g factors with an even count
        #[arg(long)]
        affine_only: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Expand a spec into its coordinate polynomial
    Expand {
        #[arg(long)]
        spec: String,
        /// Dimension hint when no g factor fixes it
        #[arg(long)]
        dim: Option<u32>,
    },
    /// Translate a spec into a moment or derivative expression
    Translate {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        dim: Option<u32>,
        #[arg(long, value_enum, default_value = "moments")]
        to: Target,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Write to a file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify an invariance law under sampled transforms of a group
    Verify {
        #[command(flatten)]
        subject: SubjectArgs,
        #[arg(long, value_enum, default_value = "affine")]
        group: Group,
        /// Image CSV (`dim=d` header, `x,y[,z],mass` rows); repeatable
        #[arg(long)]
        image: Vec<PathBuf>,
        /// Field literal like `3/2*x^2*y - y^3 + x`; repeatable
        #[arg(long)]
        field: Vec<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Screen a differential invariant under bounded projective maps
    Screen {
        #[command(flatten)]
        subject: SubjectArgs,
        #[arg(long)]
        field: Vec<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Check the linear relation among same-order moments and derivatives
    Relation {
        #[arg(long, default_value_t = 2)]
        order: u32,
        #[arg(long, default_value_t = 2)]
        dim: u32,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the full pipeline on the conjectured two-factor product
    Conjecture {
        /// Number of points in the first factor (and the dimension)
        #[arg(long, default_value_t = 4)]
        m: u32,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct SubjectArgs {
    /// Spec string like `g(1,2)*g(1,2)`
    #[arg(long)]
    spec: Option<String>,
    /// Path to an expression JSON file
    #[arg(long)]
    expr: Option<PathBuf>,
    /// Catalog entry: hu1..hu7, aff1..aff3, s3d1..s3d3, hessdet2d, mu20, hxx
    #[arg(long)]
    catalog: Option<String>,
    #[arg(long)]
    dim: Option<u32>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 100)]
    trials: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Evaluation points per (transform, field) pair
    #[arg(long, default_value_t = 5)]
    points: u32,
    /// Run trials sequentially even when the parallel feature is on
    #[arg(long)]
    sequential: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> VerifyConfig {
        VerifyConfig {
            trials: self.trials,
            seed: self.seed,
            tolerance: self.tol,
            points: self.points,
            parallel: !self.sequential,
        }
    }
}

impl SubjectArgs {
    /// Resolve to an expression, translating to the wanted form when the
    /// subject came from a spec.
    fn resolve(&self, want: Option<ExprForm>) -> Result<InvariantExpr> {
        let picked = [&self.spec.is_some(), &self.expr.is_some(), &self.catalog.is_some()]
            .iter()
            .filter(|b| ***b)
            .count();
        if picked != 1 {
            bail!("pass exactly one of --spec, --expr, --catalog");
        }
        let e = if let Some(s) = &self.spec {
            let spec = PISpec::parse(s, self.dim)?;
            let m = spec_to_moments(&spec)?;
            match want {
                Some(ExprForm::Derivatives) => to_derivatives(&m)?,
                _ => m,
            }
        } else if let Some(path) = &self.expr {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            InvariantExpr::from_json(&text)?
        } else {
            let name = self.catalog.as_deref().unwrap();
            catalog::by_name(name).ok_or_else(|| anyhow!("unknown catalog entry `{name}`"))?
        };
        if let Some(w) = want {
            if e.form != w {
                bail!("expression form does not match this command");
            }
        }
        Ok(e)
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn report_exit(report: &VerificationReport, run: &RunArgs) -> Result<ExitCode> {
    let text = match run.format {
        Format::Json => report.to_json(),
        Format::Text => {
            let mut s = format!(
                "{}: {} under {:?} ({} trials, seed {}): max rel dev {:.3e}",
                match report.verdict {
                    Verdict::Pass => "PASS",
                    Verdict::Fail => "FAIL",
                    Verdict::Degenerate => "DEGENERATE",
                },
                report.subject,
                report.group,
                report.trials,
                report.seed,
                report.max_rel_dev,
            );
            if let Some(f) = report.fitted_exponent {
                s.push_str(&format!(", fitted exponent {f:.4}"));
            }
            if report.verdict == Verdict::Fail {
                if let Some(w) = report.worst_sample() {
                    s.push_str(&format!(
                        "\nworst sample: transform {} subject {} lhs {:.6e} rhs {:.6e} J {:.4}",
                        w.transform, w.subject, w.lhs, w.rhs, w.jacobian
                    ));
                }
            }
            s
        }
    };
    emit(&text, &run.out)?;
    Ok(match report.verdict {
        Verdict::Pass => ExitCode::SUCCESS,
        Verdict::Fail => ExitCode::from(1),
        Verdict::Degenerate => ExitCode::from(2),
    })
}

fn load_images(paths: &[PathBuf], dim: usize, seed: u64) -> Result<Vec<PointMassImage>> {
    if paths.is_empty() {
        let mut rng = verifier::input_rng(seed);
        return Ok((0..3).map(|_| verifier::random_image(dim, 30, &mut rng)).collect());
    }
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))?;
            Ok(image_from_csv(&text)?)
        })
        .collect()
}

fn load_fields(literals: &[String], dim: u32, seed: u64) -> Result<Vec<ScalarField>> {
    if literals.is_empty() {
        let mut rng = verifier::input_rng(seed);
        return Ok((0..3).map(|_| verifier::random_poly_field(dim, 3, &mut rng)).collect());
    }
    literals
        .iter()
        .map(|s| Ok(parse_field(s, dim)?))
        .collect()
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate { dim, max_points, max_order, affine_only, format } => {
            let specs = generators::enumerate_specs(dim, max_points, max_order, affine_only)?;
            match format {
                Format::Text => {
                    for s in &specs {
                        println!("{s}");
                    }
                }
                Format::Json => {
                    let names: Vec<String> = specs.iter().map(|s| s.to_string()).collect();
                    println!("{}", serde_json::to_string_pretty(&names)?);
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Expand { spec, dim } => {
            let spec = PISpec::parse(&spec, dim)?;
            println!("{}", spec.expand()?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Translate { spec, dim, to, format, out } => {
            let spec = PISpec::parse(&spec, dim)?;
            let e = spec_to_moments(&spec)?;
            let e = match to {
                Target::Moments => e,
                Target::Derivatives => to_derivatives(&e)?,
            };
            let text = match format {
                Format::Json => e.to_json(),
                Format::Text => e.render(),
            };
            emit(&text, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { subject, group, image, field, run } => {
            let e = subject.resolve(None)?;
            let cfg = run.config();
            let report = match e.form {
                ExprForm::Moments => {
                    let images = load_images(&image, e.dim as usize, cfg.seed)?;
                    verify_moment_invariance(&e, &images, group.into(), &cfg)?
                }
                ExprForm::Derivatives => {
                    let fields = load_fields(&field, e.dim, cfg.seed)?;
                    verify_derivative_invariance(&e, &fields, group.into(), &cfg)?
                }
            };
            report_exit(&report, &run)
        }
        Command::Screen { subject, field, run } => {
            let e = subject.resolve(Some(ExprForm::Derivatives))?;
            let cfg = run.config();
            let fields = load_fields(&field, e.dim, cfg.seed)?;
            let report = screen_projective(&e, &fields, &cfg)?;
            report_exit(&report, &run)
        }
        Command::Relation { order, dim, run } => {
            let report = check_linear_relation(order, dim, &run.config())?;
            report_exit(&report, &run)
        }
        Command::Conjecture { m, run } => {
            let report = explore_conjecture(m, &run.config())?;
            let text = match run.format {
                Format::Json => serde_json::to_string_pretty(&report)?,
                Format::Text => format!(
                    "{}: spec {} ({} expansion terms)\nmoment form: {}\nderivative form: {}\n\
                     affine: {:?} (max rel dev {:.3e})\nprojective: {:?} (max rel dev {:.3e})",
                    if report.supported { "SUPPORTED" } else { "NOT SUPPORTED" },
                    report.spec,
                    report.expansion_terms,
                    report.moment_expr,
                    report.derivative_expr,
                    report.affine.verdict,
                    report.affine.max_rel_dev,
                    report.projective.verdict,
                    report.projective.max_rel_dev,
                ),
            };
            emit(&text, &run.out)?;
            let worst = [&report.affine.verdict, &report.projective.verdict]
                .into_iter()
                .max_by_key(|v| match v {
                    Verdict::Pass => 0,
                    Verdict::Fail => 2,
                    Verdict::Degenerate => 1,
                })
                .unwrap();
            Ok(match worst {
                Verdict::Pass => ExitCode::SUCCESS,
                Verdict::Fail => ExitCode::from(1),
                Verdict::Degenerate => ExitCode::from(2),
            })
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
