//! Command-line driver tying the layers together: model text in, policies
//! and LP files out.
//!
//! Subcommands: `parse` (canonical pretty-print), `validate` (bind a model
//! to a tree's horizon and report findings), `expand` (write the
//! deterministic-equivalent LP file), `solve` (expand, solve, report).
//! Exit codes: 0 on success or `OPTIMAL`, 1 on `INFEASIBLE`/`UNBOUNDED`,
//! 2 on usage or input errors.

pub mod report;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use msm_core::dsl::{format_model, parse_source, MetaModel};
use msm_core::expand::{expand_node_form, expand_scenario_form, ExpandedModel};
use msm_core::lp::{emit_lp_file, solve as lp_solve, Status};
use msm_core::tree::{load_tree, ScenarioTree};
use msm_core::validate::{validate_model, ValidatedModel};

use report::RunReport;

#[derive(Parser)]
#[command(
    name = "msm",
    version,
    about = "Multi-stage stochastic model toolkit: parse, validate, expand, solve"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a model file and print its canonical form.
    Parse {
        /// Model file (.msm).
        model: PathBuf,
    },
    /// Check a model against a scenario tree and report findings.
    Validate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        /// Expected horizon; must match the tree file.
        #[arg(long)]
        horizon: Option<u32>,
    },
    /// Write the deterministic-equivalent LP to a file.
    Expand {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        /// Output LP file path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Form::Node)]
        form: Form,
        #[arg(long)]
        horizon: Option<u32>,
    },
    /// Expand, solve, and print the policy report.
    Solve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
        #[arg(long, value_enum, default_value_t = Form::Node)]
        form: Form,
        #[arg(long)]
        horizon: Option<u32>,
    },
}

/// Which deterministic-equivalent expansion to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Form {
    /// One column per (variable, tree node); implicit non-anticipativity.
    Node,
    /// One variable history per scenario with explicit coupling rows.
    Scenario,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Structured,
}

/// Entry point shared by `main` and tests. Returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };

    match cli.command {
        Command::Parse { model } => match read_model(&model) {
            Ok(parsed) => {
                print!("{}", format_model(&parsed));
                0
            }
            Err(message) => input_error(message),
        },
        Command::Validate { model, tree, horizon } => {
            match prepare(&model, &tree, horizon) {
                Ok((validated, tree)) => {
                    println!(
                        "model binds to horizon T={} ({} nodes, {} scenarios)",
                        tree.horizon(),
                        tree.nodes().len(),
                        tree.leaves().len()
                    );
                    for name in validated.implicit_params() {
                        println!("implicit stochastic parameter: {name}");
                    }
                    0
                }
                Err(message) => input_error(message),
            }
        }
        Command::Expand { model, tree, out, form, horizon } => {
            let expanded = prepare(&model, &tree, horizon)
                .and_then(|(validated, tree)| expand(&validated, &tree, form));
            match expanded {
                Ok(expanded) => {
                    let text = emit_lp_file(&expanded.lp, &expanded.labels());
                    if let Err(e) = fs::write(&out, text) {
                        return input_error(format!("cannot write {}: {e}", out.display()));
                    }
                    println!(
                        "wrote {} ({} columns, {} rows)",
                        out.display(),
                        expanded.lp.n_cols,
                        expanded.lp.n_rows()
                    );
                    0
                }
                Err(message) => input_error(message),
            }
        }
        Command::Solve { model, tree, format, form, horizon } => {
            let prepared = prepare(&model, &tree, horizon)
                .and_then(|(validated, tree)| Ok((expand(&validated, &tree, form)?, tree)));
            let (expanded, tree) = match prepared {
                Ok(p) => p,
                Err(message) => return solve_error(format, message),
            };
            let solution = match lp_solve(&expanded.lp) {
                Ok(s) => s,
                Err(e) => return solve_error(format, format!("solver fault: {e}")),
            };
            let report = RunReport::from_solution(&expanded, &tree, &solution);
            match format {
                OutputFormat::Text => print!("{}", report.to_text()),
                OutputFormat::Structured => println!("{}", report.to_json()),
            }
            match solution.status {
                Status::Optimal => 0,
                Status::Infeasible | Status::Unbounded => 1,
            }
        }
    }
}

fn input_error(message: String) -> i32 {
    eprintln!("error: {message}");
    2
}

fn solve_error(format: OutputFormat, message: String) -> i32 {
    match format {
        OutputFormat::Text => {
            eprintln!("error: {message}");
        }
        OutputFormat::Structured => println!("{}", RunReport::error(message).to_json()),
    }
    2
}

fn read_model(path: &Path) -> Result<MetaModel, String> {
    let src = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_source(&src).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_tree(path: &Path) -> Result<ScenarioTree, String> {
    let src = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    load_tree(&src).map_err(|e| format!("{}: {e}", path.display()))
}

/// Load both inputs, reconcile the horizon, and validate the model.
fn prepare(
    model_path: &Path,
    tree_path: &Path,
    horizon: Option<u32>,
) -> Result<(ValidatedModel, ScenarioTree), String> {
    let model = read_model(model_path)?;
    let tree = read_tree(tree_path)?;
    if let Some(requested) = horizon {
        if requested != tree.horizon() {
            return Err(format!(
                "requested horizon {requested} does not match tree horizon {} in {}",
                tree.horizon(),
                tree_path.display()
            ));
        }
    }
    let validated = validate_model(&model, tree.horizon())
        .map_err(|e| format!("{} does not validate at T={}:\n{e}", model_path.display(), tree.horizon()))?;
    Ok((validated, tree))
}

fn expand(
    model: &ValidatedModel,
    tree: &ScenarioTree,
    form: Form,
) -> Result<ExpandedModel, String> {
    let result = match form {
        Form::Node => expand_node_form(model, tree),
        Form::Scenario => expand_scenario_form(model, tree),
    };
    result.map_err(|e| format!("expansion failed: {e}"))
}
