use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bureskit::bench::{run_bench, BenchConfig, BenchRoute};
use bureskit::coeffs::CoeffRoute;
use bureskit::error::{Error, Result};
use bureskit::matrix_file::{json_number, MatrixFile};
use bureskit::metric::{MetricReport, PreparedState};
use bureskit::oracle::bures_eigen_oracle;
use bureskit::random::{random_state, rng_from_seed, StateOptions};
use bureskit::selftest::{run_selftest, SelftestConfig, DEFAULT_SEED};
use bureskit::tolerance::Tolerances;

const EXIT_VALIDATION: u8 = 2;
const EXIT_CONDITIONING: u8 = 3;

#[derive(Parser)]
#[command(name = "bureskit", version, about = "Bures metric on positive Hermitian matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate g(Y', Y) at a state; Y' defaults to Y.
    Compute {
        state: PathBuf,
        y: PathBuf,
        yprime: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "all")]
        route: RouteArg,
        /// Build both coefficient routes and fail if they disagree.
        #[arg(long)]
        strict: bool,
    },
    /// Cross-validate every route on seeded random inputs.
    Selftest {
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Print a random state file.
    RandomState {
        n: usize,
        /// Smallest eigenvalue as a fraction of the mean eigenvalue.
        #[arg(long, default_value_t = 0.0)]
        spectrum_floor: f64,
        #[arg(long)]
        trace_one: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time the routes.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,6,8")]
        n_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "prop1,prop2,prop4,oracle,dense")]
        routes: Vec<String>,
        #[arg(long, default_value_t = 11)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RouteArg {
    Prop1,
    Prop2,
    Prop4,
    Oracle,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_conditioning() {
        EXIT_CONDITIONING
    } else {
        EXIT_VALIDATION
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tol = match Tolerances::from_env() {
        Ok(t) => t,
        Err(e) => return fail(&e),
    };
    match cli.command {
        Command::Compute {
            state,
            y,
            yprime,
            route,
            strict,
        } => compute(&state, &y, yprime.as_deref(), route, strict, &tol),
        Command::Selftest {
            n_max,
            samples,
            seed,
        } => {
            let report = run_selftest(&SelftestConfig {
                n_max,
                samples,
                seed,
                tol,
            });
            print!("{}", report.to_text());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::RandomState {
            n,
            spectrum_floor,
            trace_one,
            seed,
        } => {
            let opts = StateOptions {
                spectrum_floor,
                trace_one,
            };
            match random_state(n, &opts, &mut rng_from_seed(seed)) {
                Ok(s) => {
                    print!("{}", MatrixFile::from_state(&s).to_text());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Bench {
            n_list,
            routes,
            reps,
            seed,
            format,
        } => {
            let routes = match routes.iter().map(|r| BenchRoute::parse(r)).collect::<Result<Vec<_>>>() {
                Ok(r) => r,
                Err(e) => return fail(&e),
            };
            let cfg = BenchConfig {
                n_list,
                routes,
                reps,
                seed,
                tol,
            };
            match run_bench(&cfg) {
                Ok(report) => {
                    for w in &report.warnings {
                        eprintln!("warning: {w}");
                    }
                    match format {
                        Format::Text => print!("{}", report.to_text()),
                        Format::Json => print!("{}", report.to_json()),
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
    }
}

fn compute(
    state_path: &std::path::Path,
    y_path: &std::path::Path,
    yprime_path: Option<&std::path::Path>,
    route: RouteArg,
    strict: bool,
    tol: &Tolerances,
) -> ExitCode {
    let loaded = (|| -> Result<_> {
        let state = MatrixFile::load(state_path)?.into_state(tol)?;
        let y = MatrixFile::load(y_path)?.into_tangent(tol)?;
        let yp = match yprime_path {
            Some(p) => MatrixFile::load(p)?.into_tangent(tol)?,
            None => y.clone(),
        };
        y.check_dimension(state.n())?;
        yp.check_dimension(state.n())?;
        Ok((state, yp, y))
    })();
    let (state, yp, y) = match loaded {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    let n = state.n();
    let prepared = if strict {
        match PreparedState::strict(state, tol) {
            Ok(p) => p,
            Err(e) => return fail(&e),
        }
    } else {
        PreparedState::new(state, tol)
    };

    let routes: &[RouteArg] = match route {
        RouteArg::All => &[RouteArg::Prop1, RouteArg::Prop2, RouteArg::Prop4, RouteArg::Oracle],
        RouteArg::Prop1 => &[RouteArg::Prop1],
        RouteArg::Prop2 => &[RouteArg::Prop2],
        RouteArg::Prop4 => &[RouteArg::Prop4],
        RouteArg::Oracle => &[RouteArg::Oracle],
    };
    let mut entries = Vec::new();
    let mut values = Vec::new();
    let mut first_error: Option<Error> = None;
    for &r in routes {
        let result = match r {
            RouteArg::Prop1 => prepared.prop1(&yp, &y),
            RouteArg::Prop2 => prepared.prop2(&yp, &y),
            RouteArg::Prop4 => prepared.prop4(&yp, &y),
            RouteArg::Oracle => bures_eigen_oracle(prepared.state(), &yp, &y),
            RouteArg::All => unreachable!(),
        };
        match result {
            Ok(report) => {
                for w in &report.warnings {
                    eprintln!("warning: {}: {w}", report.route.name());
                }
                values.push(report.value);
                entries.push(report_json(&report));
            }
            Err(e) if e.is_conditioning() && routes.len() > 1 => {
                let name = match r {
                    RouteArg::Prop1 => "prop1",
                    RouteArg::Prop2 => "prop2",
                    RouteArg::Prop4 => "prop4",
                    _ => "oracle",
                };
                entries.push(format!(
                    "    {{\"route\": \"{name}\", \"error\": {}}}",
                    serde_json::to_string(&e.to_string()).unwrap_or_default()
                ));
                first_error.get_or_insert(e);
            }
            Err(e) => return fail(&e),
        }
    }

    let genericity = prepared.genericity();
    let mut doc = String::from("{\n  \"kind\": \"report\",\n");
    doc.push_str(&format!("  \"n\": {n},\n"));
    doc.push_str(&format!("  \"generic\": {},\n", genericity.generic));
    doc.push_str(&format!("  \"genericity_rcond\": {},\n", json_number(genericity.rcond)));
    doc.push_str(&format!("  \"strict\": {strict},\n"));
    if strict {
        let dev = prepared
            .coefficients(CoeffRoute::Companion)
            .and_then(|a| prepared.coefficients(CoeffRoute::Smith).map(|b| a.deviation(b)));
        if let Ok(d) = dev {
            doc.push_str(&format!("  \"coeff_route_deviation\": {},\n", json_number(d)));
        }
    }
    if route == RouteArg::All {
        let mut dev: f64 = 0.0;
        for (i, &u) in values.iter().enumerate() {
            for &v in &values[i + 1..] {
                dev = dev.max((u - v).abs());
            }
        }
        doc.push_str(&format!("  \"max_deviation\": {},\n", json_number(dev)));
    }
    doc.push_str(&format!("  \"results\": [\n{}\n  ]\n}}\n", entries.join(",\n")));
    print!("{doc}");
    match first_error {
        Some(e) => fail(&e),
        None => ExitCode::SUCCESS,
    }
}

fn report_json(r: &MetricReport) -> String {
    let mut fields = vec![
        format!("\"route\": \"{}\"", r.route.name()),
        format!("\"value\": {}", json_number(r.value)),
    ];
    if let Some(c) = r.coeff_route {
        fields.push(format!("\"coeff_route\": \"{}\"", c.name()));
    }
    if let Some(v) = r.parallel_part {
        fields.push(format!("\"parallel_part\": {}", json_number(v)));
    }
    if let Some(v) = r.orthogonal_part {
        fields.push(format!("\"orthogonal_part\": {}", json_number(v)));
    }
    if let Some(v) = r.residual {
        fields.push(format!("\"residual\": {}", json_number(v)));
    }
    let warnings: Vec<String> = r
        .warnings
        .iter()
        .map(|w| serde_json::to_string(w).unwrap_or_default())
        .collect();
    fields.push(format!("\"warnings\": [{}]", warnings.join(", ")));
    format!("    {{{}}}", fields.join(", "))
}
