//! Thin command-line frontend over the library. All policy lives in the
//! library crate; this file only parses arguments, wires files to functions
//! and formats output. Exit codes: 0 success, 1 usage error, 2 data or
//! domain error. Warnings go to stderr so stdout stays machine-parseable.

use clap::{Parser, Subcommand, ValueEnum};
use fairbench::data_io::{self, ComparisonTable};
use fairbench::experiments::{
    bound_check_experiment, ecdf, log_deviation_ratio, pairwise_pearson, simulate_fleet,
    type1_error_experiment, NoiseModel, SyntheticFleet,
};
use fairbench::runtime_model::{
    biased_estimate, build_gamma_curve, centered_estimate, fit_reference_regression, gamma_for,
    CalibrationModel, GammaCurve, MachineScore,
};
use fairbench::signtest::{run_comparison, Direction};
use std::path::PathBuf;
use std::process::ExitCode;

const CALIBRATION_ENV: &str = "FAIRBENCH_CALIBRATION";

#[derive(Parser)]
#[command(
    name = "fairbench",
    version,
    about = "Fair cross-machine comparison of optimization algorithms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Predict the conservatively biased equivalent runtime on machine 2.
    EquivalentRuntime {
        /// Accepted probability of over-estimating the runtime.
        p_gamma: f64,
        /// CPU score of the machine the published runtime comes from.
        s1: f64,
        /// CPU score of the machine the process will run on.
        s2: f64,
        /// Published runtime on machine 1, in seconds.
        t1: f64,
        /// Calibration file (defaults to the built-in calibration).
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Corrected one-sided sign-test p-value for statistic k out of n.
    CorrectedPValue { p_gamma: f64, n: u64, k: u64 },
    /// Fit a calibration from a runtime matrix and write it to a file.
    Calibrate {
        /// Runtime matrix CSV (machines x processes).
        #[arg(long)]
        matrix: PathBuf,
        /// Comma-separated increasing gamma values to evaluate.
        #[arg(long, value_delimiter = ',', required = true)]
        gamma_grid: Vec<f64>,
        /// Output calibration file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the corrected sign test on a comparison table.
    Compare {
        /// Comparison CSV (instance,t1,a[,t_hat2,b_hat]).
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        p_gamma: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = DirectionArg::Minimize)]
        direction: DirectionArg,
        /// CPU score of machine 1; required with --estimate-runtimes.
        #[arg(long)]
        s1: Option<f64>,
        /// CPU score of machine 2; required with --estimate-runtimes.
        #[arg(long)]
        s2: Option<f64>,
        /// Compute the t_hat2 column instead of requiring it in the file.
        #[arg(long, requires = "s1", requires = "s2")]
        estimate_runtimes: bool,
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Emit validation-study data series as CSV.
    Validate {
        #[command(subcommand)]
        task: ValidateTask,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Minimize,
    Maximize,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Minimize => Direction::Minimize,
            DirectionArg::Maximize => Direction::Maximize,
        }
    }
}

#[derive(Subcommand)]
enum ValidateTask {
    /// Type-I error rate of the plain sign test under extra runtime.
    Type1 {
        /// Extra runtime for the second run, in percent.
        #[arg(long, default_value_t = 0.0)]
        extra: f64,
        #[arg(long, default_value_t = 16)]
        instances: usize,
        #[arg(long, default_value_t = 1000)]
        reps: u64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Per-k verification that the corrected p-value bounds the adversary.
    Bound {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p_gamma: f64,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// ECDF of the log deviation ratio on a synthetic fleet.
    Ldr {
        #[arg(long, default_value_t = 8)]
        machines: usize,
        #[arg(long, default_value_t = 16)]
        processes: usize,
        /// Lognormal runtime noise level; 0 means noise-free.
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Pairwise Pearson correlations of machine runtime vectors.
    Pearson {
        #[arg(long, default_value_t = 8)]
        machines: usize,
        #[arg(long, default_value_t = 64)]
        processes: usize,
        #[arg(long, default_value_t = 0.05)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Data or domain failure; maps to exit code 2.
struct DataError(String);

impl<E: std::fmt::Display> From<E> for DataError {
    fn from(e: E) -> Self {
        DataError(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version on stdout with success status.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(DataError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_calibration(path: &Option<PathBuf>) -> Result<(CalibrationModel, GammaCurve), DataError> {
    let from_env = std::env::var_os(CALIBRATION_ENV).map(PathBuf::from);
    let path = path.clone().or(from_env);
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| DataError(format!("{}: {e}", p.display())))?;
            Ok(data_io::parse_calibration(&text)?)
        }
        None => Ok(fairbench::default_calibration()),
    }
}

fn read(path: &PathBuf) -> Result<String, DataError> {
    std::fs::read_to_string(path).map_err(|e| DataError(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<ExitCode, DataError> {
    match cli.command {
        Command::EquivalentRuntime {
            p_gamma,
            s1,
            s2,
            t1,
            calibration,
        } => {
            let (model, curve) = load_calibration(&calibration)?;
            let gamma = gamma_for(p_gamma, &curve)?;
            let est = biased_estimate(t1, s1, s2, &model, gamma)?;
            if est.out_of_range() {
                eprintln!(
                    "warning: score outside the calibrated interval [{}, {}]; prediction is an extrapolation",
                    model.score_min, model.score_max
                );
            }
            println!("{:.6}", est.seconds);
            Ok(ExitCode::SUCCESS)
        }
        Command::CorrectedPValue { p_gamma, n, k } => {
            if k > n {
                eprintln!("error: k ({k}) must not exceed n ({n})");
                return Ok(ExitCode::from(1));
            }
            let p = fairbench::corrected_p_value(p_gamma, n, k)?;
            println!("{p:.9}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Calibrate {
            matrix,
            gamma_grid,
            out,
        } => {
            let matrix = data_io::parse_runtime_matrix(&read(&matrix)?)?;
            let points: Vec<(f64, f64)> = (0..matrix.n_machines())
                .map(|mi| {
                    let total: f64 = (0..matrix.n_processes())
                        .map(|pi| matrix.runtime(mi, pi))
                        .sum();
                    (matrix.machines[mi].score, total)
                })
                .collect();
            let model = fit_reference_regression(&points)?;
            let mut curve = build_gamma_curve(&matrix, &gamma_grid)?;
            curve.provenance.push(format!(
                "fitted from a {}x{} runtime matrix; composite reference = sum of all processes",
                matrix.n_machines(),
                matrix.n_processes()
            ));
            std::fs::write(&out, data_io::write_calibration(&model, &curve))
                .map_err(|e| DataError(format!("{}: {e}", out.display())))?;
            println!(
                "slope={} intercept={} alpha={} rmse={} machines={} processes={} gamma_points={}",
                model.slope,
                model.intercept,
                model.alpha,
                model.fit_rmse,
                matrix.n_machines(),
                matrix.n_processes(),
                gamma_grid.len()
            );
            if !model.is_plausible() {
                eprintln!("warning: fitted slope is not negative; faster machines do not appear faster in this data");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare {
            table,
            p_gamma,
            alpha,
            direction,
            s1,
            s2,
            estimate_runtimes,
            calibration,
        } => {
            let mut table: ComparisonTable = data_io::parse_comparison(&read(&table)?)?;
            table.direction = direction.into();
            table.s1 = s1;
            table.s2 = s2;
            let mut warnings = Vec::new();
            if estimate_runtimes {
                let (model, curve) = load_calibration(&calibration)?;
                let gamma = gamma_for(p_gamma, &curve)?;
                let (s1, s2) = (s1.expect("required by clap"), s2.expect("required by clap"));
                for row in &mut table.rows {
                    let est = biased_estimate(row.t1, s1, s2, &model, gamma)?;
                    if est.out_of_range() {
                        warnings.push(format!(
                            "{}: score outside the calibrated interval [{}, {}]",
                            row.instance_id, model.score_min, model.score_max
                        ));
                    }
                    row.t_hat2 = Some(est.seconds);
                }
                if table.rows.iter().all(|r| r.b_hat.is_none()) {
                    // Step-2 usage: runtimes estimated, B not executed yet.
                    print!("{}", data_io::write_comparison(&table));
                    for w in &warnings {
                        eprintln!("warning: {w}");
                    }
                    return Ok(ExitCode::SUCCESS);
                }
            } else if table.rows.iter().any(|r| r.b_hat.is_none()) {
                return Err(DataError(
                    "table has rows without b_hat; run B first or pass --estimate-runtimes".into(),
                ));
            }
            let result = run_comparison(&table, p_gamma, alpha, table.direction)?;
            print!("{}", data_io::write_report(&result, &table, &warnings));
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { task } => {
            run_validate(task)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

// Synthetic fleet shared by the ldr and pearson subcommands: scores spread
// over the calibrated-score-like range, process costs spread geometrically.
fn standard_fleet(machines: usize, processes: usize, sigma: f64, seed: u64) -> SyntheticFleet {
    let machine_scores = (0..machines)
        .map(|i| {
            let s = 500.0 + 1500.0 * i as f64 / (machines.max(2) - 1) as f64;
            MachineScore::new(format!("m{i:02}"), s).expect("positive score")
        })
        .collect();
    let process_costs = (0..processes).map(|p| 0.5 * 1.1f64.powi(p as i32)).collect();
    SyntheticFleet {
        machines: machine_scores,
        process_costs,
        line_slope: -0.05,
        line_intercept: 180.0,
        noise: if sigma == 0.0 {
            NoiseModel::None
        } else {
            NoiseModel::MultiplicativeLognormal { sigma }
        },
        seed,
    }
}

fn run_validate(task: ValidateTask) -> Result<(), DataError> {
    match task {
        ValidateTask::Type1 {
            extra,
            instances,
            reps,
            alpha,
            seed,
        } => {
            let rate = type1_error_experiment(extra, instances, reps, alpha, seed)?;
            println!("extra_pct,rejection_rate");
            println!("{extra},{rate:.9}");
        }
        ValidateTask::Bound {
            n,
            p_gamma,
            reps,
            seed,
        } => {
            println!("k,empirical,corrected,std_error,satisfied");
            for row in bound_check_experiment(n, p_gamma, reps, seed)? {
                println!(
                    "{},{:.9},{:.9},{:.9},{}",
                    row.k, row.empirical, row.corrected, row.std_error, row.satisfied
                );
            }
        }
        ValidateTask::Ldr {
            machines,
            processes,
            sigma,
            seed,
        } => {
            let matrix = simulate_fleet(&standard_fleet(machines, processes, sigma, seed))?;
            let points: Vec<(f64, f64)> = (0..matrix.n_machines())
                .map(|mi| {
                    let total: f64 = (0..matrix.n_processes())
                        .map(|pi| matrix.runtime(mi, pi))
                        .sum();
                    (matrix.machines[mi].score, total)
                })
                .collect();
            let model = fit_reference_regression(&points)?;
            let mut ratios = Vec::new();
            for m1 in 0..matrix.n_machines() {
                for m2 in 0..matrix.n_machines() {
                    if m1 == m2 {
                        continue;
                    }
                    let s1 = matrix.machines[m1].score;
                    let s2 = matrix.machines[m2].score;
                    for pi in 0..matrix.n_processes() {
                        let est = centered_estimate(matrix.runtime(m1, pi), s1, s2, &model)?;
                        ratios.push(log_deviation_ratio(est.seconds, matrix.runtime(m2, pi))?);
                    }
                }
            }
            println!("log_deviation_ratio,cumulative_fraction");
            for (x, frac) in ecdf(&ratios)? {
                println!("{x:.6},{frac:.9}");
            }
        }
        ValidateTask::Pearson {
            machines,
            processes,
            sigma,
            seed,
        } => {
            let matrix = simulate_fleet(&standard_fleet(machines, processes, sigma, seed))?;
            let (mean, pairs) = pairwise_pearson(&matrix)?;
            println!("machine_a,machine_b,pearson");
            for (i, j, r) in pairs {
                println!(
                    "{},{},{r:.6}",
                    matrix.machines[i].cpu_model, matrix.machines[j].cpu_model
                );
            }
            println!("mean,,{mean:.6}");
        }
    }
    Ok(())
}
