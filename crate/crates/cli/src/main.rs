use std::path::PathBuf;
use std::process::ExitCode;

use blockea_cli::commands::{self, Format, RunOptions, DEFAULT_ALGORITHM};
use blockea_cli::{server, CliError, EXIT_FAILURE, EXIT_IO};
use blockea_core::interp::DEFAULT_MAX_ITERATIONS;
use blockea_core::runner::ThreadMode;
use clap::{Parser, Subcommand};

/// Run, check and export block-built evolutionary algorithms.
#[derive(Debug, Parser)]
#[command(name = "blockea", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Interpret a program, print its output and write exports.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// seq, all, pool (one worker per core) or pool:X.
        #[arg(long, default_value = "seq")]
        mode: ThreadMode,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Comma-separated export formats: csv, ioh.
        #[arg(long, value_delimiter = ',')]
        formats: Vec<Format>,
        /// IOH function name (default: the file name up to its first dot).
        #[arg(long)]
        function_name: Option<String>,
        /// IOH dimension (default: length of the longest best individual).
        #[arg(long)]
        dimension: Option<usize>,
        #[arg(long, default_value = DEFAULT_ALGORITHM)]
        algorithm: String,
        /// Loop iterations allowed per run before it halts.
        #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
        max_iterations: u64,
    },
    /// Print diagnostics; exit 0 iff there are no errors.
    Validate { file: PathBuf },
    /// Write a standalone Node.js bundle for a program.
    ExportCode {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "bundle")]
        out: PathBuf,
    },
    /// The shipped example programs.
    Examples {
        #[command(subcommand)]
        command: ExamplesCommand,
    },
    /// Serve the HTTP interface.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Debug, Subcommand)]
enum ExamplesCommand {
    /// One line per example: slug, name, description.
    List,
    /// Print an example's XML.
    Get { name: String },
}

fn report(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    if let CliError::Invalid { diagnostics, .. } = e {
        for d in diagnostics {
            eprintln!("  {d}");
        }
    }
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { file, seed, mode, out, formats, function_name, dimension, algorithm, max_iterations } => {
            let opts = RunOptions {
                seed,
                mode,
                out_dir: out,
                formats,
                function_name,
                dimension,
                algorithm,
                max_iterations,
                ..RunOptions::new(file)
            };
            commands::run(&opts, std::io::stdout()).map(|written| {
                for path in written {
                    eprintln!("wrote {}", path.display());
                }
            })
        }
        Command::Validate { file } => match commands::validate_file(&file, std::io::stdout()) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(EXIT_FAILURE),
            Err(e) => Err(e),
        },
        Command::ExportCode { file, seed, out } => commands::export_code(&file, seed, &out).map(|written| {
            for path in written {
                println!("{}", path.display());
            }
        }),
        Command::Examples { command: ExamplesCommand::List } => commands::list_examples(std::io::stdout())
            .map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source }),
        Command::Examples { command: ExamplesCommand::Get { name } } => commands::get_example(&name, std::io::stdout()),
        Command::Serve { port, host } => return serve(&host, port),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}

fn serve(host: &str, port: u16) -> ExitCode {
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: could not start the async runtime: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    };
    runtime.block_on(async {
        let listener = match tokio::net::TcpListener::bind((host, port)).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error: cannot bind {host}:{port}: {e}");
                return ExitCode::from(EXIT_IO);
            }
        };
        match listener.local_addr() {
            Ok(addr) => println!("listening on http://{addr}"),
            Err(_) => println!("listening on http://{host}:{port}"),
        }
        match server::serve(listener).await {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_IO)
            }
        }
    })
}
