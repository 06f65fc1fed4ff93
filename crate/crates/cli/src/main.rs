use clap::Parser;
use rsrag_cli::{run, Cli, CliError, ExitKind};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            eprintln!("{}", CliError::new(ExitKind::Input, "InvalidArguments", e.kind()).json_line());
            std::process::exit(ExitKind::Input.code());
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("{}", e.json_line());
        std::process::exit(e.exit_code);
    }
}
