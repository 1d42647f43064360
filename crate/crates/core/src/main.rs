use clap::Parser;
use mediator::cli::{run, Cli, RunConfig, EXIT_INPUT};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let (code, out) = run(&RunConfig::from_cli(cli));
    if code == EXIT_INPUT {
        eprint!("{out}");
    } else {
        print!("{out}");
    }
    std::process::exit(code);
}
