use clap::Parser;

fn main() {
    let verbose = shapkadd::cli::Cli::try_parse()
        .map(|c| c.verbose)
        .unwrap_or(0);
    env_logger::Builder::new()
        .filter_level(shapkadd::cli::log_level(verbose))
        .parse_env("SHAPKADD_LOG")
        .init();
    let code = shapkadd::cli::main_with_args(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr(),
    );
    std::process::exit(code);
}
