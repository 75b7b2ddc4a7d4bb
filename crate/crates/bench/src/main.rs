fn main() {
    let code = sella_bench::cli::cli_main(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
