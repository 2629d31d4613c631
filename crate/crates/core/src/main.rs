fn main() {
    std::process::exit(magheat::cli_io::run_cli(std::env::args_os()));
}
