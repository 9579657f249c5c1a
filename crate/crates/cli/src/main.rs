fn main() {
    std::process::exit(wan_cli::run_cli(std::env::args_os()));
}
