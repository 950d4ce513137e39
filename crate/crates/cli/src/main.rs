fn main() {
    std::process::exit(sqzlab_cli::run_cli(std::env::args_os()));
}
