fn main() {
    std::process::exit(twinxfer::cli::main_with_args(std::env::args_os()));
}
