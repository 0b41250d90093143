fn main() {
    std::process::exit(sexratio::harness::cli::main_with_args(std::env::args_os()));
}
