fn main() {
    std::process::exit(forced_pruning::cli::main_with_args(std::env::args_os()));
}
