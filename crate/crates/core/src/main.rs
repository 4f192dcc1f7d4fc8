fn main() {
    std::process::exit(driftcl::cli::main_with_args(std::env::args_os()));
}
