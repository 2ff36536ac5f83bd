fn main() {
    std::process::exit(bounded_irt::io::cli::main_with_args(std::env::args_os()));
}
