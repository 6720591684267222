fn main() {
    std::process::exit(netcs::cli::main_with_args(std::env::args_os()));
}
