fn main() {
    std::process::exit(docalign_cli::main_with_args(std::env::args_os()));
}
