fn main() {
    std::process::exit(morphomod_cli::main_with_args(std::env::args_os()));
}
