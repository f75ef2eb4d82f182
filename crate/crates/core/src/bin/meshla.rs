fn main() {
    std::process::exit(meshla::cli::main_with_args(std::env::args_os()));
}
