fn main() {
    std::process::exit(hyperrough::cli::main_with_args(std::env::args_os()));
}
