fn main() {
    std::process::exit(sphere_cq::cli::main_with_args(std::env::args_os()));
}
