fn main() {
    std::process::exit(lebedev_cli::main_with_args(std::env::args_os()));
}
