fn main() {
    std::process::exit(tensor_power::cli::run_cli(std::env::args_os()));
}
