fn main() {
    std::process::exit(smdenoise_cli::run(std::env::args_os()));
}
