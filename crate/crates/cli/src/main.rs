fn main() {
    std::process::exit(locomotion_cli::run(std::env::args_os()));
}
