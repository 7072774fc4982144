fn main() {
    std::process::exit(cembs_cli::run(std::env::args_os()));
}
