fn main() {
    std::process::exit(kantorovich_cli::run(std::env::args_os()));
}
