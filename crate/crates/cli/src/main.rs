fn main() {
    std::process::exit(lowlight_cli::run(std::env::args_os()));
}
