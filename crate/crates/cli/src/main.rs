fn main() {
    std::process::exit(crossim_cli::run(std::env::args_os()));
}
