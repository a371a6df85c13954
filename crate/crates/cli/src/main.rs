fn main() {
    std::process::exit(iapvq_cli::run(std::env::args_os()));
}
