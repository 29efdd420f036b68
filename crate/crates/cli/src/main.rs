fn main() {
    std::process::exit(firmsurv_cli::cli::run(std::env::args_os()));
}
