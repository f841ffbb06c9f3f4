fn main() {
    std::process::exit(msm_cli::run(std::env::args_os()));
}
