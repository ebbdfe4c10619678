fn main() {
    std::process::exit(xmode_qed::cli::run(std::env::args_os()));
}
