fn main() {
    std::process::exit(hmm_credit::cli::run(std::env::args_os()));
}
