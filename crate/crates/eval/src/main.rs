fn main() {
    std::process::exit(dfax_eval::cli::run(std::env::args_os()));
}
