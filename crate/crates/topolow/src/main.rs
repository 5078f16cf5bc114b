fn main() {
    std::process::exit(topolow::cli::run());
}
