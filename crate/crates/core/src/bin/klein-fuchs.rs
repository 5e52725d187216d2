fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(klein_fuchs::cli::run(&argv));
}
