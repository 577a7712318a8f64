fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(weylcount::cli::run(&args));
}
