fn main() {
    std::process::exit(llrer::cli::run(std::env::args_os()));
}
