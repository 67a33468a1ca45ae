fn main() {
    std::process::exit(ptbreak::cli::execute(std::env::args_os()));
}
